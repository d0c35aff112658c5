from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from evanescent._errors import (
    DegenerateMatrixError,
    NotEvanescentError,
    PhaseJumpError,
    ZeroThicknessError,
)
from evanescent.layered import (
    Incidence,
    Layer,
    Medium,
    MediumStack,
    axial_group_velocity,
    critical_angle,
    effective_traversal_speed,
    ftir_scan,
    group_delay,
    interface_amplitudes,
    kz,
    penetration_depth,
    refraction_angle,
    scatter_at,
    stack_scattering,
    tir_scan,
    transverse_wavenumber,
)

GLASS, AIR = 1.5, 1.0
OMEGA = 2 * math.pi
THETA_C = math.asin(AIR / GLASS)

indices = st.floats(1.0, 2.5)
angles = st.floats(0.0, 1.45)


def _saturated_delay(n1: float, theta0: float, omega: float) -> float:
    """Thick-gap limit of the s-polarized delay through an air gap at fixed k_x.

    For a thick gap ``t ∝ exp(-κd) / (1 + i g/2)`` with ``g = κ/q - q/κ``.
    """
    k_x = omega * n1 * math.sin(theta0)
    q = math.sqrt(omega**2 * n1**2 - k_x**2)
    kappa = math.sqrt(k_x**2 - omega**2)
    dq = omega * n1**2 / q
    dkappa = -omega / kappa
    g = kappa / q - q / kappa
    dg = (dkappa * q - kappa * dq) / q**2 - (dq * kappa - q * dkappa) / kappa**2
    return -(dg / 2) / (1 + (g / 2) ** 2)


def test_models() -> None:
    with pytest.raises(ValidationError):
        Medium(n=0)
    with pytest.raises(ValidationError):
        Layer(n=1.5, d=0)
    with pytest.raises(ValidationError):
        Incidence(omega=1.0, theta0=math.pi / 2)
    assert Incidence(omega=OMEGA).wavelength == pytest.approx(1.0)

    stack = MediumStack(
        entry=Medium(n=1.2),
        layers=(Layer(n=1.5, d=0.1), Layer(n=2.0, d=0.2)),
        exit=Medium(n=1.0),
    )
    assert stack.thickness == pytest.approx(0.3)
    rev = stack.reversed()
    assert rev.entry.n == 1.0
    assert [layer.n for layer in rev.layers] == [2.0, 1.5]
    assert stack.with_thickness(1, 5.0).layers[1] == Layer(n=2.0, d=5.0)
    assert stack.layers[1].d == 0.2


def test_critical_angle() -> None:
    assert critical_angle(GLASS, AIR) == pytest.approx(math.asin(2 / 3))
    assert critical_angle(AIR, GLASS) is None
    assert critical_angle(GLASS, GLASS) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        critical_angle(0.0, 1.0)


def test_kz_branch() -> None:
    assert kz(Medium(n=1.0), OMEGA, 0.0) == pytest.approx(OMEGA)
    evanescent = kz(Medium(n=1.0), OMEGA, 2 * OMEGA)
    assert evanescent.real == 0.0
    assert evanescent.imag == pytest.approx(math.sqrt(3) * OMEGA)
    with pytest.raises(ValueError):
        kz(Medium(n=1.0), 0.0, 0.0)


@settings(deadline=None)
@given(n1=indices, n2=indices, theta0=angles)
def test_snell_continued_past_critical(n1: float, n2: float, theta0: float) -> None:
    theta2 = refraction_angle(n1, n2, theta0)
    assert n2 * cmath.sin(theta2) == pytest.approx(n1 * math.sin(theta0), rel=1e-9)
    assert cmath.cos(theta2).imag >= 0.0


@pytest.mark.parametrize("polarization", ["s", "p"])
def test_interface_amplitudes(polarization: str) -> None:
    normal = Incidence(omega=OMEGA, polarization=polarization)
    r, t = interface_amplitudes(GLASS, AIR, normal)
    # the p amplitude is for the magnetic field
    expected = 0.2 if polarization == "s" else -0.2
    assert r == pytest.approx(expected)
    assert t == pytest.approx(1 + expected)

    beyond = Incidence(omega=OMEGA, theta0=THETA_C + 0.2, polarization=polarization)
    r, _ = interface_amplitudes(GLASS, AIR, beyond)
    assert abs(r) == pytest.approx(1.0, abs=1e-14)


def test_reflection_continuous_at_critical_angle() -> None:
    delta = 1e-6
    below = Incidence(omega=OMEGA, theta0=THETA_C - delta)
    above = Incidence(omega=OMEGA, theta0=THETA_C + delta)
    r_below, _ = interface_amplitudes(GLASS, AIR, below)
    r_above, _ = interface_amplitudes(GLASS, AIR, above)
    assert abs(r_above - r_below) <= 5 * math.sqrt(delta)


@pytest.mark.parametrize("polarization", ["s", "p"])
@pytest.mark.parametrize("theta0", [0.0, 0.5, THETA_C + 0.1, 1.3])
def test_no_layers_is_an_interface(theta0: float, polarization: str) -> None:
    inc = Incidence(omega=OMEGA, theta0=theta0, polarization=polarization)
    stack = MediumStack(entry=Medium(n=GLASS), exit=Medium(n=AIR))
    res = stack_scattering(stack, inc)
    r, t = interface_amplitudes(GLASS, AIR, inc)
    assert res.r == pytest.approx(r, abs=1e-14)
    assert res.t == pytest.approx(t, abs=1e-14)


@st.composite
def stacks(draw: st.DrawFn) -> MediumStack:
    n_layers = draw(st.integers(0, 3))
    layers = tuple(
        Layer(n=draw(indices), d=draw(st.floats(0.01, 1.0))) for _ in range(n_layers)
    )
    entry, exit_ = Medium(n=draw(indices)), Medium(n=draw(indices))
    return MediumStack(entry=entry, layers=layers, exit=exit_)


@settings(deadline=None, max_examples=200)
@given(stack=stacks(), theta0=angles, polarization=st.sampled_from(["s", "p"]))
def test_lossless_stacks_conserve_flux(
    stack: MediumStack, theta0: float, polarization: str
) -> None:
    inc = Incidence(omega=OMEGA, theta0=theta0, polarization=polarization)
    try:
        res = stack_scattering(stack, inc)
    except DegenerateMatrixError:
        return
    assert res.R + res.T == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= res.T <= 1.0 + 1e-12


@pytest.mark.parametrize("polarization", ["s", "p"])
def test_transmission_is_reciprocal(polarization: str) -> None:
    stack = MediumStack(
        entry=Medium(n=1.2),
        layers=(Layer(n=2.1, d=0.3), Layer(n=1.0, d=0.15), Layer(n=1.7, d=0.4)),
        exit=Medium(n=1.6),
    )
    k_x = OMEGA * 1.1
    forward = scatter_at(stack, OMEGA, k_x, polarization)
    backward = scatter_at(stack.reversed(), OMEGA, k_x, polarization)
    assert forward.T == pytest.approx(backward.T, rel=1e-10)
    assert forward.R == pytest.approx(backward.R, rel=1e-10)


def test_degenerate_layer() -> None:
    stack = MediumStack.symmetric_gap(GLASS, AIR, 1.0)
    with pytest.raises(DegenerateMatrixError, match="threshold"):
        scatter_at(stack, OMEGA, OMEGA * AIR)


def test_penetration_depth(ftir_incidence: Incidence) -> None:
    k_x = transverse_wavenumber(Medium(n=GLASS), ftir_incidence)
    kappa = math.sqrt(k_x**2 - OMEGA**2)
    assert penetration_depth(GLASS, AIR, ftir_incidence) == pytest.approx(1 / kappa)
    with pytest.raises(NotEvanescentError):
        penetration_depth(GLASS, AIR, Incidence(omega=OMEGA, theta0=0.1))
    with pytest.raises(NotEvanescentError):
        penetration_depth(AIR, GLASS, Incidence(omega=OMEGA, theta0=1.0))


def test_axial_group_velocity() -> None:
    assert axial_group_velocity(Medium(n=GLASS), OMEGA, 0.0) == pytest.approx(1 / GLASS)
    assert axial_group_velocity(Medium(n=AIR), OMEGA, 2 * OMEGA) is None


def test_tir_scan() -> None:
    rows = tir_scan(GLASS, AIR, [0.0, THETA_C + 0.1], OMEGA)
    normal, beyond = rows
    assert normal.abs_r == pytest.approx(0.2)
    assert normal.depth is None
    assert normal.theta2 == 0.0
    assert beyond.abs_r == pytest.approx(1.0)
    assert beyond.depth is not None and beyond.depth > 0
    assert beyond.theta2.real == pytest.approx(math.pi / 2)
    assert beyond.theta2.imag < 0
    assert beyond.as_row()[-1] == beyond.depth


# ------------------------------- Delays ---------------------------------------


@pytest.mark.parametrize("hold", ["kx", "angle"])
def test_index_matched_slab_delay(hold: str) -> None:
    stack = MediumStack(
        entry=Medium(n=GLASS), layers=(Layer(n=GLASS, d=2.0),), exit=Medium(n=GLASS)
    )
    inc = Incidence(omega=OMEGA)
    assert stack_scattering(stack, inc).t == pytest.approx(cmath.exp(1j * OMEGA * 3.0))
    assert group_delay(stack, inc, hold=hold) == pytest.approx(3.0, rel=1e-8)
    assert effective_traversal_speed(stack, inc) == pytest.approx(1 / GLASS, rel=1e-8)


def test_slab_resonance_delay() -> None:
    # half-wave resonance: the delay is nL (1 + r²) / (1 - r²) with r = -0.2
    stack = MediumStack(
        entry=Medium(n=AIR), layers=(Layer(n=GLASS, d=2.0),), exit=Medium(n=AIR)
    )
    inc = Incidence(omega=OMEGA)
    assert stack_scattering(stack, inc).T == pytest.approx(1.0)
    assert group_delay(stack, inc) == pytest.approx(3.0 * 1.04 / 0.96, rel=1e-8)


@pytest.mark.parametrize("outer", [GLASS, AIR], ids=["index_matched", "air_clad"])
def test_transmission_phase_is_unwrapped(outer: float) -> None:
    # n ω L = 6π: both slabs are at resonance and the interfaces add no phase
    stack = MediumStack(
        entry=Medium(n=outer), layers=(Layer(n=GLASS, d=2.0),), exit=Medium(n=outer)
    )
    res = stack_scattering(stack, Incidence(omega=OMEGA))
    assert res.phase_t == pytest.approx(6 * math.pi, rel=1e-12)
    assert cmath.exp(1j * res.phase_t) == pytest.approx(res.t / abs(res.t))


def test_delay_saturates_at_fixed_kx(
    ftir_stack: MediumStack, ftir_incidence: Incidence
) -> None:
    expected = _saturated_delay(GLASS, ftir_incidence.theta0, OMEGA)
    rows = ftir_scan(ftir_stack, [5.0, 10.0], ftir_incidence)
    assert rows[0].tau_g == pytest.approx(expected, rel=1e-6)
    assert rows[1].tau_g == pytest.approx(expected, rel=1e-6)
    # the apparent speed grows with the gap and exceeds c
    assert rows[1].v_eff == pytest.approx(2 * rows[0].v_eff, rel=1e-6)
    assert rows[1].v_eff > 1.0


def test_delay_vanishes_at_fixed_angle(
    ftir_stack: MediumStack, ftir_incidence: Incidence
) -> None:
    thick = ftir_stack.with_thickness(0, 10.0)
    assert abs(group_delay(thick, ftir_incidence, hold="angle")) < 1e-6


def test_phase_jump() -> None:
    vacuum = Medium(n=1.0)
    stack = MediumStack(entry=vacuum, layers=(Layer(n=1.0, d=10.0),), exit=vacuum)
    inc = Incidence(omega=1.0)
    with pytest.raises(PhaseJumpError):
        group_delay(stack, inc, d_omega=0.2)
    assert group_delay(stack, inc, d_omega=0.01) == pytest.approx(10.0, rel=1e-8)
    with pytest.raises(ValueError):
        group_delay(stack, inc, d_omega=2.0)


def test_zero_thickness() -> None:
    stack = MediumStack(entry=Medium(n=GLASS), exit=Medium(n=AIR))
    with pytest.raises(ZeroThicknessError):
        effective_traversal_speed(stack, Incidence(omega=OMEGA))


def test_ftir_scan(ftir_stack: MediumStack, ftir_incidence: Incidence) -> None:
    d_values = np.linspace(0.05, 1.0, 20)
    rows = ftir_scan(ftir_stack, d_values, ftir_incidence)
    assert [r.d for r in rows] == pytest.approx(d_values)
    t2 = [r.abs_t2 for r in rows]
    assert all(a > b for a, b in zip(t2, t2[1:]))
    # continuous in d
    phases = np.array([r.phase_t for r in rows])
    assert np.all(np.abs(np.diff(phases)) < math.pi)
    assert all(r.v_eff == pytest.approx(r.d / r.tau_g) for r in rows)


@pytest.mark.parametrize("n_exit", [GLASS, 1.3])
@pytest.mark.parametrize("polarization", ["s", "p"])
def test_ftir_closes_as_gap_vanishes(n_exit: float, polarization: str) -> None:
    stack = MediumStack(
        entry=Medium(n=GLASS), layers=(Layer(n=AIR, d=1.0),), exit=Medium(n=n_exit)
    )
    inc = Incidence(omega=OMEGA, theta0=THETA_C + 0.1, polarization=polarization)
    _, t_direct = interface_amplitudes(GLASS, n_exit, inc)
    # d in units of the vacuum wavelength, which is 1 here
    (row,) = ftir_scan(stack, [1e-6], inc)
    assert math.sqrt(row.abs_t2) == pytest.approx(abs(t_direct), rel=1e-8)
    assert row.phase_t == pytest.approx(cmath.phase(t_direct), abs=1e-4)
