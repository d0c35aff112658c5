from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from evanescent._errors import NotEvanescentError, OutOfBoxError
from evanescent.waveguide import (
    ModeSpec,
    axial_wavenumber,
    below_cutoff_attenuation,
    box_energy,
    cutoff_frequency,
    dispersion_point,
    dispersion_scan,
    mode_wavefunction,
    section_group_delay,
)

SQUARE = ModeSpec(a=math.pi, b=math.pi)


def test_mode_spec() -> None:
    assert SQUARE.n1 == SQUARE.n2 == 1
    with pytest.raises(ValidationError):
        ModeSpec(a=0, b=1)
    with pytest.raises(ValidationError):
        ModeSpec(a=1, b=1, n1=0)


def test_cutoff_frequency() -> None:
    assert cutoff_frequency(SQUARE) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert cutoff_frequency(ModeSpec(a=1, b=2, n1=2, n2=1)) == pytest.approx(
        math.pi * math.sqrt(4 + 0.25)
    )


def test_axial_wavenumber_branches() -> None:
    assert axial_wavenumber(SQUARE, 2.0) == pytest.approx(math.sqrt(2))
    below = axial_wavenumber(SQUARE, 1.0)
    assert below.real == 0.0
    assert below.imag == pytest.approx(1.0)
    assert axial_wavenumber(SQUARE, cutoff_frequency(SQUARE)) == pytest.approx(0)
    with pytest.raises(ValueError):
        axial_wavenumber(SQUARE, -1.0)


@settings(deadline=None)
@given(
    a=st.floats(0.5, 5.0),
    b=st.floats(0.5, 5.0),
    scale=st.floats(1.0 + 1e-6, 50.0),
)
def test_velocity_product_above_cutoff(a: float, b: float, scale: float) -> None:
    mode = ModeSpec(a=a, b=b)
    point = dispersion_point(mode, scale * cutoff_frequency(mode))
    assert point.propagating
    assert point.v_p is not None and point.v_g is not None
    assert point.v_g < 1 < point.v_p
    assert point.v_p * point.v_g == pytest.approx(1.0, rel=1e-12)


@settings(deadline=None)
@given(fraction=st.floats(0.0, 1.0))
def test_no_velocities_at_or_below_cutoff(fraction: float) -> None:
    point = dispersion_point(SQUARE, fraction * cutoff_frequency(SQUARE))
    assert not point.propagating
    assert point.v_p is None
    assert point.v_g is None
    assert point.k.real == 0.0
    assert point.k.imag >= 0.0


def test_dispersion_scan() -> None:
    points = dispersion_scan(SQUARE, np.array([0.5, 1.0, 2.0, 4.0]))
    assert [p.omega for p in points] == [0.5, 1.0, 2.0, 4.0]
    assert [p.propagating for p in points] == [False, False, True, True]
    row = points[2].as_row()
    assert row[:4] == pytest.approx((2.0, math.sqrt(2), math.sqrt(2), 0.0))
    assert points[0].as_row()[4:] == (None, None)


def test_box_energy() -> None:
    assert box_energy(SQUARE, 0) == pytest.approx(1.0)
    assert box_energy(SQUARE, 1.0) == pytest.approx(1.5)
    # evanescent continuation lowers the energy below the transverse floor
    assert box_energy(SQUARE, 1j) == pytest.approx(0.5)
    assert box_energy(SQUARE, 0, mass=0.5, hbar=2.0) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        box_energy(SQUARE, 0, mass=0.0)


@pytest.mark.parametrize(("k", "mass", "hbar"), [(1.0, 1.0, 1.0), (2.0, 0.5, 1.5)])
def test_box_energy_tends_to_free_particle(k: float, mass: float, hbar: float) -> None:
    huge = ModeSpec(a=1e6, b=1e6)
    free = hbar**2 * k**2 / (2 * mass)
    assert box_energy(huge, k, mass=mass, hbar=hbar) == pytest.approx(free, rel=1e-6)


@pytest.mark.parametrize("k", [3.0, 2j], ids=["propagating", "evanescent"])
def test_mode_wavefunction_solves_helmholtz(k: complex) -> None:
    mode = ModeSpec(a=1.0, b=1.0)
    h = 1e-4
    steps = h * np.arange(10)
    x, y, z = np.meshgrid(0.3 + steps, 0.4 + steps, 0.5 + steps, indexing="ij")
    psi = mode_wavefunction(mode, k)(x, y, z)

    # seven-point Laplacian on the 8 x 8 x 8 interior of a 10³-point block
    core = psi[1:-1, 1:-1, 1:-1]
    laplacian = (
        psi[2:, 1:-1, 1:-1]
        + psi[:-2, 1:-1, 1:-1]
        + psi[1:-1, 2:, 1:-1]
        + psi[1:-1, :-2, 1:-1]
        + psi[1:-1, 1:-1, 2:]
        + psi[1:-1, 1:-1, :-2]
        - 6 * core
    ) / h**2
    omega_sq = mode.transverse_wavenumber_sq + complex(k) ** 2
    assert np.max(np.abs(laplacian + omega_sq * core)) < 1e-6


def test_mode_wavefunction() -> None:
    mode = ModeSpec(a=2.0, b=1.0)
    propagating = mode_wavefunction(mode, 3.0)
    assert propagating(1.0, 0.5, 0.0) == pytest.approx(1.0)
    assert abs(propagating(1.0, 0.5, 2.7)) == pytest.approx(1.0)
    assert propagating(0.0, 0.5, 0.0) == pytest.approx(0.0)

    evanescent = mode_wavefunction(mode, 2j)
    z = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(evanescent(1.0, 0.5, z), np.exp(-2 * z))

    with pytest.raises(OutOfBoxError):
        propagating(2.5, 0.5, 0.0)
    with pytest.raises(OutOfBoxError):
        propagating(np.array([0.5, 1.0]), np.array([0.5, -0.1]), 0.0)


def test_below_cutoff_attenuation() -> None:
    assert below_cutoff_attenuation(SQUARE, 1.0, 3.0) == pytest.approx(math.exp(-3.0))
    assert below_cutoff_attenuation(SQUARE, 1.0, 0.0) == 1.0
    with pytest.raises(NotEvanescentError):
        below_cutoff_attenuation(SQUARE, 2.0, 1.0)
    with pytest.raises(ValueError):
        below_cutoff_attenuation(SQUARE, 1.0, -1.0)


def test_section_group_delay() -> None:
    # v_g = k/ω = sqrt(2)/2 at ω = 2
    assert section_group_delay(SQUARE, 2.0, 5.0) == pytest.approx(5 * math.sqrt(2))
    assert section_group_delay(SQUARE, 1.0, 5.0) is None
    near = section_group_delay(SQUARE, cutoff_frequency(SQUARE) * (1 + 1e-8), 1.0)
    assert near is not None and near > 1e3
