"""Plane-wave scattering by planar interfaces and finite stacks of lossless layers.

Conventions
-----------
- c = 1, the wave travels in the xz plane and the stack is stratified along z.
- ``k_x = ω n_entry sin θ0`` is shared by every medium and
  ``k_z = sqrt(ω²n² - k_x²)`` is taken on the package branch
  (Re ≥ 0, then Im ≥ 0).
- S polarization amplitudes are for the transverse electric field. P polarization
  amplitudes are for the transverse magnetic field, whose flux weight is
  ``k_z / n²`` instead of ``k_z``.
- `r` and `t` are referenced to the entry and exit interfaces: the stack phase does
  not include any propagation in the two semi-infinite media.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from evanescent._errors import (
    DegenerateMatrixError,
    NotEvanescentError,
    PhaseJumpError,
    ZeroThicknessError,
)
from evanescent._logging import logger
from evanescent._numerics import csqrt

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

__all__ = [
    "FTIR_HEADER",
    "TIR_HEADER",
    "DelayHold",
    "FTIRRow",
    "Incidence",
    "Layer",
    "Medium",
    "MediumStack",
    "Polarization",
    "ScatteringResult",
    "TIRRow",
    "axial_group_velocity",
    "critical_angle",
    "effective_traversal_speed",
    "ftir_scan",
    "group_delay",
    "interface_amplitudes",
    "kz",
    "penetration_depth",
    "refraction_angle",
    "scatter_at",
    "stack_scattering",
    "tir_scan",
    "transverse_wavenumber",
]

Polarization = Literal["s", "p"]
DelayHold = Literal["kx", "angle"]

TIR_HEADER = ("theta0", "theta2_re", "theta2_im", "abs_r", "depth")
FTIR_HEADER = ("d", "abs_t2", "phase_t", "tau_g", "v_eff")

DEFAULT_REL_STEP = 1e-6
# |k_z| below this fraction of ω makes a layer matrix singular
_DEGENERATE_KZ = 1e-14


# ------------------------------- Types ----------------------------------------


class Medium(BaseModel):
    """Homogeneous lossless medium."""

    model_config = ConfigDict(frozen=True)

    n: float = Field(gt=0, allow_inf_nan=False)


class Layer(Medium):
    """A medium of finite thickness `d`."""

    d: float = Field(gt=0, allow_inf_nan=False)


class MediumStack(BaseModel):
    """Layers (in order of incidence) between two semi-infinite media."""

    model_config = ConfigDict(frozen=True)

    entry: Medium
    layers: tuple[Layer, ...] = ()
    exit: Medium

    @property
    def thickness(self) -> float:
        """Total thickness of the finite layers."""
        return math.fsum(layer.d for layer in self.layers)

    def reversed(self) -> MediumStack:
        """The same stack seen from the exit side."""
        return MediumStack(
            entry=self.exit, layers=tuple(reversed(self.layers)), exit=self.entry
        )

    def with_thickness(self, index: int, d: float) -> MediumStack:
        """Copy of the stack with layer `index` set to thickness `d`."""
        layers = list(self.layers)
        layers[index] = Layer(n=layers[index].n, d=d)
        return self.model_copy(update={"layers": tuple(layers)})

    @classmethod
    def symmetric_gap(cls, n_outer: float, n_gap: float, d: float) -> MediumStack:
        """``n_outer | n_gap (d) | n_outer``, the frustrated-reflection geometry."""
        outer = Medium(n=n_outer)
        return cls(entry=outer, layers=(Layer(n=n_gap, d=d),), exit=outer)


class Incidence(BaseModel):
    """Frequency, angle of incidence (radians) and polarization of a plane wave."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(gt=0, allow_inf_nan=False)
    theta0: float = Field(default=0.0, ge=0)
    polarization: Polarization = "s"

    @field_validator("theta0")
    @classmethod
    def _below_grazing(cls, value: float) -> float:
        if not value < math.pi / 2:
            raise ValueError("theta0 must be < π/2.")
        return value

    @property
    def wavelength(self) -> float:
        """Vacuum wavelength ``2π/ω``."""
        return 2 * math.pi / self.omega


@dataclass(frozen=True)
class ScatteringResult:
    """Complex amplitudes and the derived flux coefficients of one scattering event.

    `phase_t` is unwrapped: it counts the full ``Re(k_z) d`` advance of every
    layer, not just ``arg t``.
    """

    r: complex
    t: complex
    R: float
    T: float
    phase_t: float


# ------------------------------- Wave vectors ---------------------------------


def transverse_wavenumber(entry: Medium, inc: Incidence) -> float:
    """``k_x = ω n sin θ0``, conserved across all layers."""
    return inc.omega * entry.n * math.sin(inc.theta0)


def kz(medium: Medium, omega: float, k_x: float) -> complex:
    """Normal wavenumber in `medium`; imaginary (decaying toward +z) when evanescent."""
    if omega <= 0:
        raise ValueError("omega must be positive.")
    k = omega * medium.n
    return csqrt((k - k_x) * (k + k_x))


def refraction_angle(n1: float, n2: float, theta0: float) -> complex:
    """Angle of refraction from ``n2 sin θ2 = n1 sin θ0``, continued past TIR.

    Beyond the critical angle ``θ2 = π/2 - i arccosh(n1 sin θ0 / n2)``: ``sin θ2``
    stays real and ≥ 1 while ``cos θ2`` becomes positive imaginary.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("Refractive indices must be positive.")
    s = n1 * math.sin(theta0) / n2
    if s <= 1.0:
        return complex(math.asin(s), 0.0)
    return complex(math.pi / 2, -math.acosh(s))


def critical_angle(n1: float, n2: float) -> float | None:
    """Angle of incidence beyond which light in `n1` is totally reflected.

    None when going from a rarer to a denser medium.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("Refractive indices must be positive.")
    if n1 < n2:
        return None
    return math.asin(n2 / n1)


def _admittance(medium: Medium, k_z: complex, polarization: Polarization) -> complex:
    return k_z if polarization == "s" else k_z / medium.n**2


def axial_group_velocity(medium: Medium, omega: float, k_x: float) -> float | None:
    """``dω/dk_z = k_z / (ω n²)`` at fixed `k_x`; None for an evanescent wave."""
    k = kz(medium, omega, k_x)
    if k.imag != 0.0 or k.real == 0.0:
        return None
    return k.real / (omega * medium.n**2)


# ------------------------------- Scattering -----------------------------------


def interface_amplitudes(
    n1: float, n2: float, inc: Incidence
) -> tuple[complex, complex]:
    """Fresnel amplitudes ``(r, t)`` of a single ``n1 -> n2`` interface.

    Under total internal reflection ``|r| = 1`` and `r` carries the phase.
    """
    m1, m2 = Medium(n=n1), Medium(n=n2)
    k_x = transverse_wavenumber(m1, inc)
    q1 = _admittance(m1, kz(m1, inc.omega, k_x), inc.polarization)
    q2 = _admittance(m2, kz(m2, inc.omega, k_x), inc.polarization)
    return (q1 - q2) / (q1 + q2), 2 * q1 / (q1 + q2)


def scatter_at(
    stack: MediumStack, omega: float, k_x: float, polarization: Polarization = "s"
) -> ScatteringResult:
    """Transfer-matrix scattering of `stack` at an explicit transverse wavenumber.

    The field ``(ψ, ψ'/g)`` (g = 1 for S, n² for P) is carried from the exit
    interface, where only the transmitted wave exists, back to the entry
    interface, where it is split into incident and reflected parts.

    Raises
    ------
    DegenerateMatrixError
        If ``|k_z| < 1e-14 ω`` in the entry medium or any layer.
    """
    k_entry = kz(stack.entry, omega, k_x)
    k_exit = kz(stack.exit, omega, k_x)
    if abs(k_entry) < _DEGENERATE_KZ * omega:
        raise DegenerateMatrixError("Grazing incidence: k_z vanishes in the entry.")
    q_entry = _admittance(stack.entry, k_entry, polarization)
    q_exit = _admittance(stack.exit, k_exit, polarization)

    # field at the exit interface for unit transmitted amplitude
    psi, w = complex(1.0), 1j * q_exit
    advance = 0.0
    for i, layer in reversed(list(enumerate(stack.layers))):
        k = kz(layer, omega, k_x)
        if abs(k) < _DEGENERATE_KZ * omega:
            raise DegenerateMatrixError(
                f"Layer {i} (n={layer.n:g}) is at its propagation threshold; "
                "perturb the angle of incidence."
            )
        q = _admittance(layer, k, polarization)
        advance += (k * layer.d).real
        c, s = cmath.cos(k * layer.d), cmath.sin(k * layer.d)
        psi, w = c * psi - s / q * w, q * s * psi + c * w

    t = 2 / (psi + w / (1j * q_entry))
    r = t * psi - 1
    R = abs(r) ** 2  # noqa: N806
    T = q_exit.real / q_entry.real * abs(t) ** 2  # noqa: N806
    # the wrapped remainder is the interface (multiple-reflection) phase
    phase_t = advance + cmath.phase(t * cmath.exp(-1j * advance))
    return ScatteringResult(r=r, t=t, R=R, T=T, phase_t=phase_t)


def stack_scattering(stack: MediumStack, inc: Incidence) -> ScatteringResult:
    """Reflection and transmission of a plane wave by `stack`."""
    k_x = transverse_wavenumber(stack.entry, inc)
    return scatter_at(stack, inc.omega, k_x, inc.polarization)


def penetration_depth(n1: float, n2: float, inc: Incidence) -> float:
    """``1 / Im k_z`` of the evanescent wave in `n2` under total internal reflection.

    Raises
    ------
    NotEvanescentError
        At or below the critical angle.
    """
    m1 = Medium(n=n1)
    k2 = kz(Medium(n=n2), inc.omega, transverse_wavenumber(m1, inc))
    if k2.imag <= 0.0:
        raise NotEvanescentError(
            f"theta0={inc.theta0:g} is not beyond the critical angle "
            f"{critical_angle(n1, n2)}."
        )
    return 1.0 / k2.imag


# ------------------------------- Delays ---------------------------------------


def group_delay(
    stack: MediumStack,
    inc: Incidence,
    d_omega: float | None = None,
    hold: DelayHold = "kx",
    rel_step: float = DEFAULT_REL_STEP,
) -> float:
    """Frequency derivative of the transmission phase (stationary-phase delay).

    The derivative is a central difference at steps `d_omega` and `d_omega/2`
    combined by Richardson extrapolation. `d_omega` defaults to
    ``rel_step * omega``.

    With ``hold="kx"`` the transverse wavenumber is kept at its value for `inc`
    while ω varies, as in a waveguide whose cross-section fixes it. With
    ``hold="angle"`` the angle of incidence is kept instead.

    Raises
    ------
    PhaseJumpError
        If the unwrapped phase changes by π or more across the stencil.
    """
    omega = inc.omega
    h = rel_step * omega if d_omega is None else d_omega
    if not 0 < h < omega:
        raise ValueError(f"d_omega must lie in (0, omega); got {h!r}.")
    k_x0 = transverse_wavenumber(stack.entry, inc)
    sin_n = stack.entry.n * math.sin(inc.theta0)

    offsets = (-1.0, -0.5, 0.0, 0.5, 1.0)
    ts = []
    for o in offsets:
        w = omega + o * h
        k_x = k_x0 if hold == "kx" else w * sin_n
        ts.append(scatter_at(stack, w, k_x, inc.polarization).t)

    steps = [cmath.phase(b / a) for a, b in zip(ts[:-1], ts[1:])]
    phase = np.concatenate([[0.0], np.cumsum(steps)])
    if abs(phase[-1] - phase[0]) >= math.pi:
        raise PhaseJumpError(
            f"Transmission phase moves by {phase[-1] - phase[0]:.3g} rad over "
            f"±{h:g} around omega={omega:g}; use a smaller d_omega."
        )
    tau_h = (phase[4] - phase[0]) / (2 * h)
    tau_half = (phase[3] - phase[1]) / h
    return float((4 * tau_half - tau_h) / 3)


def effective_traversal_speed(
    stack: MediumStack,
    inc: Incidence,
    d_omega: float | None = None,
    hold: DelayHold = "kx",
    rel_step: float = DEFAULT_REL_STEP,
) -> float:
    """Apparent speed ``D / τ_g`` across the total layer thickness `D`.

    This is the ratio an outside observer would quote. It may exceed 1 when the
    stack is dominated by evanescent layers; it is not a signal velocity.

    Raises
    ------
    ZeroThicknessError
        If the stack has no layers.
    """
    thickness = stack.thickness
    if thickness <= 0:
        raise ZeroThicknessError("A stack without layers has no traversal length.")
    tau = group_delay(stack, inc, d_omega=d_omega, hold=hold, rel_step=rel_step)
    if tau == 0:
        return math.inf
    return thickness / tau


# ------------------------------- Scans ----------------------------------------


@dataclass(frozen=True)
class TIRRow:
    theta0: float
    theta2: complex
    abs_r: float
    depth: float | None

    def as_row(self) -> tuple[Any, ...]:
        return (self.theta0, self.theta2.real, self.theta2.imag, self.abs_r, self.depth)


@dataclass(frozen=True)
class FTIRRow:
    d: float
    abs_t2: float
    phase_t: float
    tau_g: float
    v_eff: float

    def as_row(self) -> tuple[Any, ...]:
        return (self.d, self.abs_t2, self.phase_t, self.tau_g, self.v_eff)


def tir_scan(
    n1: float,
    n2: float,
    thetas: Iterable[float],
    omega: float,
    polarization: Polarization = "s",
) -> list[TIRRow]:
    """Refraction angle, ``|r|`` and penetration depth over angles of incidence."""
    rows = []
    for theta in thetas:
        inc = Incidence(omega=omega, theta0=float(theta), polarization=polarization)
        r, _ = interface_amplitudes(n1, n2, inc)
        try:
            depth: float | None = penetration_depth(n1, n2, inc)
        except NotEvanescentError:
            depth = None
        theta2 = refraction_angle(n1, n2, inc.theta0)
        rows.append(TIRRow(inc.theta0, theta2, abs(r), depth))
    return rows


def ftir_scan(
    stack: MediumStack,
    d_values: Sequence[float],
    inc: Incidence,
    gap_index: int = 0,
    d_omega: float | None = None,
    hold: DelayHold = "kx",
    rel_step: float = DEFAULT_REL_STEP,
) -> list[FTIRRow]:
    """Transmission, phase and delay while layer `gap_index` is resized."""
    rows = []
    for d in d_values:
        sized = stack.with_thickness(gap_index, float(d))
        res = stack_scattering(sized, inc)
        tau = group_delay(sized, inc, d_omega=d_omega, hold=hold, rel_step=rel_step)
        v_eff = sized.thickness / tau if tau != 0 else math.inf
        rows.append(FTIRRow(float(d), abs(res.t) ** 2, res.phase_t, tau, v_eff))
        logger.debug("ftir d=%g |t|^2=%g tau=%g", d, abs(res.t) ** 2, tau)
    return rows
