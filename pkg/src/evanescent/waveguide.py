"""Modes of a rectangular box (waveguide) of cross-section a x b.

The photonic reading uses c = 1 and ``ω² = ω_c² + k²`` where ``ω_c`` is the mode
cutoff. Below cutoff the axial wavenumber is ``k = i|k|``: the wave is fed from
z = -∞ and decays toward +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from evanescent._errors import NotEvanescentError, OutOfBoxError
from evanescent._numerics import csqrt

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DispersionPoint",
    "ModeSpec",
    "axial_wavenumber",
    "below_cutoff_attenuation",
    "box_energy",
    "cutoff_frequency",
    "dispersion_point",
    "dispersion_scan",
    "mode_wavefunction",
    "section_group_delay",
]

DISPERSION_HEADER = ("omega", "omega_c", "k_re", "k_im", "v_p", "v_g")


class ModeSpec(BaseModel):
    """Box cross-section ``a x b`` and transverse mode indices ``(n1, n2)``."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0, allow_inf_nan=False)
    b: float = Field(gt=0, allow_inf_nan=False)
    n1: int = Field(default=1, ge=1)
    n2: int = Field(default=1, ge=1)

    @property
    def transverse_wavenumber_sq(self) -> float:
        return (math.pi * self.n1 / self.a) ** 2 + (math.pi * self.n2 / self.b) ** 2


@dataclass(frozen=True)
class DispersionPoint:
    """One sample of the mode dispersion relation.

    Above cutoff ``k`` is real and positive and ``v_p v_g = 1``. At or below
    cutoff ``k`` is purely imaginary (or zero) and both velocities are None:
    a group velocity carries no meaning for an evanescent wave.
    """

    omega: float
    omega_c: float
    k: complex
    v_p: float | None
    v_g: float | None

    @property
    def propagating(self) -> bool:
        return self.v_g is not None

    def as_row(self) -> tuple[Any, ...]:
        return (self.omega, self.omega_c, self.k.real, self.k.imag, self.v_p, self.v_g)


def cutoff_frequency(mode: ModeSpec) -> float:
    """Cutoff ``ω_c = π sqrt(n1²/a² + n2²/b²)`` (c = 1)."""
    return math.sqrt(mode.transverse_wavenumber_sq)


def axial_wavenumber(mode: ModeSpec, omega: float) -> complex:
    """Axial wavenumber ``k = sqrt(ω² - ω_c²)``; ``Im k > 0`` below cutoff."""
    if omega < 0:
        raise ValueError("omega must be >= 0.")
    # (ω - ω_c)(ω + ω_c) keeps |k| accurate near the threshold
    omega_c = cutoff_frequency(mode)
    return csqrt((omega - omega_c) * (omega + omega_c))


def box_energy(
    mode: ModeSpec, k: complex, mass: float = 1.0, hbar: float = 1.0
) -> complex:
    """Energy of the product state for a massive particle in the box.

    ``E = π²ħ²/(2m) (n1²/a² + n2²/b² + k²/π²)``; complex inputs continue
    analytically (``k = iκ`` replaces ``k²`` with ``-κ²``).
    """
    if mass <= 0 or hbar <= 0:
        raise ValueError("mass and hbar must be positive.")
    k = complex(k)
    return hbar**2 / (2 * mass) * (mode.transverse_wavenumber_sq + k * k)


def mode_wavefunction(
    mode: ModeSpec, k: complex
) -> Callable[[ArrayLike, ArrayLike, ArrayLike], NDArray[np.complex128]]:
    """Return an evaluator of ``sin(π n1 x/a) sin(π n2 y/b) exp(i k z)``.

    The amplitude is left unnormalized. The evaluator raises `OutOfBoxError`
    for points outside ``0 <= x <= a, 0 <= y <= b``.
    """
    kx = math.pi * mode.n1 / mode.a
    ky = math.pi * mode.n2 / mode.b
    k = complex(k)

    def evaluate(x: ArrayLike, y: ArrayLike, z: ArrayLike) -> NDArray[np.complex128]:
        xa, ya, za = np.asarray(x), np.asarray(y), np.asarray(z)
        if np.any((xa < 0) | (xa > mode.a) | (ya < 0) | (ya > mode.b)):
            raise OutOfBoxError(
                f"Point outside the {mode.a:g} x {mode.b:g} cross-section."
            )
        return np.sin(kx * xa) * np.sin(ky * ya) * np.exp(1j * k * za)

    return evaluate


def dispersion_point(mode: ModeSpec, omega: float) -> DispersionPoint:
    """Phase and group velocity of `mode` at `omega` (c = 1)."""
    omega_c = cutoff_frequency(mode)
    k = axial_wavenumber(mode, omega)
    if omega <= omega_c or k.real == 0.0:
        return DispersionPoint(omega, omega_c, k, None, None)
    kr = k.real
    root = math.hypot(kr, omega_c)
    return DispersionPoint(omega, omega_c, k, root / kr, kr / root)


def dispersion_scan(mode: ModeSpec, omegas: Iterable[float]) -> list[DispersionPoint]:
    """`dispersion_point` for every frequency, in input order."""
    return [dispersion_point(mode, float(w)) for w in omegas]


def below_cutoff_attenuation(mode: ModeSpec, omega: float, length: float) -> float:
    """Amplitude ratio ``exp(-|Im k| L)`` across a below-cutoff section."""
    if length < 0:
        raise ValueError("length must be >= 0.")
    if omega >= cutoff_frequency(mode):
        raise NotEvanescentError(
            f"omega={omega:g} is not below the cutoff {cutoff_frequency(mode):g}."
        )
    return math.exp(-abs(axial_wavenumber(mode, omega).imag) * length)


def section_group_delay(mode: ModeSpec, omega: float, length: float) -> float | None:
    """Real-time transit ``L / v_g`` of a section; None when `mode` is cut off.

    Diverges as ``omega`` approaches the cutoff from above.
    """
    point = dispersion_point(mode, omega)
    if point.v_g is None:
        return None
    return length / point.v_g
