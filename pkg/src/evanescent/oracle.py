"""Brute-force reference solutions of ``ψ'' + q(z) ψ = 0``.

These validators share nothing with the transfer-matrix code except the
branch convention for square roots. They integrate the ODE with fixed-step
classical Runge-Kutta:

- scattering amplitudes: from a pure outgoing (or decaying) wave on the exit
  side, backward to the entry side, where the field is split into incident and
  reflected waves. Backward integration follows the growing direction of any
  evanescent solution, so no accuracy is lost to cancellation.
- bound states: shooting from a Dirichlet wall with bisection on the value at
  the opposite wall.

``q`` is either ``n(z)²ω² - k_x²`` (Helmholtz form) or ``2m(E - U(z))/ħ²``
(Schrödinger form).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np
from pydantic import BaseModel, model_validator
from scipy import optimize, stats

from evanescent._errors import (
    BracketAmbiguousError,
    BracketEmptyError,
    EvanescentEntryError,
    NoConvergenceError,
)
from evanescent._logging import logger
from evanescent._numerics import chain_product, csqrt, rk4_step_matrices
from evanescent.wkb_phase import ComplexScalarField1D, Grid1D, PotentialProfile

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike, NDArray
    from typing_extensions import Self

    from evanescent.layered import MediumStack

__all__ = [
    "OracleResult",
    "PiecewiseProfile",
    "Profile1D",
    "Segment",
    "SlopeFit",
    "bound_state_energy",
    "fixed_step_amplitudes",
    "helmholtz_solution",
    "integrate_helmholtz_1d",
    "transmission_slope",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_POINTS = 2**20
# fraction of the grid at each end that must hold the asymptotic coefficient
TAIL_FRACTION = 0.05
# RK4 phase advance per step at the coarsest refinement level
_BASE_PHASE_STEP = 0.2
_CHUNK = 2**16


# ------------------------------- Profiles -------------------------------------


@dataclass(frozen=True, eq=False)
class Profile1D:
    """ODE coefficient sampled on a uniform grid with constant tails.

    The first and last 5% of the samples are the two semi-infinite media; the
    scattering reference planes are the grid ends.
    """

    grid: Grid1D
    coefficient: NDArray[np.float64]

    def __post_init__(self) -> None:
        coef = np.array(self.coefficient, dtype=np.float64)
        if coef.shape != (self.grid.n_points,):
            raise ValueError(
                f"Expected {self.grid.n_points} coefficients, got shape {coef.shape}."
            )
        if not np.all(np.isfinite(coef)):
            raise ValueError("Profile coefficients must be finite.")
        n_tail = max(1, math.ceil(TAIL_FRACTION * coef.size))
        for name, tail in (("entry", coef[:n_tail]), ("exit", coef[-n_tail:])):
            if np.ptp(tail) > 1e-12 * max(1.0, float(np.max(np.abs(tail)))):
                raise ValueError(f"The {name} tail of the profile must be constant.")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficient", coef)

    @property
    def entry_coefficient(self) -> float:
        return float(self.coefficient[0])

    @property
    def exit_coefficient(self) -> float:
        return float(self.coefficient[-1])

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[NDArray], ArrayLike]) -> Self:
        return cls(grid, np.asarray(func(grid.points), dtype=float))

    @classmethod
    def from_potential(
        cls, potential: PotentialProfile, mass: float = 1.0, hbar: float = 1.0
    ) -> Profile1D:
        """Schrödinger form ``-2 m V / ħ²`` of a zero-energy-form potential."""
        return cls(potential.grid, -2 * mass * potential.values / hbar**2)

    def to_json(self) -> str:
        return json.dumps(
            {"grid": self.grid.to_dict(), "coefficient": self.coefficient.tolist()}
        )

    @classmethod
    def from_json(cls, data: str | bytes) -> Profile1D:
        """Read ``{"grid", "coefficient"}``, or a potential document ``{"grid", "V"}``.

        A potential document is converted to Schrödinger form with ħ = m = 1.
        """
        doc = _ProfileDoc.model_validate_json(data)
        if doc.coefficient is not None:
            return cls(doc.grid, np.asarray(doc.coefficient))
        return cls(doc.grid, -2 * np.asarray(doc.V))


class _ProfileDoc(BaseModel):
    grid: Grid1D
    coefficient: list[float] | None = None
    V: list[float] | None = None

    @model_validator(mode="after")
    def _one_of(self) -> Self:
        if (self.coefficient is None) == (self.V is None):
            raise ValueError("Provide exactly one of 'coefficient' or 'V'.")
        return self


@dataclass(frozen=True)
class Segment:
    """A finite section of width `width`.

    `coefficient` is a constant or a function of the local coordinate
    ``0 <= z <= width``.
    """

    width: float
    coefficient: float | Callable[[NDArray], ArrayLike]

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError("Segment width must be positive.")

    def sample(self, z: NDArray) -> NDArray:
        if callable(self.coefficient):
            values = np.asarray(self.coefficient(z), dtype=float)
            return np.broadcast_to(values, z.shape)
        return np.full(z.shape, float(self.coefficient))

    def scale(self) -> float:
        """Largest local wavenumber (or decay constant) in the segment."""
        q = self.sample(np.linspace(0.0, self.width, 65))
        return float(np.sqrt(np.max(np.abs(q))))


@dataclass(frozen=True)
class PiecewiseProfile:
    """Segments between two semi-infinite media with constant coefficients.

    Interfaces coincide with step boundaries, so discontinuities cost no accuracy.
    The reference planes are the first and last segment boundaries.
    """

    entry: float
    segments: tuple[Segment, ...]
    exit: float

    @property
    def width(self) -> float:
        return math.fsum(s.width for s in self.segments)

    @classmethod
    def from_stack(
        cls, stack: MediumStack, omega: float, k_x: float
    ) -> PiecewiseProfile:
        """Helmholtz form ``ω²n² - k_x²`` of a layered stack."""

        def q(n: float) -> float:
            return (omega * n) ** 2 - k_x**2

        segments = tuple(Segment(layer.d, q(layer.n)) for layer in stack.layers)
        return cls(q(stack.entry.n), segments, q(stack.exit.n))

    @classmethod
    def barrier(
        cls,
        outside: float,
        inside: float | Callable[[NDArray], ArrayLike],
        width: float,
    ) -> PiecewiseProfile:
        """Single section of coefficient `inside` embedded in `outside`."""
        return cls(outside, (Segment(width, inside),), outside)


@dataclass(frozen=True)
class OracleResult:
    r: complex
    t: complex

    _keys: ClassVar[tuple[str, str]] = ("r", "t")

    def flux_balance(self, k_entry: complex, k_exit: complex) -> float:
        """``|r|² + (Re k_exit / Re k_entry) |t|²``, 1 for a lossless profile."""
        return abs(self.r) ** 2 + k_exit.real / k_entry.real * abs(self.t) ** 2

    def to_json(self) -> str:
        return json.dumps(
            {
                key: [getattr(self, key).real, getattr(self, key).imag]
                for key in self._keys
            }
        )

    @classmethod
    def from_json(cls, data: str | bytes) -> OracleResult:
        doc: dict[str, Any] = json.loads(data)
        return cls(complex(*doc["r"]), complex(*doc["t"]))


# ------------------------------- Integration ----------------------------------


def _segment_matrix(segment: Segment, n_steps: int) -> NDArray[np.complex128]:
    """Backward propagator across `segment` (exit side to entry side)."""
    step = segment.width / n_steps
    total = np.eye(2, dtype=np.complex128)
    for first in range(0, n_steps, _CHUNK):
        j = np.arange(first, min(first + _CHUNK, n_steps))
        z0 = segment.width - j * step
        mats = rk4_step_matrices(
            segment.sample(z0),
            segment.sample(z0 - 0.5 * step),
            segment.sample(z0 - step),
            -step,
        )
        total = chain_product(mats) @ total
    return total


def _match(propagator: NDArray, q_entry: float, q_exit: float) -> OracleResult:
    k_entry, k_exit = csqrt(q_entry), csqrt(q_exit)
    if k_entry.real <= 0.0:
        raise EvanescentEntryError(
            f"Entry coefficient {q_entry:g} does not support a propagating wave."
        )
    psi, w = propagator @ np.array([1.0, 1j * k_exit])
    t = 2 / (psi + w / (1j * k_entry))
    return OracleResult(r=complex(t * psi - 1), t=complex(t))


def _base_steps(profile: PiecewiseProfile) -> list[int]:
    return [
        max(4, math.ceil(s.width * max(s.scale(), 1.0 / s.width) / _BASE_PHASE_STEP))
        for s in profile.segments
    ]


def fixed_step_amplitudes(
    profile: PiecewiseProfile, refinement: int = 0
) -> OracleResult:
    """Amplitudes with the step count of every segment multiplied by 2**refinement."""
    if profile.entry <= 0:
        raise EvanescentEntryError(
            f"Entry coefficient {profile.entry:g} does not support a propagating wave."
        )
    total = np.eye(2, dtype=np.complex128)
    for segment, n0 in zip(profile.segments, _base_steps(profile)):
        total = total @ _segment_matrix(segment, n0 * 2**refinement)
    return _match(total, profile.entry, profile.exit)


def _sampled_matrices(profile: Profile1D, stride: int) -> NDArray[np.complex128]:
    c = profile.coefficient
    h = profile.grid.spacing
    start = np.arange(c.size - 1, 0, -2 * stride)
    return rk4_step_matrices(
        c[start], c[start - stride], c[start - 2 * stride], -2 * stride * h
    )


def _sampled_amplitudes(profile: Profile1D, stride: int) -> OracleResult:
    propagator = chain_product(_sampled_matrices(profile, stride))
    return _match(propagator, profile.entry_coefficient, profile.exit_coefficient)


def _change(a: OracleResult, b: OracleResult) -> float:
    scale_r = max(abs(b.r), abs(b.t))
    return max(abs(a.r - b.r) / scale_r, abs(a.t - b.t) / abs(b.t))


def integrate_helmholtz_1d(
    profile: Profile1D | PiecewiseProfile,
    tol: float = DEFAULT_TOL,
    max_points: int = DEFAULT_MAX_POINTS,
) -> OracleResult:
    """Reflection and transmission amplitudes of `profile` by RK4 integration.

    The step is halved until ``(r, t)`` changes by less than `tol` (relative to
    the larger amplitude for `r`, to ``|t|`` for `t`).

    For a sampled `Profile1D` each RK4 step spans two samples (the middle one is
    the half step), so the resolution is fixed by the grid: the check compares
    the full sample set with every other sample, and ``n_points - 1`` must be a
    multiple of 4.

    Raises
    ------
    NoConvergenceError
        If the tolerance is not reached within `max_points` points.
    EvanescentEntryError
        If the entry coefficient is not positive.
    """
    if isinstance(profile, Profile1D):
        if (profile.grid.n_points - 1) % 4:
            raise ValueError("Sampled profiles need n_points - 1 divisible by 4.")
        coarse = _sampled_amplitudes(profile, 2)
        fine = _sampled_amplitudes(profile, 1)
        if (change := _change(coarse, fine)) >= tol:
            raise NoConvergenceError(
                f"Sample spacing too coarse: halving the step changes (r, t) by "
                f"{change:.3g} (tolerance {tol:g}); resample the profile."
            )
        return fine

    base = sum(_base_steps(profile))
    previous: OracleResult | None = None
    level = 0
    while 2 * base * 2**level + 1 <= max_points:
        current = fixed_step_amplitudes(profile, level)
        if previous is not None:
            change = _change(previous, current)
            logger.debug(
                "oracle level %d: %d steps, change %.3g", level, base * 2**level, change
            )
            if change < tol:
                return current
        previous = current
        level += 1
    raise NoConvergenceError(f"No convergence to {tol:g} within {max_points} points.")


def helmholtz_solution(profile: Profile1D) -> ComplexScalarField1D:
    """The scattering wavefunction for unit incident amplitude.

    Sampled at the RK4 nodes, i.e. every other grid point.
    """
    if (profile.grid.n_points - 1) % 2:
        raise ValueError("Sampled profiles need an odd number of points.")
    mats = _sampled_matrices(profile, 1)
    k_exit = csqrt(profile.exit_coefficient)
    y = np.array([1.0, 1j * k_exit])
    nodes = [y[0]]
    for m in mats:
        y = m @ y
        nodes.append(y[0])
    result = _match(
        chain_product(mats), profile.entry_coefficient, profile.exit_coefficient
    )
    values = result.t * np.asarray(nodes[::-1])
    grid = profile.grid
    n_nodes = (grid.n_points + 1) // 2
    coarse = Grid1D(x_min=grid.x_min, x_max=grid.x_max, n_points=n_nodes)
    return ComplexScalarField1D(coarse, values)


# ------------------------------- Decay fits -----------------------------------


@dataclass(frozen=True)
class SlopeFit:
    """Decay constant from a least-squares fit of ``ln|t|`` against width."""

    kappa: float
    stderr: float
    intercept: float


def transmission_slope(
    family: Callable[[float], Profile1D | PiecewiseProfile],
    widths: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_points: int = DEFAULT_MAX_POINTS,
) -> SlopeFit:
    """Fit ``ln|t(L)| = c - κ L`` over profiles ``family(L)``."""
    if len(widths) < 4:
        raise ValueError("At least 4 widths are required.")
    log_t = [
        math.log(abs(integrate_helmholtz_1d(family(float(w)), tol, max_points).t))
        for w in widths
    ]
    fit = stats.linregress(np.asarray(widths, dtype=float), np.asarray(log_t))
    return SlopeFit(
        kappa=-float(fit.slope),
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
    )


# ------------------------------- Bound states ---------------------------------


def _shoot(
    potential: PotentialProfile, energy: float, mass: float, hbar: float
) -> NDArray[np.complex128]:
    u = potential.values
    q = 2 * mass * (energy - u) / hbar**2
    h = potential.grid.spacing
    start = np.arange(0, u.size - 1, 2)
    return rk4_step_matrices(q[start], q[start + 1], q[start + 2], 2 * h)


def _wall_value(
    potential: PotentialProfile, energy: float, mass: float, hbar: float
) -> float:
    y = chain_product(_shoot(potential, energy, mass, hbar)) @ np.array([0.0, 1.0])
    return float(y[0].real)


def _node_count(
    potential: PotentialProfile, energy: float, mass: float, hbar: float
) -> int:
    y = np.array([0.0, 1.0], dtype=np.complex128)
    values = []
    for m in _shoot(potential, energy, mass, hbar):
        y = m @ y
        values.append(y[0].real)
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs)))


def bound_state_energy(
    potential: PotentialProfile,
    bracket: tuple[float, float],
    mass: float = 1.0,
    hbar: float = 1.0,
    tol: float = 1e-12,
) -> float:
    """Eigenvalue of ``-ħ²/2m ψ'' + U ψ = E ψ`` with ψ = 0 at both grid ends.

    `potential` holds the physical potential `U`. The bracket must contain
    exactly one eigenvalue; this is checked by counting the nodes of the shooting
    solution at both ends of the bracket.

    Raises
    ------
    BracketEmptyError, BracketAmbiguousError
        If the bracket holds no eigenvalue, or more than one.
    """
    if (potential.grid.n_points - 1) % 2:
        raise ValueError("Shooting needs an odd number of grid points.")
    lo, hi = sorted(bracket)
    n_lo = _node_count(potential, lo, mass, hbar)
    n_hi = _node_count(potential, hi, mass, hbar)
    # zeros of the shooting solution inside the box count the eigenvalues below E
    if n_hi == n_lo:
        raise BracketEmptyError(f"No eigenvalue in [{lo:g}, {hi:g}].")
    if n_hi - n_lo > 1:
        raise BracketAmbiguousError(
            f"[{lo:g}, {hi:g}] contains {n_hi - n_lo} eigenvalues."
        )

    energy = optimize.bisect(
        lambda e: _wall_value(potential, e, mass, hbar),
        lo,
        hi,
        xtol=tol,
        rtol=4 * np.finfo(float).eps,
    )
    logger.debug("bound state in [%g, %g]: E = %.15g", lo, hi, energy)
    return float(energy)
