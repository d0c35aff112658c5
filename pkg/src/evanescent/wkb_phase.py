"""Complex-phase (WKB) decomposition of stationary states on a 1D grid.

A stationary state is written ``Ψ = C exp(-(S_r + i S_i)/ħ)``. `S_i` carries the
oscillating (real-time) part of the phase and `S_r` the decaying (imaginary-time)
part. Potentials are stored in zero-energy form, ``V = U - E``, so that allowed
regions have ``V < 0`` and forbidden regions ``V > 0``.

Units default to ħ = m = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, ClassVar, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from evanescent._errors import (
    GridMismatchError,
    MixedRegionError,
    RegionChangedError,
    UnwrapAmbiguityError,
    ZeroAmplitudeError,
)
from evanescent._logging import logger
from evanescent._numerics import gradient, laplacian

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from numpy.typing import ArrayLike, NDArray
    from typing_extensions import Self

__all__ = [
    "ComplexScalarField1D",
    "Grid1D",
    "PotentialProfile",
    "RealField1D",
    "Region",
    "RegionClassification",
    "RegionKind",
    "RegionReport",
    "WKBAction",
    "WKBReport",
    "assemble_wavefunction",
    "classify_regions",
    "hj_residual_classical",
    "hj_residual_quantum",
    "imaginary_time_lapse",
    "split_phase",
    "wkb_action",
    "wkb_report",
]

DEFAULT_REL_TOL = 1e-12
# nearest-branch increments this close to π cannot be told apart from -π
_UNWRAP_LIMIT = math.pi * (1 - 1e-9)


# ------------------------------- Grid -----------------------------------------


class Grid1D(BaseModel):
    """Uniform grid on ``[x_min, x_max]`` with `n_points` samples."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    x_min: float
    x_max: float
    n_points: int = Field(alias="n", ge=3)

    @model_validator(mode="after")
    def _check_bounds(self) -> Self:
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("Grid bounds must be finite.")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min ({self.x_min}) must be < x_max ({self.x_max}).")
        return self

    @property
    def spacing(self) -> float:
        """Distance between adjacent samples."""
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> NDArray[np.float64]:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def sub_grid(self, start: int, stop: int) -> Grid1D:
        """Grid over the samples ``start .. stop - 1``."""
        x = self.points
        return Grid1D(x_min=x[start], x_max=x[stop - 1], n_points=stop - start)

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(by_alias=True)


def _check_same_grid(*fields: _SampledField) -> Grid1D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"Grid mismatch: {f.grid!r} != {grid!r}")
    return grid


# ------------------------------- Fields ---------------------------------------


@dataclass(frozen=True, eq=False)
class _SampledField:
    """Values sampled on a `Grid1D`. Values are copied and made read-only."""

    grid: Grid1D
    values: NDArray

    _dtype: ClassVar[type] = np.float64

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=self._dtype)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"Expected {self.grid.n_points} values, got shape {values.shape}."
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{type(self).__name__} values must be finite.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[NDArray], ArrayLike]) -> Self:
        """Sample `func` on the grid points."""
        return cls(grid, np.asarray(func(grid.points)))

    @property
    def x(self) -> NDArray[np.float64]:
        return self.grid.points

    def derivative(self) -> NDArray:
        return gradient(self.values, self.grid.spacing)


@dataclass(frozen=True, eq=False)
class RealField1D(_SampledField):
    """Real scalar field (phases, residuals)."""


@dataclass(frozen=True, eq=False)
class ComplexScalarField1D(_SampledField):
    """Complex scalar field (wavefunctions and prefactors)."""

    _dtype: ClassVar[type] = np.complex128

    def to_json(self) -> str:
        doc = {
            "grid": self.grid.to_dict(),
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, data: str | bytes) -> ComplexScalarField1D:
        doc = _ComplexFieldDoc.model_validate_json(data)
        values = np.array([complex(re, im) for re, im in doc.values])
        return cls(doc.grid, values)


@dataclass(frozen=True, eq=False)
class PotentialProfile(_SampledField):
    """Zero-energy-form potential ``V = U - E`` sampled on a grid."""

    @property
    def V(self) -> NDArray[np.float64]:  # noqa: N802
        return self.values

    @classmethod
    def from_energy(
        cls, grid: Grid1D, potential: Callable[[NDArray], ArrayLike], energy: float
    ) -> PotentialProfile:
        """Build ``V = U(x) - E`` from a physical potential `U`."""
        return cls(grid, np.asarray(potential(grid.points), dtype=float) - energy)

    def shifted(self, delta: float) -> PotentialProfile:
        return PotentialProfile(self.grid, self.values + delta)

    def restrict(self, region: Region) -> PotentialProfile:
        """The profile on the samples of `region` only."""
        grid = self.grid.sub_grid(region.start, region.stop)
        return PotentialProfile(grid, self.values[region.start : region.stop])

    def to_json(self) -> str:
        return json.dumps({"grid": self.grid.to_dict(), "V": self.values.tolist()})

    @classmethod
    def from_json(cls, data: str | bytes) -> PotentialProfile:
        doc = _PotentialDoc.model_validate_json(data)
        return cls(doc.grid, np.asarray(doc.V, dtype=float))


class _ComplexFieldDoc(BaseModel):
    grid: Grid1D
    values: list[tuple[float, float]]


class _PotentialDoc(BaseModel):
    grid: Grid1D
    V: list[float]


# ------------------------------- Regions --------------------------------------


class RegionKind(str, Enum):
    """Classical character of a stretch of the potential."""

    ALLOWED = "allowed"
    FORBIDDEN = "forbidden"
    TURNING_POINT = "turning_point"

    def __str__(self) -> str:
        """Return value as the string representation."""
        return str(self.value)


@dataclass(frozen=True)
class Region:
    """An interval of one kind; samples ``start .. stop - 1`` lie inside it."""

    x_a: float
    x_b: float
    kind: RegionKind
    start: int
    stop: int

    @property
    def width(self) -> float:
        return self.x_b - self.x_a


@dataclass(frozen=True)
class RegionClassification:
    """Ordered regions covering the grid; neighbours share an endpoint."""

    regions: tuple[Region, ...]
    tol: float

    def __iter__(self) -> Iterator[Region]:
        return iter(self.regions)

    def __len__(self) -> int:
        return len(self.regions)

    def __getitem__(self, index: int) -> Region:
        return self.regions[index]

    def of_kind(self, kind: RegionKind) -> list[Region]:
        return [r for r in self.regions if r.kind is kind]

    @property
    def kinds(self) -> list[RegionKind]:
        return [r.kind for r in self.regions]


def _default_tol(values: NDArray, rel_tol: float) -> float:
    return rel_tol * float(np.max(np.abs(values))) if values.size else 0.0


def classify_regions(
    V: PotentialProfile, tol: float | None = None, rel_tol: float = DEFAULT_REL_TOL
) -> RegionClassification:
    """Split the grid into maximal allowed, forbidden and turning-point intervals.

    A sample is allowed when ``V < -tol``, forbidden when ``V > tol`` and a turning
    point otherwise. `tol` defaults to ``rel_tol * max|V|``.

    Between an allowed and a forbidden run the boundary is the linearly
    interpolated zero crossing; a turning-point run is bounded by its own samples.
    """
    v = V.values
    x = V.x
    if tol is None:
        tol = _default_tol(v, rel_tol)

    kinds = np.full(v.shape, 2, dtype=np.int8)  # 0 allowed, 1 forbidden, 2 tp
    kinds[v < -tol] = 0
    kinds[v > tol] = 1
    as_kind = (RegionKind.ALLOWED, RegionKind.FORBIDDEN, RegionKind.TURNING_POINT)

    change = np.flatnonzero(np.diff(kinds)) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [v.size]])

    bounds = [float(x[0])]
    for i in change:
        left, right = kinds[i - 1], kinds[i]
        if left == 2:
            bounds.append(float(x[i - 1]))
        elif right == 2:
            bounds.append(float(x[i]))
        else:
            # sign change between two samples: interpolate the root
            frac = v[i - 1] / (v[i - 1] - v[i])
            bounds.append(float(x[i - 1] + frac * (x[i] - x[i - 1])))
    bounds.append(float(x[-1]))

    regions = tuple(
        Region(bounds[k], bounds[k + 1], as_kind[kinds[s]], int(s), int(e))
        for k, (s, e) in enumerate(zip(starts, stops))
    )
    return RegionClassification(regions, tol)


# ------------------------------- Phases ---------------------------------------


def split_phase(
    psi: ComplexScalarField1D, prefactor: ComplexScalarField1D, hbar: float = 1.0
) -> tuple[RealField1D, RealField1D]:
    """Return ``(S_r, S_i)`` with ``prefactor * exp(-(S_r + i S_i)/ħ) == psi``.

    `S_i` is unwrapped along the grid by nearest-branch increments.

    Raises
    ------
    ZeroAmplitudeError
        If `psi` or `prefactor` vanishes (underflows) anywhere.
    UnwrapAmbiguityError
        If the phase advances by π or more between two adjacent samples.
    """
    grid = _check_same_grid(psi, prefactor)
    tiny = np.finfo(float).tiny
    for name, f in (("psi", psi), ("prefactor", prefactor)):
        if np.any(bad := np.abs(f.values) <= tiny):
            x0 = grid.points[np.argmax(bad)]
            raise ZeroAmplitudeError(f"{name} vanishes at x={x0:g}.")

    ratio = psi.values / prefactor.values
    modulus = np.abs(ratio)
    unit = ratio / modulus
    steps = np.angle(unit[1:] * np.conj(unit[:-1]))
    if np.any(bad := np.abs(steps) >= _UNWRAP_LIMIT):
        i = int(np.argmax(bad))
        raise UnwrapAmbiguityError(
            f"Phase jump of {steps[i]:.6g} rad between x={grid.points[i]:g} and "
            f"x={grid.points[i + 1]:g}; refine the grid."
        )
    phase = np.angle(unit[0]) + np.concatenate([[0.0], np.cumsum(steps)])

    s_r = -hbar * np.log(modulus)
    s_i = -hbar * phase
    return RealField1D(grid, s_r), RealField1D(grid, s_i)


def assemble_wavefunction(
    prefactor: ComplexScalarField1D,
    S_r: RealField1D,  # noqa: N803
    S_i: RealField1D,  # noqa: N803
    hbar: float = 1.0,
) -> ComplexScalarField1D:
    """Inverse of `split_phase`: ``C exp(-(S_r + i S_i)/ħ)``."""
    grid = _check_same_grid(prefactor, S_r, S_i)
    values = prefactor.values * np.exp(-(S_r.values + 1j * S_i.values) / hbar)
    return ComplexScalarField1D(grid, values)


def hj_residual_classical(
    S_r: RealField1D,  # noqa: N803
    S_i: RealField1D,  # noqa: N803
    V: PotentialProfile,
) -> tuple[RealField1D, RealField1D]:
    """Residuals of the ħ → 0 Hamilton-Jacobi pair.

    ``res_real = -½ S_r'² + ½ S_i'² + V`` and ``res_imag = S_r' S_i'``.
    """
    grid = _check_same_grid(S_r, S_i, V)
    dr = S_r.derivative()
    di = S_i.derivative()
    res_real = -0.5 * dr**2 + 0.5 * di**2 + V.values
    res_imag = dr * di
    return RealField1D(grid, res_real), RealField1D(grid, res_imag)


def hj_residual_quantum(
    C: ComplexScalarField1D,  # noqa: N803
    S_r: RealField1D,  # noqa: N803
    S_i: RealField1D,  # noqa: N803
    V: PotentialProfile,
    hbar: float = 1.0,
) -> tuple[ComplexScalarField1D, ComplexScalarField1D]:
    """Residuals of the real-part and imaginary-part equations acting on `C`.

    All ħ and ħ² terms are kept. Both residuals are returned as complex fields;
    the second is real whenever `C` is real, and ``res_real + i res_imag`` is the
    full zero-energy Schrödinger residual for any `C`.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive.")
    grid = _check_same_grid(C, S_r, S_i, V)
    h = grid.spacing
    c = C.values
    dc = gradient(c, h)
    lap_c = laplacian(c, h)
    dr, lap_r = gradient(S_r.values, h), laplacian(S_r.values, h)
    di, lap_i = gradient(S_i.values, h), laplacian(S_i.values, h)

    res_real = (
        (-0.5 * dr**2 + 0.5 * di**2 + V.values + 0.5 * hbar * lap_r) * c
        + hbar * dr * dc
        - 0.5 * hbar**2 * lap_c
    )
    res_imag = -c * dr * di + hbar * (0.5 * c * lap_i + di * dc)
    return ComplexScalarField1D(grid, res_real), ComplexScalarField1D(grid, res_imag)


# ------------------------------- Actions --------------------------------------


class WKBAction(NamedTuple):
    """Euclidean (`S_r`) and Lorentzian (`S_i`) action over an interval."""

    S_r: float
    S_i: float


def _region_indices(V: PotentialProfile, region: Region | tuple[float, float]) -> slice:
    if isinstance(region, Region):
        return slice(region.start, region.stop)
    x_a, x_b = region
    x = V.x
    eps = 1e-9 * V.grid.spacing
    inside = np.flatnonzero((x >= x_a - eps) & (x <= x_b + eps))
    if inside.size == 0:
        return slice(0, 0)
    return slice(int(inside[0]), int(inside[-1]) + 1)


def _enclosing_run(same: NDArray[np.bool_], idx: slice) -> slice:
    """Widen `idx` over the neighbouring samples flagged in `same`."""
    before = np.flatnonzero(~same[: idx.start])
    after = np.flatnonzero(~same[idx.stop :])
    start = int(before[-1]) + 1 if before.size else 0
    stop = idx.stop + int(after[0]) if after.size else same.size
    return slice(min(start, idx.start), max(stop, idx.stop))


def _path_integral(p: NDArray, x: NDArray, run: slice, idx: slice) -> float:
    """``∫ p dx`` between the end samples of `idx`.

    One antiderivative is built over the whole of `run`, so actions of adjacent
    subintervals of the same run add up exactly.
    """
    seg, xs = p[run], x[run]
    if seg.size < 3:
        F = cumulative_trapezoid(seg, xs, initial=0.0)  # noqa: N806
    else:
        F = cumulative_simpson(seg, x=xs, initial=0.0)  # noqa: N806
    return float(F[idx.stop - 1 - run.start] - F[idx.start - run.start])


def wkb_action(
    V: PotentialProfile,
    region: Region | tuple[float, float],
    mass: float = 1.0,
    tol: float | None = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> WKBAction:
    """Integrate the local WKB momentum over one region (cumulative Simpson).

    On a forbidden region ``S_r = ∫ sqrt(2 m V) dx`` and ``S_i = 0``; on an
    allowed region ``S_i = ∫ sqrt(-2 m V) dx`` and ``S_r = 0``. An interval given
    as ``(x_a, x_b)`` is snapped inward to the grid samples it contains. The
    antiderivative spans every neighbouring sample of the same kind, so the
    action is additive over adjacent subintervals.

    Raises
    ------
    MixedRegionError
        If the interval contains both allowed and forbidden samples.
    """
    idx = _region_indices(V, region)
    v = V.values[idx]
    x = V.x[idx]
    if tol is None:
        tol = _default_tol(V.values, rel_tol)
    forbidden = bool(np.any(v > tol))
    allowed = bool(np.any(v < -tol))
    if forbidden and allowed:
        raise MixedRegionError(
            f"Interval [{x[0]:g}, {x[-1]:g}] contains both allowed and forbidden "
            "samples; classify the profile first."
        )
    if not (forbidden or allowed):
        return WKBAction(0.0, 0.0)

    sign = 1.0 if forbidden else -1.0
    run = _enclosing_run(sign * V.values > tol, idx)
    p = np.sqrt(2 * mass * np.maximum(sign * V.values, 0.0))
    action = _path_integral(p, V.x, run, idx)
    return WKBAction(action, 0.0) if forbidden else WKBAction(0.0, action)


def imaginary_time_lapse(
    barrier: PotentialProfile,
    dE: float,  # noqa: N803
    mass: float = 1.0,
    tol: float | None = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    """Imaginary-time duration ``|∂S_r/∂E|`` of a forbidden profile.

    Central difference of the Euclidean action with the energy raised and
    lowered by `dE`::

        τ = [S_r(V - dE) - S_r(V + dE)] / (2 dE)

    Raises
    ------
    RegionChangedError
        If either shifted profile is not forbidden at every sample.
    """
    if dE <= 0:
        raise ValueError("dE must be positive.")
    if tol is None:
        tol = _default_tol(barrier.values, rel_tol)
    whole = (barrier.grid.x_min, barrier.grid.x_max)
    actions = []
    for sign in (-1.0, 1.0):
        shifted = barrier.shifted(sign * dE)
        if np.any(shifted.values <= tol):
            raise RegionChangedError(
                f"Shifting the energy by {-sign * dE:+g} makes part of the barrier "
                "non-forbidden; use a smaller dE."
            )
        actions.append(wkb_action(shifted, whole, mass=mass, tol=tol).S_r)
    return abs(actions[0] - actions[1]) / (2 * dE)


# ------------------------------- Report ---------------------------------------


@dataclass(frozen=True)
class RegionReport:
    kind: RegionKind
    x_a: float
    x_b: float
    S_r: float
    S_i: float
    decay_factor: float | None = None
    """exp(-S_r/ħ) for forbidden regions."""
    tau_im: float | None = None
    """Imaginary-time lapse for forbidden regions."""


@dataclass(frozen=True)
class WKBReport:
    """Per-region actions and lapses plus Hamilton-Jacobi residual maxima."""

    regions: list[RegionReport] = field(default_factory=list)
    max_residual_real: float = 0.0
    max_residual_imag: float = 0.0

    @property
    def tau_im(self) -> list[float]:
        return [r.tau_im for r in self.regions if r.tau_im is not None]

    def to_dict(self) -> dict[str, Any]:
        return {
            "regions": [
                {
                    "kind": str(r.kind),
                    "x_a": r.x_a,
                    "x_b": r.x_b,
                    "S_r": r.S_r,
                    "S_i": r.S_i,
                    "exp_minus_S_r": r.decay_factor,
                    "tau_im": r.tau_im,
                }
                for r in self.regions
            ],
            "tau_im": self.tau_im,
            "max_residual_real": self.max_residual_real,
            "max_residual_imag": self.max_residual_imag,
        }


def wkb_report(
    V: PotentialProfile,
    dE: float,  # noqa: N803
    mass: float = 1.0,
    hbar: float = 1.0,
    rel_tol: float = DEFAULT_REL_TOL,
) -> WKBReport:
    """Classify `V`, integrate each region and time each forbidden region.

    The residual maxima are those of the leading-order WKB phase built from `V`
    itself (cumulative momentum integrals), evaluated away from region
    boundaries. That phase solves the classical equations exactly, so the
    maxima only measure discretization error; they flag a grid too coarse for
    the profile, not a departure of the true wavefunction from WKB.
    """
    classes = classify_regions(V, rel_tol=rel_tol)
    rows: list[RegionReport] = []
    for region in classes:
        action = wkb_action(V, region, mass=mass, tol=classes.tol)
        decay = tau = None
        if region.kind is RegionKind.FORBIDDEN and region.stop - region.start >= 2:
            decay = math.exp(-action.S_r / hbar)
            try:
                tau = imaginary_time_lapse(
                    V.restrict(region), dE, mass=mass, tol=classes.tol
                )
            except RegionChangedError as e:
                logger.warning("No imaginary-time lapse for %s: %s", region, e)
        rows.append(
            RegionReport(region.kind, region.x_a, region.x_b, *action, decay, tau)
        )

    x = V.x
    p_r = np.sqrt(2 * mass * np.maximum(V.values, 0.0))
    p_i = np.sqrt(2 * mass * np.maximum(-V.values, 0.0))
    s_r = RealField1D(V.grid, cumulative_trapezoid(p_r, x, initial=0.0))
    s_i = RealField1D(V.grid, cumulative_trapezoid(p_i, x, initial=0.0))
    res_real, res_imag = hj_residual_classical(s_r, s_i, V)

    # one-sided stencils straddling a turning point are not meaningful
    interior = np.zeros(x.size, dtype=bool)
    for region in classes:
        if region.kind is not RegionKind.TURNING_POINT:
            interior[region.start + 2 : region.stop - 2] = True
    max_real = float(np.max(np.abs(res_real.values[interior]), initial=0.0))
    max_imag = float(np.max(np.abs(res_imag.values[interior]), initial=0.0))
    logger.debug(
        "wkb report: %d regions, max residuals %g, %g", len(rows), max_real, max_imag
    )
    return WKBReport(rows, max_real, max_imag)
