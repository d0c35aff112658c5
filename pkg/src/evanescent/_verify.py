"""Self-checks run by ``evanescent verify``.

Each check is registered under a `CriterionKey` and returns an `Outcome`. Checks
are deterministic: random geometries come from fixed seeds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import TYPE_CHECKING, ClassVar

import numpy as np

from evanescent import layered, oracle, waveguide
from evanescent._logging import logger
from evanescent._settings import NumericsSettings
from evanescent.wkb_phase import (
    ComplexScalarField1D,
    Grid1D,
    PotentialProfile,
    RealField1D,
    RegionKind,
    classify_regions,
    hj_residual_quantum,
    wkb_action,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    from numpy.typing import NDArray
    from typing_extensions import TypeAlias

    CheckFunc: TypeAlias = Callable[[NumericsSettings], Outcome]

__all__ = [
    "CriterionInfo",
    "CriterionKey",
    "CriterionResult",
    "Outcome",
    "exact_states",
    "residual_maxima",
    "run_criteria",
]


class CriterionKey(str, Enum):
    """Names of the self-checks, in the order they run."""

    DISPERSION_IDENTITY = "dispersion_identity"
    CUTOFF_THRESHOLD = "cutoff_threshold"
    TIR_UNITARITY = "tir_unitarity"
    CRITICAL_ANGLE = "critical_angle"
    ORACLE_EQUIVALENCE = "oracle_equivalence"
    DECAY_CONSTANT = "decay_constant"
    HARTMAN_SATURATION = "hartman_saturation"
    RESIDUAL_CONVERGENCE = "residual_convergence"
    BOX_SPECTRUM = "box_spectrum"
    WKB_BARRIER_FACTOR = "wkb_barrier_factor"

    def __str__(self) -> str:
        """Return value as the string representation."""
        return str(self.value)


@dataclass(frozen=True)
class Outcome:
    passed: bool
    detail: str


@dataclass(frozen=True)
class CriterionInfo:
    """A registered check and its runtime budget in seconds."""

    key: CriterionKey
    description: str
    budget: float
    check: CheckFunc

    # global registry, filled in declaration order
    _registry: ClassVar[dict[str, CriterionInfo]] = {}

    def __post_init__(self) -> None:
        CriterionInfo._registry[str(self.key)] = self

    @classmethod
    def for_key(cls, key: str) -> CriterionInfo:
        """Get the CriterionInfo for a given key."""
        key = str(key)
        if key not in cls._registry:
            import difflib

            suggestion = ""
            if matches := difflib.get_close_matches(
                key, list(cls._registry), n=1, cutoff=0.5
            ):
                suggestion = f" Did you mean {matches[0]!r}?"
            raise KeyError(f"No criterion named {key!r}.{suggestion}")
        return cls._registry[key]

    @classmethod
    def all(cls) -> list[CriterionInfo]:
        return list(cls._registry.values())


def criterion(
    key: CriterionKey, description: str, budget: float
) -> Callable[[CheckFunc], CheckFunc]:
    def _register(func: CheckFunc) -> CheckFunc:
        CriterionInfo(key, description, budget, func)
        return func

    return _register


@dataclass(frozen=True)
class CriterionResult:
    key: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.key} {self.detail} ({self.seconds:.3f}s)"


def run_criteria(
    keys: Iterable[str] | None = None, settings: NumericsSettings | None = None
) -> list[CriterionResult]:
    """Run the selected checks (all by default) in registration order.

    An exception inside a check counts as a failure. Exceeding the runtime budget
    is logged but does not fail the check.
    """
    settings = settings or NumericsSettings()
    if keys is None:
        infos = CriterionInfo.all()
    else:
        infos = [CriterionInfo.for_key(k) for k in keys]
    results = []
    for info in infos:
        start = time.perf_counter()
        try:
            outcome = info.check(settings)
        except Exception as e:
            outcome = Outcome(False, f"{type(e).__name__}: {e}")
        elapsed = time.perf_counter() - start
        if elapsed > info.budget:
            logger.warning(
                "%s took %.2fs (budget %.0fs)", info.key, elapsed, info.budget
            )
        results.append(
            CriterionResult(str(info.key), outcome.passed, outcome.detail, elapsed)
        )
    return results


# ------------------------------- Waveguide ------------------------------------


@criterion(CriterionKey.DISPERSION_IDENTITY, "v_p * v_g = 1 above cutoff", budget=1)
def _dispersion_identity(settings: NumericsSettings) -> Outcome:
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        mode = waveguide.ModeSpec(
            a=rng.uniform(0.5, 5.0),
            b=rng.uniform(0.5, 5.0),
            n1=int(rng.integers(1, 5)),
            n2=int(rng.integers(1, 5)),
        )
        omega_c = waveguide.cutoff_frequency(mode)
        for omega in omega_c * (1.0 + rng.uniform(1e-3, 10.0, size=100)):
            p = waveguide.dispersion_point(mode, float(omega))
            if p.v_p is None or p.v_g is None:
                return Outcome(False, f"no velocities at omega={omega!r} > {omega_c!r}")
            worst = max(worst, abs(p.v_p * p.v_g - 1.0))
    return Outcome(worst <= 1e-12, f"max|v_p*v_g-1|={worst:.3g}")


@criterion(
    CriterionKey.CUTOFF_THRESHOLD, "k real above and imaginary below cutoff", budget=1
)
def _cutoff_threshold(settings: NumericsSettings) -> Outcome:
    mode = waveguide.ModeSpec(a=math.pi, b=math.pi)
    omega_c = waveguide.cutoff_frequency(mode)
    bad = 0
    for omega in np.linspace(0.0, 2.0 * omega_c, 1000):
        k = waveguide.axial_wavenumber(mode, float(omega))
        if omega > omega_c:
            bad += not (k.imag == 0.0 and k.real > 0.0)
        elif omega < omega_c:
            bad += not (k.real == 0.0 and k.imag > 0.0)
    at_cutoff = abs(waveguide.axial_wavenumber(mode, omega_c))
    passed = bad == 0 and at_cutoff < 1e-10 * omega_c
    return Outcome(passed, f"misclassified={bad} |k(omega_c)|={at_cutoff:.3g}")


# ------------------------------- Layered --------------------------------------


@criterion(CriterionKey.TIR_UNITARITY, "|r| = 1 beyond the critical angle", budget=1)
def _tir_unitarity(settings: NumericsSettings) -> Outcome:
    n1, n2 = 1.5, 1.0
    theta_c = layered.critical_angle(n1, n2)
    assert theta_c is not None
    rng = np.random.default_rng(3)
    thetas = rng.uniform(theta_c + 1e-6, 0.999 * math.pi / 2, size=500)
    omegas = rng.uniform(0.5, 20.0, size=500)
    worst = 0.0
    for pol in ("s", "p"):
        for theta, omega in zip(thetas, omegas):
            inc = layered.Incidence(omega=omega, theta0=theta, polarization=pol)
            r, _ = layered.interface_amplitudes(n1, n2, inc)
            worst = max(worst, abs(abs(r) - 1.0))
    return Outcome(worst <= 1e-12, f"max||r|-1|={worst:.3g}")


@criterion(CriterionKey.CRITICAL_ANGLE, "theta_c(1.5, 1.0) = asin(2/3)", budget=1)
def _critical_angle(settings: NumericsSettings) -> Outcome:
    theta_c = layered.critical_angle(1.5, 1.0)
    if theta_c is None:
        return Outcome(False, "no critical angle")
    err = abs(theta_c - 0.7297276562269663)
    return Outcome(err <= 1e-12, f"theta_c={theta_c!r}")


def _random_stack(rng: np.random.Generator, wavelength: float) -> layered.MediumStack:
    def index() -> float:
        return float(rng.uniform(1.0, 2.5))

    layers = tuple(
        layered.Layer(n=index(), d=float(rng.uniform(0.05, 3.0)) * wavelength)
        for _ in range(int(rng.integers(1, 6)))
    )
    return layered.MediumStack(
        entry=layered.Medium(n=index()), layers=layers, exit=layered.Medium(n=index())
    )


def _relative_amplitude_error(
    tmm: layered.ScatteringResult, ode: oracle.OracleResult
) -> float:
    return max(
        abs(tmm.r - ode.r) / max(abs(tmm.r), abs(tmm.t)),
        abs(tmm.t - ode.t) / abs(tmm.t),
    )


@criterion(
    CriterionKey.ORACLE_EQUIVALENCE, "transfer matrix vs RK4 on 20 stacks", budget=30
)
def _oracle_equivalence(settings: NumericsSettings) -> Outcome:
    rng = np.random.default_rng(5)
    omega = 2 * math.pi
    worst = 0.0
    for _ in range(20):
        stack = _random_stack(rng, 2 * math.pi / omega)
        theta0 = float(rng.uniform(0, 0.95 * math.pi / 2))
        inc = layered.Incidence(omega=omega, theta0=theta0)
        k_x = layered.transverse_wavenumber(stack.entry, inc)
        tmm = layered.stack_scattering(stack, inc)
        profile = oracle.PiecewiseProfile.from_stack(stack, omega, k_x)
        ode = oracle.integrate_helmholtz_1d(
            profile, settings.oracle_tol, settings.oracle_max_points
        )
        worst = max(worst, _relative_amplitude_error(tmm, ode))
    return Outcome(worst < 1e-6, f"max relative error={worst:.3g}")


def _decay_geometries() -> list[tuple[str, float, float, float]]:
    """(name, outside coefficient, barrier coefficient, expected κ)."""
    omega = 2 * math.pi
    glass, air = layered.Medium(n=1.5), layered.Medium(n=1.0)
    theta_c = layered.critical_angle(glass.n, air.n)
    assert theta_c is not None
    inc = layered.Incidence(omega=omega, theta0=theta_c + 0.1)
    k_x = layered.transverse_wavenumber(glass, inc)
    kappa_gap = layered.kz(air, omega, k_x).imag

    mode = waveguide.ModeSpec(a=math.pi, b=math.pi)
    w = 1.0
    kappa_guide = waveguide.axial_wavenumber(mode, w).imag

    energy, height = 0.25, 1.0
    kappa_barrier = math.sqrt(2 * (height - energy))
    omega_c = waveguide.cutoff_frequency(mode)
    return [
        ("ftir_gap", (omega * glass.n) ** 2 - k_x**2, omega**2 - k_x**2, kappa_gap),
        ("below_cutoff", w**2, w**2 - omega_c**2, kappa_guide),
        ("square_barrier", 2 * energy, 2 * (energy - height), kappa_barrier),
    ]


@criterion(
    CriterionKey.DECAY_CONSTANT, "fitted decay constant matches |Im k|", budget=10
)
def _decay_constant(settings: NumericsSettings) -> Outcome:
    worst = 0.0
    details = []
    for name, outside, inside, kappa in _decay_geometries():
        widths = np.linspace(6.0, 12.0, 7) / kappa
        fit = oracle.transmission_slope(
            partial(oracle.PiecewiseProfile.barrier, outside, inside),
            widths,
            settings.oracle_tol,
            settings.oracle_max_points,
        )
        err = abs(fit.kappa - kappa) / kappa
        worst = max(worst, err)
        details.append(f"{name}={fit.kappa:.8g}/{kappa:.8g}")
    return Outcome(worst < 1e-4, " ".join(details))


@criterion(
    CriterionKey.HARTMAN_SATURATION, "FTIR delay saturates with gap width", budget=5
)
def _hartman_saturation(settings: NumericsSettings) -> Outcome:
    omega = 2 * math.pi
    wavelength = 2 * math.pi / omega
    theta_c = layered.critical_angle(1.5, 1.0)
    assert theta_c is not None
    inc = layered.Incidence(omega=omega, theta0=theta_c + 0.1)
    stack = layered.MediumStack.symmetric_gap(1.5, 1.0, wavelength)

    taus = [
        layered.group_delay(
            stack.with_thickness(0, k * wavelength),
            inc,
            hold="kx",
            rel_step=settings.group_delay_rel_step,
        )
        for k in range(2, 11)
    ]
    steps = np.diff(taus)
    slack = 1e-8 * max(abs(t) for t in taus)
    monotone = bool(np.all(steps <= slack) or np.all(steps >= -slack))
    tau5, tau10 = taus[3], taus[8]
    cauchy = abs(tau10 - tau5) < 0.01 * abs(tau5)

    wide = stack.with_thickness(0, 10 * wavelength)
    v_eff = layered.effective_traversal_speed(
        wide, inc, hold="kx", rel_step=settings.group_delay_rel_step
    )
    k_x = layered.transverse_wavenumber(stack.entry, inc)
    media = [wide.entry, *wide.layers, wide.exit]
    speeds = [layered.axial_group_velocity(m, omega, k_x) for m in media]
    propagating = [v for v in speeds if v is not None]
    causal = all(v <= 1.0 for v in propagating)
    passed = monotone and cauchy and v_eff > 1.0 and causal
    return Outcome(
        passed,
        f"tau(5)={tau5:.6g} tau(10)={tau10:.6g} v_eff(10)={v_eff:.4g} "
        f"max v_g={max(propagating):.4g} monotone={monotone}",
    )


# ------------------------------- WKB ------------------------------------------


def exact_states(
    grid: Grid1D, hbar: float = 1.0
) -> dict[str, tuple[ComplexScalarField1D, RealField1D, RealField1D, PotentialProfile]]:
    """Exact zero-energy solutions ``(C, S_r, S_i, V)`` with m = 1.

    - harmonic: oscillator ground state, ``C = exp(-x²/4ħ)``, ``S_r = x²/4``
    - plane_wave: ``ψ = exp(-2ix)`` with ``C = exp(0.3 sin x)`` and a matching
      ``S_r``
    - cosh: ``ψ = cosh(x)`` in a constant forbidden potential
    """
    x = grid.points
    one = np.ones_like(x)
    k = 2.0

    def field(values: NDArray) -> ComplexScalarField1D:
        return ComplexScalarField1D(grid, values)

    return {
        "harmonic": (
            field(np.exp(-(x**2) / (4 * hbar))),
            RealField1D(grid, x**2 / 4),
            RealField1D(grid, 0 * x),
            PotentialProfile(grid, x**2 / 2 - hbar / 2),
        ),
        "plane_wave": (
            field(np.exp(0.3 * np.sin(x))),
            RealField1D(grid, 0.3 * hbar * np.sin(x)),
            RealField1D(grid, hbar * k * x),
            PotentialProfile(grid, -(hbar**2) * k**2 / 2 * one),
        ),
        "cosh": (
            field(np.sqrt(np.cosh(x))),
            RealField1D(grid, -0.5 * hbar * np.log(np.cosh(x))),
            RealField1D(grid, 0 * x),
            PotentialProfile(grid, hbar**2 / 2 * one),
        ),
    }


def residual_maxima(n_points: int, hbar: float = 1.0) -> dict[str, tuple[float, float]]:
    """Max |res_real| and |res_imag| of each exact state on ``[-3, 3]``."""
    grid = Grid1D(x_min=-3.0, x_max=3.0, n_points=n_points)
    out = {}
    for name, (c, s_r, s_i, v) in exact_states(grid, hbar).items():
        res_real, res_imag = hj_residual_quantum(c, s_r, s_i, v, hbar)
        out[name] = (
            float(np.max(np.abs(res_real.values))),
            float(np.max(np.abs(res_imag.values))),
        )
    return out


@criterion(
    CriterionKey.RESIDUAL_CONVERGENCE, "HJ residuals converge at second order", budget=5
)
def _residual_convergence(settings: NumericsSettings) -> Outcome:
    sizes = [2**j + 1 for j in range(7, 13)]
    table = [residual_maxima(n) for n in sizes]
    log_h = np.log(6.0 / (np.asarray(sizes) - 1))
    orders = {}
    for name in table[0]:
        for eq in (0, 1):
            errs = np.array([row[name][eq] for row in table])
            # identically satisfied equations only carry rounding
            if errs[0] < 1e-12:
                continue
            orders[f"{name}.eq{eq + 3}"] = float(np.polyfit(log_h, np.log(errs), 1)[0])
    passed = bool(orders) and all(abs(p - 2.0) <= 0.3 for p in orders.values())
    return Outcome(passed, " ".join(f"{k}={v:.3f}" for k, v in orders.items()))


@criterion(CriterionKey.BOX_SPECTRUM, "shooting reproduces box levels n²", budget=5)
def _box_spectrum(settings: NumericsSettings) -> Outcome:
    grid = Grid1D(x_min=0.0, x_max=math.pi, n_points=2**14 + 1)
    well = PotentialProfile(grid, np.zeros(grid.n_points))
    worst = 0.0
    for n in (1, 2, 3):
        energy = oracle.bound_state_energy(well, (n**2 - 0.5, n**2 + 0.5), mass=0.5)
        worst = max(worst, abs(energy - n**2))
    return Outcome(worst <= 1e-10, f"max|E_n-n^2|={worst:.3g}")


@criterion(
    CriterionKey.WKB_BARRIER_FACTOR, "exp(-S_r) within 3x of oracle |t|", budget=10
)
def _wkb_barrier_factor(settings: NumericsSettings) -> Outcome:
    energy, height = 0.5, 1.0
    ratios = []
    for width in (2.0, 4.0, 6.0, 8.0, 10.0):
        n_points = int(200 * (width + 2)) + 1
        grid = Grid1D(x_min=-1.0, x_max=width + 1.0, n_points=n_points)
        x = grid.points
        eps = 1e-9 * grid.spacing
        u = np.where((x >= -eps) & (x <= width + eps), height, 0.0)
        v = PotentialProfile(grid, u - energy)
        (barrier,) = classify_regions(v).of_kind(RegionKind.FORBIDDEN)
        s_r = wkb_action(v, barrier).S_r
        inside = 2 * (energy - height)
        profile = oracle.PiecewiseProfile.barrier(2 * energy, inside, width)
        t = oracle.integrate_helmholtz_1d(
            profile, settings.oracle_tol, settings.oracle_max_points
        ).t
        ratios.append(math.exp(-s_r) / abs(t))
    passed = all(1 / 3 <= q <= 3 for q in ratios)
    return Outcome(passed, "exp(-S_r)/|t|=" + ",".join(f"{q:.4g}" for q in ratios))
