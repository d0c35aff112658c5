"""Exceptions raised by evanescent.

Every named domain failure is a `DomainError` (and therefore also a `ValueError`),
so callers that only care about "bad input for this physics" can catch one type.
The CLI maps `DomainError` to exit code 3 and `ConfigError` to exit code 2.
"""

__all__ = [
    "BracketAmbiguousError",
    "BracketEmptyError",
    "ConfigError",
    "DegenerateMatrixError",
    "DomainError",
    "EvanescentEntryError",
    "EvanescentError",
    "GridMismatchError",
    "MixedRegionError",
    "NoConvergenceError",
    "NotEvanescentError",
    "OutOfBoxError",
    "PhaseJumpError",
    "RegionChangedError",
    "UnwrapAmbiguityError",
    "ZeroAmplitudeError",
    "ZeroThicknessError",
]


class EvanescentError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EvanescentError):
    """A configuration file could not be read or validated."""


class DomainError(EvanescentError, ValueError):
    """Inputs are well formed but outside the domain of an operation."""


# wkb_phase
class ZeroAmplitudeError(DomainError):
    """A wavefunction or prefactor vanishes (or underflows) at a grid point."""


class UnwrapAmbiguityError(DomainError):
    """Adjacent phase samples differ by π or more; the grid is too coarse."""


class GridMismatchError(DomainError):
    """Fields that must share a grid do not."""


class MixedRegionError(DomainError):
    """An interval spans both allowed and forbidden samples."""


class RegionChangedError(DomainError):
    """An energy shift changed the classification of a region."""


# waveguide
class OutOfBoxError(DomainError):
    """A requested point lies outside the waveguide cross-section."""


class NotEvanescentError(DomainError):
    """An evanescent-only quantity was requested for a propagating wave."""


# layered
class DegenerateMatrixError(DomainError):
    """A layer sits exactly at its propagation threshold (k_z ≈ 0)."""


class PhaseJumpError(DomainError):
    """The transmission phase could not be unwrapped between frequency samples."""


class ZeroThicknessError(DomainError):
    """A stack without layers has no traversal length."""


# oracle
class NoConvergenceError(DomainError):
    """Step refinement did not reach the requested tolerance."""


class EvanescentEntryError(DomainError):
    """The entry medium does not carry a propagating wave."""


class BracketEmptyError(DomainError):
    """The energy bracket contains no eigenvalue."""


class BracketAmbiguousError(DomainError):
    """The energy bracket contains more than one eigenvalue."""
