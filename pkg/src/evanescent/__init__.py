"""Evanescent waves: WKB phases, waveguide cutoff, layered media and an ODE oracle."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__: str = version("evanescent")
except PackageNotFoundError:
    __version__ = "uninstalled"

from . import layered, oracle, waveguide, wkb_phase
from ._errors import ConfigError, DomainError, EvanescentError
from ._logging import configure_logging
from ._settings import NumericsSettings

__all__ = [
    "ConfigError",
    "DomainError",
    "EvanescentError",
    "NumericsSettings",
    "__version__",
    "configure_logging",
    "layered",
    "oracle",
    "waveguide",
    "wkb_phase",
]
