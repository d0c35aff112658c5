"""Numerical defaults and the per-command configuration files.

Config files are JSON documents validated with pydantic. Every command accepts
an optional ``"numerics"`` block that overrides `NumericsSettings`.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal, TypeVar

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic.fields import FieldInfo
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from evanescent._errors import ConfigError
from evanescent.layered import DelayHold, Layer, MediumStack, Polarization
from evanescent.waveguide import ModeSpec
from evanescent.wkb_phase import Grid1D

if TYPE_CHECKING:
    from collections.abc import Mapping

    from numpy.typing import NDArray
    from typing_extensions import Self

__all__ = [
    "BarrierSpec",
    "DispersionConfig",
    "FTIRConfig",
    "NumericsSettings",
    "Sweep",
    "TIRConfig",
    "WKBConfig",
    "load_config",
]

OutputFormat = Literal["csv", "json"]
_ConfigT = TypeVar("_ConfigT", bound="CommandConfig")


# ------------------------------- Numerics -------------------------------------


class _MappingSource(PydanticBaseSettingsSource):
    """Values from the ``"numerics"`` block of a config file.

    Keys the model does not know are dropped with a warning.
    """

    def __init__(self, settings_cls: type[BaseSettings], values: Mapping[str, Any]):
        super().__init__(settings_cls)
        self._values = dict(values)

    def __call__(self) -> dict[str, Any]:
        """Return Settings values for this source."""
        fields = self.settings_cls.model_fields
        cleaned: dict[str, Any] = {}
        for key, value in self._values.items():
            if key in fields:
                cleaned[key] = value
            else:
                warnings.warn(
                    f"Key {key!r} in 'numerics' is not a known setting; ignored.",
                    RuntimeWarning,
                    stacklevel=2,
                )
        return cleaned

    def get_field_value(
        self, field: FieldInfo, field_name: str
    ) -> tuple[Any, str, bool]:
        """Return the value for a field (required by ABC)."""
        return None, "", False  # pragma: no cover


class NumericsSettings(BaseSettings):
    """Tolerances, step sizes and unit choices shared by all commands."""

    model_config = SettingsConfigDict(extra="ignore", frozen=True)

    hbar: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    mass: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    classify_rel_tol: float = Field(default=1e-12, gt=0, lt=1)
    """Samples with ``|V| <= classify_rel_tol * max|V|`` are turning points."""
    group_delay_rel_step: float = Field(default=1e-6, gt=0, lt=1)
    """Default frequency step of the group delay, relative to ω."""
    oracle_tol: float = Field(default=1e-8, gt=0, lt=1)
    oracle_max_points: int = Field(default=2**20, ge=16)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """Only constructor values are read; the environment is ignored."""
        return (init_settings,)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any] | None) -> NumericsSettings:
        """Settings from a config ``"numerics"`` block (unknown keys warn)."""
        source = _MappingSource(cls, values or {})
        return cls(**source())


# ------------------------------- Sweeps ---------------------------------------


class Sweep(BaseModel):
    """``count`` values from `start` to `stop`, both included."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    start: float = Field(allow_inf_nan=False)
    stop: float = Field(allow_inf_nan=False)
    count: int = Field(ge=2)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _check_range(self) -> Self:
        if not self.start < self.stop:
            raise ValueError(f"start ({self.start}) must be < stop ({self.stop}).")
        if self.spacing == "log" and self.start <= 0:
            raise ValueError("log spacing requires start > 0.")
        return self

    def values(self) -> NDArray[np.float64]:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


# ------------------------------- Commands -------------------------------------


class CommandConfig(BaseModel):
    """Fields shared by every command config."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    out: Path | None = None
    format: OutputFormat | None = None
    numerics: dict[str, Any] = Field(default_factory=dict)

    def settings(self) -> NumericsSettings:
        return NumericsSettings.from_mapping(self.numerics)


class DispersionConfig(CommandConfig):
    mode: ModeSpec = ModeSpec(a=math.pi, b=math.pi)
    omega: Sweep = Sweep(start=0.1, stop=10.0, count=100)

    @field_validator("omega")
    @classmethod
    def _non_negative(cls, value: Sweep) -> Sweep:
        if value.start < 0:
            raise ValueError("omega must be >= 0.")
        return value


class TIRConfig(CommandConfig):
    n1: float = Field(default=1.5, gt=0)
    n2: float = Field(default=1.0, gt=0)
    theta: Sweep = Sweep(start=0.0, stop=1.5, count=151)
    omega: float = Field(default=2 * math.pi, gt=0)
    polarization: Polarization = "s"

    @field_validator("theta")
    @classmethod
    def _in_quadrant(cls, value: Sweep) -> Sweep:
        if value.start < 0 or value.stop >= math.pi / 2:
            raise ValueError("theta range must lie in [0, π/2).")
        return value


class FTIRConfig(CommandConfig):
    """Gap scan; `d` is given in vacuum wavelengths ``2π/ω``.

    The angle of incidence is `theta0` when set, otherwise the critical angle
    between the entry medium and the gap plus `theta_offset`.
    """

    stack: MediumStack = MediumStack.symmetric_gap(1.5, 1.0, 1.0)
    gap_index: int = Field(default=0, ge=0)
    d: Sweep = Sweep(start=0.1, stop=10.0, count=50, spacing="log")
    omega: float = Field(default=2 * math.pi, gt=0)
    theta0: float | None = Field(default=None, ge=0)
    theta_offset: float = 0.1
    polarization: Polarization = "s"
    hold: DelayHold = "kx"
    d_omega: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> Self:
        if self.gap_index >= len(self.stack.layers):
            raise ValueError(
                f"gap_index {self.gap_index} but the stack has "
                f"{len(self.stack.layers)} layers."
            )
        if self.d.start <= 0:
            raise ValueError("Gap widths must be positive.")
        if self.theta0 is None and self.stack.entry.n < self.gap.n:
            raise ValueError(
                "No critical angle between entry and gap; set theta0 explicitly."
            )
        if not self.incidence_angle() < math.pi / 2:
            raise ValueError("The angle of incidence must be < π/2.")
        return self

    @property
    def gap(self) -> Layer:
        return self.stack.layers[self.gap_index]

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.omega

    def incidence_angle(self) -> float:
        if self.theta0 is not None:
            return self.theta0
        return math.asin(self.gap.n / self.stack.entry.n) + self.theta_offset


class BarrierSpec(BaseModel):
    """Rectangular potential ``U = height`` on ``[0, width]``, 0 elsewhere."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    height: float = 1.0
    width: float = Field(default=1.0, gt=0)
    margin: float = Field(default=1.0, gt=0)
    n_points: int = Field(default=3001, ge=5)

    def grid(self) -> Grid1D:
        return Grid1D(
            x_min=-self.margin, x_max=self.width + self.margin, n_points=self.n_points
        )

    def sample(self) -> NDArray[np.float64]:
        grid = self.grid()
        x = grid.points
        eps = 1e-9 * grid.spacing
        return np.where((x >= -eps) & (x <= self.width + eps), self.height, 0.0)


class WKBConfig(CommandConfig):
    """Potential from a JSON profile file, or a rectangular barrier.

    A file holds ``{"grid", "V"}``; `energy` is subtracted from its values, so a
    file already in zero-energy form is used as is when no energy is given. The
    barrier scenario defaults to half its height.
    """

    potential: Path | None = None
    barrier: BarrierSpec | None = None
    energy: float | None = Field(default=None, allow_inf_nan=False)
    dE: float = Field(default=1e-3, gt=0)  # noqa: N815

    @model_validator(mode="after")
    def _one_source(self) -> Self:
        if self.potential is not None and self.barrier is not None:
            raise ValueError("Give either 'potential' or 'barrier', not both.")
        return self


def load_config(path: Path | None, model: type[_ConfigT]) -> _ConfigT:
    """Read and validate a config file; the model defaults when `path` is None.

    Raises
    ------
    ConfigError
        If the file cannot be read, is not JSON, or fails validation.
    """
    if path is None:
        return model()
    try:
        text = path.read_text()
        json.loads(text)
        return model.model_validate_json(text)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e
