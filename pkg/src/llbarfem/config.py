"""Configuration: environment settings and the flat run/study configuration."""

import configparser
from collections.abc import Iterable, Mapping
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from llbarfem.errors import (
    AxisNotUnitError,
    ConfigError,
    InvalidValueError,
    MissingKeyError,
    UnknownKeyError,
)
from llbarfem.logging import get_logger
from llbarfem.models import LinearSolverKind, ModelParams, SchemeConfig, SchemeKind, UnitAxis

logger = get_logger(__name__)

_SECTION = "llbarfem"


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    solver_threads: int = Field(
        default=1,
        ge=1,
        description="Worker threads for independent runs of a study",
    )
    log_level: str = Field(
        default="INFO",
        description="Log level (DEBUG, INFO, WARNING, ERROR)",
    )


def load_settings() -> Settings:
    """Load and return application settings."""
    return Settings()


class InitialProjection(StrEnum):
    RITZ = "ritz"
    NODAL = "nodal"


PRESETS: dict[str, dict[str, Any]] = {
    "sim1": {
        "lambda_e": 1.0,
        "lambda_r": 4.0,
        "gamma": 10.0,
        "kappa": 2.0,
        "mu": 1.0,
        "beta": -0.1,
        "e_axis": (0.0, 0.0, 1.0),
        "dt": 2.5e-3,
        "initial_data": "sim1",
        "scheme": "euler",
    },
    "sim2": {
        "lambda_e": 0.001,
        "lambda_r": 4.0,
        "gamma": 5.0,
        "kappa": 3.0,
        "mu": -1.0,
        "beta": 0.2,
        "e_axis": (0.0, 1.0, 0.0),
        "dt": 2.5e-3,
        "initial_data": "sim2",
        "scheme": "euler_bloch",
    },
}
PRESETS["sim3_pos"] = {**PRESETS["sim2"], "mu": 20.0, "scheme": "euler"}
PRESETS["sim3_neg"] = {**PRESETS["sim2"], "mu": -5.0, "scheme": "euler_bloch"}

_LIST_KEYS = ("e_axis", "levels", "epsilons", "time_steps")
_OPTIONAL_KEYS = ("csv_path", "vtk_dir", "report_path", "preset")


class Config(BaseModel):
    """Validated run configuration; every key of the configuration file is a field."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # physics
    lambda_r: float = Field(..., gt=0)
    lambda_e: float = Field(..., ge=0)
    gamma: float
    kappa: float = Field(..., gt=0)
    mu: float
    beta: float
    e_axis: UnitAxis = (0.0, 0.0, 1.0)

    # discretization
    dim: int = Field(default=2, ge=1, le=2)
    divisions: int = Field(default=16, ge=2)
    dt: float = Field(..., gt=0)
    t_end: float = Field(default=0.5, gt=0)

    scheme: SchemeKind = SchemeKind.EULER

    # solver
    newton_tol: float = Field(default=1e-10, gt=0)
    newton_max_iter: int = Field(default=25, ge=1)
    linear_tol: float = Field(default=1e-12, gt=0)
    linear_max_iter: int = Field(default=1000, ge=1)
    linear_solver: LinearSolverKind = LinearSolverKind.DIRECT
    first_step_substeps: int = Field(default=1, ge=1)
    first_step_anisotropy: bool = True

    # initial data
    initial_data: str = "sim1"
    initial_projection: InitialProjection = InitialProjection.RITZ

    # outputs
    csv_path: str | None = None
    vtk_dir: str | None = None
    snapshot_every: int = Field(default=0, ge=0)
    report_path: str | None = None

    # studies
    levels: list[int] = Field(default_factory=lambda: [4, 8, 16, 32])
    epsilons: list[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    time_steps: list[float] = Field(default_factory=lambda: [2e-2, 1e-2])
    reference_factor: int = Field(default=4, ge=2)

    preset: str | None = None

    @field_validator(*_LIST_KEYS, mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator(*_OPTIONAL_KEYS, mode="before")
    @classmethod
    def _empty_is_none(cls, value: Any) -> Any:
        if isinstance(value, str) and not value.strip():
            return None
        return value

    @model_validator(mode="after")
    def _check_time_window(self) -> "Config":
        if self.t_end < self.dt:
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        return self

    @property
    def n_steps(self) -> int:
        """Number of steps floor(t_end / dt)."""
        return int(self.t_end / self.dt + 1e-9)

    def model_params(self) -> ModelParams:
        return ModelParams(
            lambda_r=self.lambda_r,
            lambda_e=self.lambda_e,
            gamma=self.gamma,
            kappa=self.kappa,
            mu=self.mu,
            beta=self.beta,
            e_axis=self.e_axis,
        )

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(
            k=self.dt,
            scheme=self.scheme,
            newton_tol=self.newton_tol,
            newton_max_iter=self.newton_max_iter,
            linear_tol=self.linear_tol,
            linear_max_iter=self.linear_max_iter,
            linear_solver=self.linear_solver,
            first_step_substeps=self.first_step_substeps,
            first_step_anisotropy=self.first_step_anisotropy,
        )


def _read_flat(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as e:
        raise InvalidValueError(f"malformed configuration: {e}") from e
    return dict(parser[_SECTION])


def _parse_overrides(overrides: Iterable[str] | Mapping[str, Any]) -> dict[str, Any]:
    if isinstance(overrides, Mapping):
        return dict(overrides)
    parsed: dict[str, Any] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InvalidValueError(f"override must be key=value, got {item!r}", key=item)
        parsed[key.strip()] = value.strip()
    return parsed


def _expand_preset(values: dict[str, Any]) -> dict[str, Any]:
    name = values.get("preset")
    if name is None or (isinstance(name, str) and not name.strip()):
        return values
    name = str(name).strip()
    if name not in PRESETS:
        raise InvalidValueError(f"unknown preset {name!r} (known: {', '.join(PRESETS)})", key="preset")
    return {**PRESETS[name], **values, "preset": name}


def _to_config_error(error: ValidationError) -> ConfigError:
    details = error.errors()
    first = details[0]
    key = ".".join(str(part) for part in first["loc"] if isinstance(part, str)) or None
    summary = "; ".join(
        f"{'.'.join(str(p) for p in d['loc']) or 'config'}: {d['msg']}" for d in details
    )
    match first["type"]:
        case "extra_forbidden":
            return UnknownKeyError(f"unknown key {key!r}", key=key)
        case "missing" if len(first["loc"]) == 1:
            return MissingKeyError(f"missing required key {key!r}", key=key)
        case "axis_not_unit":
            return AxisNotUnitError(summary, key=key)
        case _:
            return InvalidValueError(summary, key=key)


def parse_config(
    source: str | Path = "", overrides: Iterable[str] | Mapping[str, Any] = ()
) -> Config:
    """Parse a flat ``key = value`` configuration.

    Args:
        source: Configuration text, or a path to a configuration file
        overrides: ``key=value`` strings (or a mapping) applied after the file

    Returns:
        Validated Config with the preset expanded and defaults applied

    Raises:
        UnknownKeyError: A key the schema does not know
        MissingKeyError: A required key is absent and no preset provides it
        AxisNotUnitError: e_axis is not a unit vector
        InvalidValueError: Unparsable or out-of-range value
        ConfigError: Configuration file cannot be read
    """
    if isinstance(source, Path):
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as e:
            logger.error("config_read_failed", path=str(source), error=str(e))
            raise ConfigError(f"cannot read configuration file {source}: {e}") from e
    else:
        text = source

    values: dict[str, Any] = {**_read_flat(text), **_parse_overrides(overrides)}
    values = _expand_preset(values)

    try:
        config = Config.model_validate(values)
    except ValidationError as e:
        error = _to_config_error(e)
        logger.error("config_invalid", key=error.key, error=str(error))
        raise error from e

    logger.info(
        "config_loaded",
        preset=config.preset,
        scheme=config.scheme.value,
        divisions=config.divisions,
        dt=config.dt,
    )
    return config


def _format_value(value: Any) -> str:
    match value:
        case None:
            return ""
        case bool():
            return "true" if value else "false"
        case StrEnum():
            return value.value
        case float():
            return repr(value)
        case list() | tuple():
            return ", ".join(_format_value(item) for item in value)
        case _:
            return str(value)


def dump_config(config: Config) -> str:
    """Serialise every key so that ``parse_config(dump_config(c)) == c``."""
    lines = [f"{name} = {_format_value(getattr(config, name))}" for name in Config.model_fields]
    return "\n".join(lines) + "\n"
