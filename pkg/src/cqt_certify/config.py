"""Sweep configuration: built-in defaults < key=value file < command line."""
import logging
import math
from enum import StrEnum
from pathlib import Path
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .povm import DEFAULT_MAX_ITERS, DEFAULT_TOL, Backend
from .states import Channel

GRID_DIGITS = 12


class ChannelChoice(StrEnum):
    Total = "total"
    Qubit = "qubit"
    Both = "both"

    def channels(self) -> list[Channel]:
        if self == ChannelChoice.Both:
            return [Channel.Total, Channel.Qubit]
        return [Channel(self.value)]


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    channel: ChannelChoice = ChannelChoice.Both
    p_min: float = 0.0
    p_max: float = 1.0
    p_step: float = Field(default=0.02, gt=0)
    sdp_tol: float = Field(default=DEFAULT_TOL, gt=0)
    sdp_max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    backend: Backend = Backend.InteriorPoint
    optimizer_restarts: int = Field(default=8, ge=1)
    seed: int = 42
    output_path: Path = Path("sweep.csv")
    jobs: int = Field(default=1, ge=1)
    plot_data: bool = False
    json_path: Path | None = None

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepConfig":
        if not 0.0 <= self.p_min <= self.p_max <= 1.0:
            raise ValueError(
                f"need 0 <= p_min <= p_max <= 1, got p_min={self.p_min}, p_max={self.p_max}"
            )
        return self

    def grid(self) -> list[float]:
        count = math.floor((self.p_max - self.p_min) / self.p_step + 1e-9) + 1
        return [round(self.p_min + i * self.p_step, GRID_DIGITS) for i in range(count)]


# Command-line spellings accepted in config files as well
KEY_ALIASES = {
    "restarts": "optimizer_restarts",
    "out": "output_path",
    "json": "json_path",
    "max_iters": "sdp_max_iters",
}


def normalize_key(key: str) -> str:
    name = key.strip().lower().replace("-", "_")
    return KEY_ALIASES.get(name, name)


def load_config_file(path: Path | str) -> dict[str, str]:
    """Read flat `key = value` lines; `#` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key = value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        name = normalize_key(key)
        if name not in SweepConfig.model_fields:
            raise ConfigError(f"{path}:{number}: unknown key {key.strip()!r}")
        values[name] = value.strip()
    logging.debug(f"config: {len(values)} value(s) from {path}")
    return values


def build_config(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> SweepConfig:
    merged: dict[str, Any] = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[normalize_key(key)] = value
    try:
        return SweepConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
