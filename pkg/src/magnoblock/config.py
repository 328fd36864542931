"""JSON run configuration: physical parameters in Hz plus optional
``sweep`` and ``integrator`` sections. Missing keys take defaults."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .integrator import RadauConfig
from .model import FREQUENCY_FIELDS, SystemParams

PARAM_KEYS = {name + "_hz" for name in FREQUENCY_FIELDS} | {"phi", "temperature_k"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSettings:
    n_omega0: int = 201
    omega0_span: str = "model"
    n_omega_m: int = 101
    omega_m_ratio_min: float = 0.5
    omega_m_ratio_max: float = 3.0
    slice_ratios: tuple = (1.0, 1.5, 2.0, 2.5, 3.0)
    constant_phi: float = math.pi
    constant_E_hz: float = 1e5
    no_feedback_E_hz: float = 1e5
    horizon_s: float | None = None
    samples: int = 200
    method: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "slice_ratios", tuple(float(r) for r in self.slice_ratios))
        if self.omega0_span not in ("model", "results"):
            raise ConfigError("sweep.omega0_span must be 'model' or 'results'")
        if self.n_omega0 < 1 or self.n_omega_m < 1 or self.samples < 2:
            raise ConfigError("sweep grid sizes must be >= 1 and samples >= 2")
        if self.method not in ("uniform", "adaptive", "exact"):
            raise ConfigError("sweep.method must be 'uniform', 'adaptive' or 'exact'")
        if self.horizon_s is not None and not self.horizon_s > 0:
            raise ConfigError("sweep.horizon_s must be positive")


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    integrator: RadauConfig = field(default_factory=RadauConfig)
    defaults_only: bool = False

    def snapshot(self) -> dict:
        """Fully resolved config in the same schema ``parse_config`` reads."""
        snap = self.params.to_hz()
        snap["sweep"] = dataclasses.asdict(self.sweep)
        snap["sweep"]["slice_ratios"] = list(self.sweep.slice_ratios)
        snap["integrator"] = dataclasses.asdict(self.integrator)
        return snap


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"'{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    sweep = _section(SweepSettings, raw.pop("sweep", None), "sweep")
    integ = _section(RadauConfig, raw.pop("integrator", None), "integrator")
    unknown = set(raw) - PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k, v in raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{k}: expected a number, got {v!r}")
    return RunConfig(SystemParams.from_hz(raw), sweep, integ, defaults_only=not raw)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig(defaults_only=True)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        return RunConfig(defaults_only=True)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(raw)
