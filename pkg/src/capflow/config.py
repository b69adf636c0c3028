"""Experiment configuration: JSON in, validated frozen dataclasses out."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .caps import AngleError, ContactAngle
from .conventions import THETA_MIN_DEFAULT
from .grid import GridError, GridSpec
from .initial import InitSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SteppingConfig:
    safety: float = 0.9
    t_max: float = 50.0
    tol_stationary: float = 1e-7
    record_interval: float = 0.1
    max_steps: int = 50_000_000
    conserve_V1: bool = True

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ConfigError(f"stepping.safety must lie in (0, 1], got {self.safety!r}")
        if not self.t_max >= 0:
            raise ConfigError("stepping.t_max must be >= 0")
        if not self.tol_stationary > 0:
            raise ConfigError("stepping.tol_stationary must be positive")
        if not self.record_interval > 0:
            raise ConfigError("stepping.record_interval must be positive")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise ConfigError("stepping.max_steps must be a nonnegative integer")


@dataclass(frozen=True)
class MonitorPolicy:
    tol_V1_drift: float = 1e-3
    tol_V2_increase: float = 1e-8
    tol_monitor: float = 1e-3
    tol_containment: float = 1e-3
    action: str = "warn"

    def __post_init__(self):
        for name in ("tol_V1_drift", "tol_V2_increase", "tol_monitor", "tol_containment"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"monitors.{name} must be positive")
        if self.action not in ("warn", "abort"):
            raise ConfigError(f"monitors.action must be 'warn' or 'abort', got {self.action!r}")


@dataclass(frozen=True)
class OutputConfig:
    csv_path: str | None = None
    summary_path: str | None = None
    mesh_path: str | None = None
    mesh_every: int = 0
    n_xi_export: int = 48

    def __post_init__(self):
        if int(self.mesh_every) != self.mesh_every or self.mesh_every < 0:
            raise ConfigError("output.mesh_every must be a nonnegative integer")
        if int(self.n_xi_export) != self.n_xi_export or self.n_xi_export < 3:
            raise ConfigError("output.n_xi_export must be an integer >= 3")


@dataclass(frozen=True)
class FlowConfig:
    theta_degrees: float
    n: int = 2
    grid: GridSpec = field(default_factory=GridSpec)
    stepping: SteppingConfig = field(default_factory=SteppingConfig)
    monitors: MonitorPolicy = field(default_factory=MonitorPolicy)
    init: InitSpec = field(default_factory=InitSpec)
    output: OutputConfig = field(default_factory=OutputConfig)
    theta_min_degrees: float = math.degrees(THETA_MIN_DEFAULT)

    def __post_init__(self):
        try:
            object.__setattr__(self, "theta_degrees", float(self.theta_degrees))
        except (TypeError, ValueError):
            raise ConfigError(f"theta_degrees must be a number, got {self.theta_degrees!r}") from None
        if self.grid.n != self.n:
            raise ConfigError(f"grid dimension {self.grid.n} does not match n = {self.n}")
        try:
            self.angle
        except AngleError as exc:
            raise ConfigError(str(exc)) from None
        if self.output.mesh_every and self.n != 2:
            raise ConfigError("mesh export is only available for n = 2")

    @property
    def angle(self) -> ContactAngle:
        return ContactAngle.from_degrees(self.theta_degrees, math.radians(self.theta_min_degrees))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["grid"].pop("n")
        d["init"]["modes"] = [list(m) for m in self.init.modes]
        return d


_SECTIONS = {
    "stepping": SteppingConfig,
    "monitors": MonitorPolicy,
    "init": InitSpec,
    "output": OutputConfig,
}
_GRID_KEYS = {"n_beta", "n_xi", "axisymmetric"}


def _check_keys(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")


def config_from_dict(data) -> FlowConfig:
    """Validate a parsed JSON document. Unknown keys are rejected."""
    top = {f.name for f in dataclasses.fields(FlowConfig)}
    _check_keys("config", data, top)
    if "theta_degrees" not in data:
        raise ConfigError("config is missing theta_degrees")
    kwargs = {k: data[k] for k in ("theta_degrees", "n", "theta_min_degrees") if k in data}
    n = kwargs.get("n", 2)
    try:
        g = data.get("grid", {})
        _check_keys("grid", g, _GRID_KEYS)
        kwargs["grid"] = GridSpec(n=n, **g)
        for name, cls in _SECTIONS.items():
            if name in data:
                sec = data[name]
                _check_keys(name, sec, {f.name for f in dataclasses.fields(cls)})
                if name == "init" and "modes" in sec:
                    sec = {**sec, "modes": tuple(tuple(m) for m in sec["modes"])}
                kwargs[name] = cls(**sec)
        return FlowConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError, GridError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> FlowConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    return config_from_dict(data)
