"""Experiment configuration: dataclasses plus a flat ``section.key = value`` format.

Example file::

    # 32^3 coupled run
    grid.n = 32
    model.variant = perturbation
    init.epsilon = 1e-2
    init.seed = 7
    time.T = 10
    time.dt = 1e-3
    outputs.series_path = out/series.csv
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .dynamics import ModelConfig
from .initial import InitSpec
from .spectral import Grid


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n1: int = 32
    n2: int = 32
    n3: int = 32
    L1: float = 2 * math.pi
    L2: float = 2 * math.pi
    L3: float = 2 * math.pi

    def build(self) -> Grid:
        return Grid(self.n1, self.n2, self.n3, self.L1, self.L2, self.L3)


@dataclass(frozen=True)
class TimeConfig:
    T: float = 10.0
    dt: float = 1e-3
    sample_every: int = 1
    cfl: float = 0.5
    blowup_h4: float = 1e6


@dataclass(frozen=True)
class OutputConfig:
    series_path: str = "series.csv"
    summary_path: str = "summary.json"
    checkpoint_path: str = ""
    checkpoint_every: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    init: InitSpec = field(default_factory=InitSpec)
    time: TimeConfig = field(default_factory=TimeConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.time.T < 0:
            raise ConfigError(f"time.T must be non-negative, got {self.time.T}")
        if not self.time.dt > 0:
            raise ConfigError(f"time.dt must be positive, got {self.time.dt}")
        if self.time.sample_every < 1:
            raise ConfigError("time.sample_every must be at least 1")
        if self.outputs.checkpoint_every < 0:
            raise ConfigError("outputs.checkpoint_every must be non-negative")
        g = self.grid
        if self.init.kind == "random-band-limited":
            for n in (g.n1, g.n2, g.n3):
                if 3 * self.init.band >= n:
                    raise ConfigError(f"init.band={self.init.band} is not resolved after dealiasing at n={n}")

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        return apply_overrides(self, overrides)

    def to_flat(self) -> dict[str, Any]:
        out = {}
        for sec in SECTIONS:
            obj = getattr(self, sec)
            for f in fields(obj):
                out[f"{sec}.{f.name}"] = getattr(obj, f.name)
        return out

    def dumps(self) -> str:
        lines = []
        for key, val in self.to_flat().items():
            lines.append(f"{key} = {_format(key, val)}")
        return "\n".join(lines) + "\n"


SECTIONS = ("grid", "model", "init", "time", "outputs")


def _format(key: str, val: Any) -> str:
    if key == "init.modes":
        return "; ".join(" ".join(str(x) for x in m) for m in val)
    if isinstance(val, tuple):
        return ", ".join(repr(x) for x in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _parse_modes(text: str) -> tuple:
    modes = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if len(parts) != 6 or parts[0] not in ("u", "b"):
            raise ConfigError(f"init.modes entry {chunk.strip()!r}: expected 'u|b m1 m2 m3 component amplitude'")
        fld, m1, m2, m3, comp = parts[0], *(int(x) for x in parts[1:5])
        if comp not in (1, 2, 3):
            raise ConfigError(f"init.modes component must be 1, 2 or 3, got {comp}")
        modes.append((fld, m1, m2, m3, comp, complex(parts[5]) if "j" in parts[5] else float(parts[5])))
    return tuple(modes)


def _coerce(key: str, raw: Any, current: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if key == "init.modes":
        return _parse_modes(text)
    if isinstance(current, bool):
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(current, str):
        return text
    try:
        val = ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc
    if isinstance(current, tuple):
        if not isinstance(val, tuple):
            raise ConfigError(f"{key}: expected a comma-separated triple, got {text!r}")
        return tuple(float(x) for x in val)
    if isinstance(current, float):
        return float(val)
    if isinstance(current, int) and isinstance(val, float) and val.is_integer():
        return int(val)
    return val


def apply_overrides(cfg: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """Return cfg with dotted keys replaced; ``grid.n`` sets all three mode counts."""
    sections = {sec: {} for sec in SECTIONS}
    for key, raw in overrides.items():
        if key == "grid.n":
            for name in ("n1", "n2", "n3"):
                sections["grid"][name] = _coerce("grid." + name, raw, 0)
            continue
        if key == "grid.L":
            for name in ("L1", "L2", "L3"):
                sections["grid"][name] = _coerce("grid." + name, raw, 0.0)
            continue
        sec, _, name = key.partition(".")
        if sec not in sections or not name:
            raise ConfigError(f"unknown config key {key!r}")
        obj = getattr(cfg, sec)
        names = {f.name for f in fields(obj)}
        if name not in names:
            raise ConfigError(f"unknown config key {key!r}; {sec} accepts {sorted(names)}")
        sections[sec][name] = _coerce(key, raw, getattr(obj, name))
    try:
        parts = {sec: replace(getattr(cfg, sec), **vals) for sec, vals in sections.items()}
        return ExperimentConfig(**parts)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def parse_config_text(text: str, source: str = "<string>") -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = val.strip()
    return values


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        values.update(parse_config_text(text, str(p)))
    values.update(overrides or {})
    return apply_overrides(ExperimentConfig(), values)
