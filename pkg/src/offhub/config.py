"""Scenario configuration: a sectioned ``key = value`` file with flat dotted keys.

::

    [design]
    name = design1        # preset: initial, design1, design2 or custom
    bess_mw = 30

    [control]
    ely_allocation = synchronized

Every key is ``section.key``; a line may also spell the dotted key out in
full outside any section. ``design.name`` picks a preset whose values sit
between the built-in defaults and the keys given explicitly. Overrides from
the command line use the same dotted keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable

from .engine import TRIP_LOAD, TRIP_WIND_TURBINE, WORST_CHARGE, WORST_DISCHARGE, DesignSpec, \
    EventSpec, LoadSpec
from .errors import ConfigError
from .pms import ControlConfig
from .scenarios import DESIGNS, REFERENCE_SEED, SHORT_TERM_S
from .wind import KAIMAL_LENGTH_SCALE

SECTIONS = ("design", "wind", "control", "scenario", "output")
DESIGN_NAMES = ("initial", "design1", "design2", "custom")

# design fields that are not flat scalars, or are handled elsewhere
_DESIGN_SKIP = {"name", "turbine", "loads"}
_OPTIONAL = {"design.tank_capacity_kg", "scenario.event_kind", "scenario.event_time",
             "scenario.event_index"}
_CHOICES = {
    "design.name": DESIGN_NAMES,
    "control.ely_allocation": ("sequence", "synchronized"),
    "control.fc_allocation": ("sequence", "synchronized"),
    "scenario.event_kind": (TRIP_WIND_TURBINE, TRIP_LOAD),
}


def _format_loads(loads: Iterable[LoadSpec]) -> str:
    return ", ".join(f"{ld.active_power!r}:{ld.power_factor!r}:{ld.priority}" for ld in loads)


def _parse_loads(text: str) -> tuple[LoadSpec, ...]:
    out = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"load {item.strip()!r} is not P_MW:power_factor:priority")
        out.append(LoadSpec(float(parts[0]), float(parts[1]), int(parts[2])))
    if not out:
        raise ValueError("at least one load is required")
    return tuple(out)


def _build_defaults() -> dict[str, Any]:
    d: dict[str, Any] = {"design.name": "initial"}
    base = DesignSpec()
    for f in fields(DesignSpec):
        if f.name not in _DESIGN_SKIP:
            d[f"design.{f.name}"] = getattr(base, f.name)
    d["design.loads"] = _format_loads(base.loads)
    d.update({
        "wind.mean_speed": 10.0,
        "wind.turbulence_intensity": 0.12,
        "wind.length_scale": KAIMAL_LENGTH_SCALE,
        "wind.coherence_decay": 12.0,
        "wind.rotor_averaging": True,
        "wind.wake": True,
        "wind.short_term_csv": "",  # empty: synthesize from the seed
        "wind.annual_csv": "",  # empty: bundled synthetic year
    })
    for f in fields(ControlConfig):
        d[f"control.{f.name}"] = f.default
    d.update({
        "scenario.name": "run",
        "scenario.dt": 1.0,
        "scenario.duration": SHORT_TERM_S,
        "scenario.seed": REFERENCE_SEED,
        "scenario.event_kind": None,
        "scenario.event_time": None,  # seconds, worst_charge or worst_discharge
        "scenario.event_index": None,
        "scenario.check_balance": True,
        "scenario.year_dt": 60.0,
        "scenario.year_hours": 8760,
        "scenario.sweep_factors": "1.0,1.6,1.8,2.0",
        "scenario.sweep_include_load": True,
        "output.dir": "out",
        "output.trace": True,
        "output.year_trace_stride": 60,
    })
    return d


DEFAULTS: dict[str, Any] = _build_defaults()
_TYPES = {
    k: ("float" if k in ("design.tank_capacity_kg", "scenario.event_time") else
        "int" if k == "scenario.event_index" else
        "str" if v is None else type(v).__name__)
    for k, v in DEFAULTS.items()
}


def _convert(key: str, raw: str) -> Any:
    raw = raw.strip()
    kind = _TYPES[key]
    if key in _OPTIONAL and raw.lower() in ("", "none"):
        return None
    if key == "scenario.event_time" and raw in (WORST_CHARGE, WORST_DISCHARGE):
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return v
    if key in _CHOICES and raw not in _CHOICES[key]:
        raise ValueError(f"expected one of {', '.join(_CHOICES[key])}, got {raw!r}")
    if key == "design.loads":
        _parse_loads(raw)
    if key == "scenario.sweep_factors":
        parse_factors(raw)
    return raw


def parse_factors(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"factor list {text!r} is not comma-separated numbers") from None
    if not vals:
        raise ValueError("empty factor list")
    if any(v < 1 for v in vals):
        raise ValueError("sweep factors must be >= 1")
    return vals


@dataclass(frozen=True)
class Entry:
    key: str
    raw: str
    where: str  # "file:line" or "--set"


def parse_text(text: str, source: str = "<config>") -> list[Entry]:
    """Entries in file order; syntax and unknown keys are reported with their line."""
    entries = []
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        where = f"{source}:{n}"
        body = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line.strip()!r}")
            section = body[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{where}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {line.strip()!r}")
        k, v = (s.strip() for s in body.split("=", 1))
        key = k if "." in k else (f"{section}.{k}" if section else k)
        entries.append(_entry(key, v, where))
    return entries


def parse_override(text: str) -> Entry:
    if "=" not in text:
        raise ConfigError(f"--set {text}: expected KEY=VALUE")
    k, v = (s.strip() for s in text.split("=", 1))
    return _entry(k, v, f"--set {text}")


def _entry(key: str, raw: str, where: str) -> Entry:
    if key not in DEFAULTS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        _convert(key, raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {key}: {exc}") from None
    return Entry(key, raw, where)


class Config:
    """Effective configuration: defaults, design preset, then explicit entries."""

    def __init__(self, entries: Iterable[Entry] = ()):
        self.explicit: dict[str, Entry] = {}
        for e in entries:
            self.explicit[e.key] = e  # later entries win
        values = dict(DEFAULTS)
        name = _convert("design.name", self.explicit["design.name"].raw) \
            if "design.name" in self.explicit else DEFAULTS["design.name"]
        if name in DESIGNS:
            preset = DESIGNS[name]
            for f in fields(DesignSpec):
                if f.name not in _DESIGN_SKIP:
                    values[f"design.{f.name}"] = getattr(preset, f.name)
            values["design.loads"] = _format_loads(preset.loads)
        for key, e in self.explicit.items():
            values[key] = _convert(key, e.raw)
        values["design.name"] = name
        self.values = values
        # fail early, with the line of the offending key when it can be found
        self.design()
        self.control()
        self.event()

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.values == other.values

    def _where(self, msg: str) -> str:
        for key, e in self.explicit.items():
            if key in msg or key.split(".", 1)[1] in msg:
                return f"{e.where}: {msg}"
        return msg

    def design(self) -> DesignSpec:
        v = self.values
        kw = {f.name: v[f"design.{f.name}"] for f in fields(DesignSpec) if f.name not in _DESIGN_SKIP}
        try:
            return DesignSpec(name=v["design.name"], loads=_parse_loads(v["design.loads"]), **kw)
        except ConfigError as exc:
            raise ConfigError(self._where(str(exc))) from None

    def control(self) -> ControlConfig:
        kw = {f.name: self.values[f"control.{f.name}"] for f in fields(ControlConfig)}
        try:
            return ControlConfig(**kw)
        except ConfigError as exc:
            raise ConfigError(self._where(str(exc))) from None

    def event(self) -> EventSpec | None:
        v = self.values
        kind, t, idx = v["scenario.event_kind"], v["scenario.event_time"], v["scenario.event_index"]
        if kind is None:
            if t is not None or idx is not None:
                raise ConfigError(self._where("scenario.event_time/event_index need scenario.event_kind"))
            return None
        if t is None:
            raise ConfigError(self._where("scenario.event_kind needs scenario.event_time"))
        try:
            return EventSpec(t, kind, idx)
        except ConfigError as exc:
            raise ConfigError(self._where(str(exc))) from None

    def factors(self) -> tuple[float, ...]:
        return parse_factors(self.values["scenario.sweep_factors"])

    def with_overrides(self, overrides: Iterable[str]) -> "Config":
        return Config(list(self.explicit.values()) + [parse_override(o) for o in overrides])

    def echo(self) -> str:
        """Every effective value, in a form that parses back to an equal config."""
        lines = []
        for sec in SECTIONS:
            lines.append(f"[{sec}]")
            for key, val in self.values.items():
                if key.startswith(sec + "."):
                    lines.append(f"{key.split('.', 1)[1]} = {_format_value(val)}")
            lines.append("")
        return "\n".join(lines)


def _format_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> Config:
    entries: list[Entry] = []
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{p}: cannot read config: {exc.strerror or exc}") from None
        entries = parse_text(text, str(p))
    entries += [parse_override(o) for o in overrides]
    return Config(entries)


def config_from_text(text: str, source: str = "<config>") -> Config:
    return Config(parse_text(text, source))

