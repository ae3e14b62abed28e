"""Year-long and short-term KPIs, and side-by-side design reports."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .errors import ConfigError

SHUTDOWN_EPS = 1e-3  # MW


def _series(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError("series must be a non-empty 1-D sequence")
    return arr


def utilization_rate(p, eps: float = SHUTDOWN_EPS) -> float:
    """Fraction of (equal-length) steps with output above ``eps``."""
    arr = _series(p)
    return float(np.count_nonzero(arr > eps) / arr.size)


def capacity_factor(p, rated: float) -> float:
    if rated <= 0:
        raise ConfigError("rated must be > 0")
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        return 0.0
    return float(arr.mean() / rated)


# Both are delivered (or consumed) energy over rated energy for the whole period.
load_factor = capacity_factor


def longest_shutdown(p, dt: float, eps: float = SHUTDOWN_EPS) -> float:
    """Longest run of consecutive steps at or below ``eps``, in days."""
    off = _series(p) <= eps
    if not off.any():
        return 0.0
    # run lengths from the edges of the padded boolean mask
    edges = np.flatnonzero(np.diff(np.concatenate(([0], off.view(np.int8), [0]))))
    runs = edges[1::2] - edges[::2]
    return float(runs.max() * dt / 86400.0)


def curtailed_energy(avail, actual, dt: float) -> float:
    """Energy not taken from the farm, GWh."""
    a = np.asarray(avail, dtype=float)
    b = np.asarray(actual, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.maximum(a - b, 0.0).sum() * dt / 3600.0 / 1000.0)


def bess_peaks(requested) -> tuple[float, float]:
    """(max charge, max discharge) of the pre-clip BESS request, as magnitudes."""
    r = np.asarray(requested, dtype=float)
    if r.size == 0:
        return 0.0, 0.0
    return max(-float(r.min()), 0.0), max(float(r.max()), 0.0)


@dataclass(frozen=True)
class KpiReport:
    wpp_utilization: float
    wpp_longest_shutdown_days: float
    wpp_curtailed_gwh: float
    wpp_curtailed_fraction: float
    wpp_capacity_factor: float
    wpp_available_capacity_factor: float
    ely_utilization: float
    ely_longest_shutdown_days: float
    ely_load_factor: float
    fc_utilization: float
    fc_longest_shutdown_days: float
    fc_capacity_factor: float
    bess_max_charge_mw: float
    bess_max_discharge_mw: float
    soc_min_seen: float
    soc_max_seen: float
    h2_net_kg: float
    h2_min_level_kg: float
    max_abs_freq_dev_hz: float
    shed_energy_mwh: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def compute_kpis(result) -> KpiReport:
    tr = result.trace
    d = result.design
    dt = tr.dt
    avail_energy = float(tr.wind_avail.sum())
    curt = curtailed_energy(tr.wind_avail, tr.wind_actual, dt)
    ch, dis = bess_peaks(tr.bess_requested)
    ely_rated = max(d.ely_mw, 1e-12)
    fc_rated = max(d.fc_mw, 1e-12)
    return KpiReport(
        wpp_utilization=utilization_rate(tr.wind_actual),
        wpp_longest_shutdown_days=longest_shutdown(tr.wind_actual, dt),
        wpp_curtailed_gwh=curt,
        wpp_curtailed_fraction=(curt * 1000.0 * 3600.0 / dt) / avail_energy if avail_energy > 0 else 0.0,
        wpp_capacity_factor=capacity_factor(tr.wind_actual, d.wind_mw),
        wpp_available_capacity_factor=capacity_factor(tr.wind_avail, d.wind_mw),
        ely_utilization=utilization_rate(tr.ely_P),
        ely_longest_shutdown_days=longest_shutdown(tr.ely_P, dt),
        ely_load_factor=load_factor(tr.ely_P, ely_rated),
        fc_utilization=utilization_rate(tr.fc_P),
        fc_longest_shutdown_days=longest_shutdown(tr.fc_P, dt),
        fc_capacity_factor=capacity_factor(tr.fc_P, fc_rated),
        bess_max_charge_mw=ch,
        bess_max_discharge_mw=dis,
        soc_min_seen=float(tr.soc.min()),
        soc_max_seen=float(tr.soc.max()),
        h2_net_kg=float(tr.h2_level[-1] - d.tank_initial_kg),
        h2_min_level_kg=float(tr.h2_level.min()),
        max_abs_freq_dev_hz=float(np.abs(tr.freq_dev).max()),
        shed_energy_mwh=float(tr.shed.sum() * dt / 3600.0),
    )


def unit_utilization(unit_loads: np.ndarray, eps_fraction: float = SHUTDOWN_EPS / 5.0) -> list[float]:
    """Per-unit fraction of steps in operation (columns are units)."""
    if unit_loads is None or unit_loads.size == 0:
        return []
    return [float(x) for x in (unit_loads > eps_fraction).mean(axis=0)]


def summary_text(result, extra: dict | None = None) -> str:
    """``key = value`` lines: identity, design echo, then every KPI."""
    lines = [f"scenario = {result.scenario}", f"seed = {result.seed}"]
    d = result.design
    for name in ("name", "wind_mw", "ely_mw", "ely_ramp_s", "fc_mw", "bess_mw", "bess_mwh"):
        lines.append(f"design.{name} = {_fmt(getattr(d, name))}")
    for t, kind, idx in result.events:
        lines.append(f"event = {kind} index={idx} t_s={_fmt(t)}")
    if result.baseline_peaks is not None:
        lines.append(f"baseline_max_charge_mw = {_fmt(result.baseline_peaks[0])}")
        lines.append(f"baseline_max_discharge_mw = {_fmt(result.baseline_peaks[1])}")
    for k, v in result.kpis.as_dict().items():
        lines.append(f"kpi.{k} = {_fmt(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


TABLE_ROWS = (
    ("WPP utilization", "wpp_utilization"),
    ("WPP longest shutdown (d)", "wpp_longest_shutdown_days"),
    ("WPP curtailed (GWh)", "wpp_curtailed_gwh"),
    ("WPP curtailed share", "wpp_curtailed_fraction"),
    ("WPP capacity factor", "wpp_capacity_factor"),
    ("ELY utilization", "ely_utilization"),
    ("ELY longest shutdown (d)", "ely_longest_shutdown_days"),
    ("ELY load factor", "ely_load_factor"),
    ("FC utilization", "fc_utilization"),
    ("FC longest shutdown (d)", "fc_longest_shutdown_days"),
    ("FC capacity factor", "fc_capacity_factor"),
    ("BESS max charge (MW)", "bess_max_charge_mw"),
    ("BESS max discharge (MW)", "bess_max_discharge_mw"),
    ("SOC min", "soc_min_seen"),
    ("SOC max", "soc_max_seen"),
    ("Net H2 (t)", "h2_net_kg"),
    ("Max |df| (Hz)", "max_abs_freq_dev_hz"),
)


def summarize_designs(results: Sequence, fmt: str = "text") -> str:
    """One column per result, one row per KPI (``text`` or ``csv``)."""
    if not results:
        raise ConfigError("need at least one result")
    heads = [r.design.name if r.design.name else r.scenario for r in results]
    rows = []
    for label, key in TABLE_ROWS:
        vals = []
        for r in results:
            v = getattr(r.kpis, key)
            vals.append(v / 1000.0 if key == "h2_net_kg" else v)
        rows.append((label, vals))
    if fmt == "csv":
        out = ["kpi," + ",".join(heads)]
        out += [label + "," + ",".join(f"{v:.6g}" for v in vals) for label, vals in rows]
        return "\n".join(out) + "\n"
    w0 = max(len(r[0]) for r in rows)
    w = max(12, max(len(h) for h in heads))
    out = ["KPI".ljust(w0) + "".join(h.rjust(w + 2) for h in heads)]
    for label, vals in rows:
        out.append(label.ljust(w0) + "".join(f"{v:.4g}".rjust(w + 2) for v in vals))
    return "\n".join(out) + "\n"


def kpi_csv_row(result, header: bool = False) -> str:
    d = result.kpis.as_dict()
    line = ",".join([result.scenario, result.design.name] + [f"{v:.9g}" for v in d.values()])
    if header:
        return "scenario,design," + ",".join(d) + "\n" + line + "\n"
    return line + "\n"


def fraction_within(series, center: float, band: float) -> float:
    arr = _series(series)
    return float(np.count_nonzero(np.abs(arr - center) <= band) / arr.size)
