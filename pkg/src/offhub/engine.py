"""Fixed-step hub simulation, event injection and worst-instant contingencies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import wind as wind_mod
from .errors import ConfigError, InvariantViolation
from .plants import (
    FC_RAMP_S,
    FC_SPECIFIC_CONSUMPTION,
    H2_NORMAL_DENSITY,
    SLOW_ELY_RAMP_S,
    Bess,
    HydrogenTank,
    PlatformLoad,
    bess_apply,
    default_platforms,
    ramp_units,
    tank_update,
)
from .pms import (
    SURPLUS,
    ControlConfig,
    FrequencyState,
    Ratings,
    allocate_sequence,
    allocate_synchronized,
    dispatch_targets,
    electrolyzer_reactive_demand,
    frequency_step,
    reactive_dispatch,
    soc_integral_step,
    soc_regulation_power,
)
from .wind import FarmLayout, TurbineSpec, WindField

BALANCE_TOL = 1e-6

TRIP_WIND_TURBINE = "trip_wind_turbine"
TRIP_LOAD = "trip_load"
WORST_CHARGE = "worst_charge"
WORST_DISCHARGE = "worst_discharge"


@dataclass(frozen=True)
class LoadSpec:
    active_power: float
    power_factor: float = 0.8
    priority: int = 1


DEFAULT_LOADS = tuple(LoadSpec(p.active_power, p.power_factor, p.priority) for p in default_platforms())


@dataclass(frozen=True)
class DesignSpec:
    """Component ratings of one hub design. Defaults are the initial design."""

    name: str = "initial"
    wind_mw: float = 64.0
    turbine: TurbineSpec = TurbineSpec()
    ely_mw: float = 35.0
    ely_unit_mw: float = 5.0
    ely_ramp_s: float = SLOW_ELY_RAMP_S
    ely_nm3h_per_unit_mw: float = 200.0
    fc_mw: float = 35.0
    fc_unit_mw: float = 5.0
    fc_ramp_s: float = FC_RAMP_S
    fc_specific_consumption: float = FC_SPECIFIC_CONSUMPTION
    bess_mw: float = 10.0
    bess_mwh: float = 10.0
    bess_mva: float = 20.0
    soc_min: float = 0.0
    soc_max: float = 1.0
    soc_initial: float = 0.5
    round_trip_efficiency: float = 1.0
    tank_capacity_kg: float | None = None
    tank_initial_kg: float = 0.0
    loads: tuple[LoadSpec, ...] = DEFAULT_LOADS
    spacing_d: float = 5.0  # turbine spacing in rotor diameters
    n_rows: int = 2
    wake_decay: float = 0.05

    def __post_init__(self):
        for name in ("wind_mw", "ely_unit_mw", "fc_unit_mw", "bess_mw", "bess_mwh", "bess_mva",
                     "ely_ramp_s", "fc_ramp_s", "fc_specific_consumption", "ely_nm3h_per_unit_mw"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"design.{name} must be > 0")
        for name in ("ely_mw", "fc_mw"):
            if getattr(self, name) < 0:
                raise ConfigError(f"design.{name} must be >= 0")
        if self.spacing_d <= 0 or self.n_rows < 1 or self.wake_decay < 0:
            raise ConfigError("design.spacing_d, n_rows and wake_decay out of range")
        n = self.wind_mw / self.turbine.rated_power
        if abs(n - round(n)) > 1e-6:
            raise ConfigError(
                f"design.wind_mw={self.wind_mw} is not a whole number of "
                f"{self.turbine.rated_power} MW turbines")
        if self.tank_capacity_kg is not None and self.tank_initial_kg > self.tank_capacity_kg:
            raise ConfigError("design.tank_initial_kg exceeds tank capacity")
        Bess(self.bess_mw, self.bess_mwh, self.soc_initial, self.soc_min, self.soc_max,
             self.round_trip_efficiency, self.bess_mva)

    @property
    def n_turbines(self) -> int:
        return int(round(self.wind_mw / self.turbine.rated_power))

    @staticmethod
    def _split(total: float, unit: float) -> list[float]:
        if total <= 0:
            return []
        n = math.ceil(total / unit - 1e-9)
        return [total / n] * n

    @property
    def ely_units(self) -> list[float]:
        return self._split(self.ely_mw, self.ely_unit_mw)

    @property
    def fc_units(self) -> list[float]:
        return self._split(self.fc_mw, self.fc_unit_mw)

    @property
    def ely_kg_per_mwh(self) -> float:
        return self.ely_nm3h_per_unit_mw * H2_NORMAL_DENSITY

    @property
    def load_mw(self) -> float:
        return math.fsum(ld.active_power for ld in self.loads)

    def layout(self) -> FarmLayout:
        return FarmLayout.rows(self.n_turbines, self.turbine.rotor_diameter, self.spacing_d,
                               self.n_rows)


@dataclass(frozen=True)
class EventSpec:
    """A permanent trip. ``time`` is seconds or a worst-instant marker.

    ``index`` picks the turbine or platform; None means the biggest one at the
    event time (highest turbine output, largest platform load).
    """

    time: float | str
    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind not in (TRIP_WIND_TURBINE, TRIP_LOAD):
            raise ConfigError(f"unknown event kind {self.kind!r}")
        if isinstance(self.time, str) and self.time not in (WORST_CHARGE, WORST_DISCHARGE):
            raise ConfigError(f"unknown event time marker {self.time!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    design: DesignSpec
    wind: WindField  # speeds at the rotors, wakes included
    dt: float = 1.0
    duration: float | None = None
    events: tuple[EventSpec, ...] = ()
    control: ControlConfig = ControlConfig()
    seed: int | None = None
    check_balance: bool = True

    def __post_init__(self):
        if self.duration is None:
            object.__setattr__(self, "duration", self.wind.duration)
        if self.dt <= 0:
            raise ConfigError("scenario.dt must be > 0")
        if self.duration < self.dt:
            raise ConfigError("scenario.duration must be >= dt")
        if abs(self.wind.dt - self.dt) > 1e-9:
            raise ConfigError(f"wind field dt {self.wind.dt} differs from scenario dt {self.dt}")
        if self.n_steps > self.wind.n_steps:
            raise ConfigError("wind field shorter than scenario duration")
        if self.wind.n_turbines != self.design.n_turbines:
            raise ConfigError(f"wind field has {self.wind.n_turbines} turbines, "
                              f"design has {self.design.n_turbines}")
        for ev in self.events:
            if not isinstance(ev.time, str) and not (0 <= ev.time < self.duration):
                raise ConfigError(f"event time {ev.time} outside the run")
            if ev.index is not None:
                limit = self.design.n_turbines if ev.kind == TRIP_WIND_TURBINE else len(self.design.loads)
                if not (0 <= ev.index < limit):
                    raise ConfigError(f"event index {ev.index} out of range")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class StepRecord:
    t: float
    wind_avail: float
    wind_actual: float
    ely_P: float
    fc_P: float
    load_P: float
    bess_P: float
    bess_requested: float
    Q_load: float
    Q_ely: float
    Q_afe: float
    Q_bess: float
    soc: float
    h2_level: float
    freq_dev: float
    curtailed: float
    shed: float
    clipped: bool


TRACE_COLUMNS = tuple(StepRecord.__dataclass_fields__)
TRACE_HEADER = (
    "t_s", "wind_avail_mw", "wind_actual_mw", "ely_p_mw", "fc_p_mw", "load_p_mw", "bess_p_mw",
    "bess_requested_mw", "q_load_mvar", "q_ely_mvar", "q_afe_mvar", "q_bess_mvar", "soc",
    "h2_level_kg", "freq_dev_hz", "curtailed_mw", "shed_mw", "clipped",
)


class Trace:
    """Column store of step records; ``trace[i]`` gives a :class:`StepRecord`."""

    def __init__(self, columns: dict[str, np.ndarray], dt: float,
                 ely_units: np.ndarray | None = None, fc_units: np.ndarray | None = None):
        self.columns = columns
        self.dt = dt
        self.ely_units = ely_units  # per-unit load fraction, (n_steps, n_units)
        self.fc_units = fc_units
        for arr in columns.values():
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, i: int) -> StepRecord:
        vals = {k: v[i].item() for k, v in self.columns.items()}
        return StepRecord(**vals)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getattr__(self, name: str) -> np.ndarray:
        try:
            return self.__dict__["columns"][name]
        except KeyError:
            raise AttributeError(name) from None

    def write_csv(self, path, stride: int = 1) -> None:
        """Every ``stride``-th step, starting with the first."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(TRACE_HEADER) + "\n")
            cols = [self.columns[c][::max(stride, 1)] for c in TRACE_COLUMNS]
            for row in zip(*cols):
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return f"{float(v):.10g}"


@dataclass
class RunResult:
    scenario: str
    design: DesignSpec
    trace: Trace
    seed: int | None = None
    events: tuple[tuple[float, str, int], ...] = ()  # resolved (time, kind, index)
    baseline_peaks: tuple[float, float] | None = None  # (charge, discharge) before the event
    h2_produced: float = 0.0
    h2_consumed: float = 0.0
    h2_spilled: float = 0.0
    _kpis: object = field(default=None, repr=False)

    @property
    def kpis(self):
        if self._kpis is None:
            from .metrics import compute_kpis
            self._kpis = compute_kpis(self)
        return self._kpis


def _resolve_events(scn: Scenario, turbine_power: np.ndarray) -> list[tuple[int, str, int]]:
    out = []
    loads = scn.design.loads
    for ev in scn.events:
        if isinstance(ev.time, str):
            raise ConfigError("worst-instant markers must be resolved with run_contingency")
        k = int(round(ev.time / scn.dt))
        idx = ev.index
        if idx is None:
            if ev.kind == TRIP_WIND_TURBINE:
                idx = int(np.argmax(turbine_power[:, k]))
            else:
                idx = max(range(len(loads)), key=lambda i: (loads[i].active_power, -i))
        out.append((k, ev.kind, idx))
    return sorted(out)


def run(scn: Scenario) -> RunResult:
    """Step the hub through the scenario.

    Per step: events, available wind, dispatch from the previous step's
    measurements, allocation and unit ramps, BESS residual with clipping,
    hydrogen tank, reactive sharing, frequency.
    """
    if any(isinstance(ev.time, str) for ev in scn.events):
        direction = {WORST_CHARGE: "charge", WORST_DISCHARGE: "discharge"}
        marked = [ev for ev in scn.events if isinstance(ev.time, str)]
        base = run(replace(scn, events=tuple(e for e in scn.events if not isinstance(e.time, str))))
        fixed = list(e for e in scn.events if not isinstance(e.time, str))
        for ev in marked:
            fixed.append(replace(ev, time=find_worst_instant(base, direction[ev.time])))
        res = run(replace(scn, events=tuple(fixed)))
        res.baseline_peaks = _peaks(base.trace)
        return res

    d = scn.design
    cfg = scn.control
    dt = scn.dt
    dt_h = dt / 3600.0
    n = scn.n_steps

    tp = wind_mod.power_curve(scn.wind.speeds[:, :n], d.turbine)
    events = _resolve_events(scn, tp)
    avail = tp.sum(axis=0)
    for k, kind, idx in events:
        if kind == TRIP_WIND_TURBINE:
            avail[k:] -= tp[idx, k:]
    np.maximum(avail, 0.0, out=avail)
    avail_l = avail.tolist()
    load_trips: dict[int, list[int]] = {}
    for k, kind, idx in events:
        if kind == TRIP_LOAD:
            load_trips.setdefault(k, []).append(idx)

    platforms = [PlatformLoad(ld.active_power, ld.power_factor, ld.priority) for ld in d.loads]
    ely_r = d.ely_units
    fc_r = d.fc_units
    ratings = Ratings(math.fsum(ely_r), math.fsum(fc_r), d.bess_mw)
    alloc_ely = allocate_synchronized if cfg.ely_allocation == "synchronized" else allocate_sequence
    alloc_fc = allocate_synchronized if cfg.fc_allocation == "synchronized" else allocate_sequence
    ely_seq = cfg.ely_allocation == "sequence"
    fc_seq = cfg.fc_allocation == "sequence"
    bess = Bess(d.bess_mw, d.bess_mwh, d.soc_initial, d.soc_min, d.soc_max,
                d.round_trip_efficiency, d.bess_mva)
    tank = HydrogenTank(d.tank_initial_kg, d.tank_capacity_kg)
    freq = FrequencyState()
    ely_kg = d.ely_kg_per_mwh
    fc_kg = d.fc_specific_consumption
    ely_ramp = d.ely_ramp_s
    fc_ramp = d.fc_ramp_s

    def loads_now():
        p = q = 0.0
        cands = []
        for pl in platforms:
            if pl.connected:
                p += pl.active_power
                q += pl.reactive_power
                cands.append((pl.priority, pl.active_power))
        return p, q, cands

    load_p, load_q, cands = loads_now()
    mode = SURPLUS
    shed_set: frozenset = frozenset()

    # warm start: units already at the targets of the initial operating point
    bias0 = soc_regulation_power(bess.soc, cfg, bess.power_rating)
    h2_ok = not tank.bounded or tank.level > 0
    dec = dispatch_targets(avail_l[0], load_p, bias0, h2_ok, ratings, cfg, mode, cands, shed_set)
    mode = dec.mode
    ely_load = [t / r for t, r in zip(alloc_ely(dec.ely_plant_target, ely_r)[0], ely_r)]
    fc_load = [t / r for t, r in zip(alloc_fc(dec.fc_plant_target, fc_r)[0], fc_r)]
    meas_wind = avail_l[0]
    meas_load = load_p
    soc_int = 0.0
    bias_cap = cfg.soc_cap_fraction * bess.power_rating

    cols = {c: [] for c in TRACE_COLUMNS}
    c_t, c_wa, c_wact, c_ely, c_fc, c_load, c_bess, c_req = (
        cols["t"], cols["wind_avail"], cols["wind_actual"], cols["ely_P"], cols["fc_P"],
        cols["load_P"], cols["bess_P"], cols["bess_requested"])
    c_ql, c_qe, c_qa, c_qb, c_soc, c_h2, c_f, c_cur, c_shed, c_clip = (
        cols["Q_load"], cols["Q_ely"], cols["Q_afe"], cols["Q_bess"], cols["soc"],
        cols["h2_level"], cols["freq_dev"], cols["curtailed"], cols["shed"], cols["clipped"])
    ely_hist = []
    fc_hist = []
    produced_sum = consumed_sum = 0.0
    n_ely = len(ely_r)
    n_fc = len(fc_r)

    for k in range(n):
        # (1) events
        if k in load_trips:
            for idx in load_trips[k]:
                platforms[idx].connected = False
            load_p, load_q, cands = loads_now()
        # (2) available wind
        w = avail_l[k]
        # (3) dispatch on last step's measurements
        soc_int = soc_integral_step(soc_int, bess.soc, cfg, dt, bess.power_rating)
        bias = soc_regulation_power(bess.soc, cfg, bess.power_rating) + soc_int
        bias = min(max(bias, -bias_cap), bias_cap)
        h2_ok = not tank.bounded or tank.level > 0
        dec = dispatch_targets(meas_wind, meas_load, bias, h2_ok, ratings, cfg, mode, cands, shed_set)
        mode = dec.mode
        shed_set = dec.shed_priorities_active
        # (4) allocation and ramps
        ely_t = alloc_ely(dec.ely_plant_target, ely_r)[0]
        fc_t = alloc_fc(dec.fc_plant_target, fc_r)[0]
        ramp_units(ely_load, [t / r for t, r in zip(ely_t, ely_r)], ely_ramp, dt, ely_seq)
        ramp_units(fc_load, [t / r for t, r in zip(fc_t, fc_r)], fc_ramp, dt, fc_seq)
        ely_p = 0.0
        for i in range(n_ely):
            ely_p += ely_load[i] * ely_r[i]
        fc_p = 0.0
        fc_pow = [0.0] * n_fc
        for i in range(n_fc):
            fc_pow[i] = fc_load[i] * fc_r[i]
            fc_p += fc_pow[i]
        # (5) BESS takes the residual
        w_act = w if w < dec.wind_setpoint else dec.wind_setpoint
        shed_p = 0.0
        if shed_set:
            for pr, mw in cands:
                if pr in shed_set:
                    shed_p += mw
        served = load_p - shed_p
        req = served + ely_p - w_act - fc_p
        act, soc, clipped = bess_apply(req, bess, dt_h)
        bess.soc = soc
        if clipped:
            gap = req - act
            if gap > 0:
                shed_p += gap  # under-frequency shedding of what the BESS cannot carry
            else:
                cut = min(-gap, w_act)
                w_act -= cut
                rest = -gap - cut
                if rest > 0:
                    scale = (fc_p - rest) / fc_p
                    fc_p -= rest
                    fc_pow = [p * scale for p in fc_pow]
        # (6) hydrogen
        produced = ely_p * ely_kg * dt_h
        consumed = fc_p * fc_kg * dt_h
        tank = tank_update(tank, produced, consumed)
        produced_sum += produced
        consumed_sum += consumed
        # (7) reactive
        q_load = load_q * (load_p - shed_p) / load_p if load_p > 0 else 0.0
        q_ely = 0.0
        for i in range(n_ely):
            if ely_load[i] > 0:
                q_ely += electrolyzer_reactive_demand(ely_load[i], ely_r[i], cfg)
        q_afe, q_bess = reactive_dispatch(fc_pow, q_load, q_ely, fc_r)
        # (8) frequency
        freq = frequency_step(freq, req, bess.power_rating, cfg, dt)

        c_t.append(k * dt)
        c_wa.append(w)
        c_wact.append(w_act)
        c_ely.append(ely_p)
        c_fc.append(fc_p)
        c_load.append(load_p)
        c_bess.append(act)
        c_req.append(req)
        c_ql.append(q_load)
        c_qe.append(q_ely)
        c_qa.append(q_afe)
        c_qb.append(q_bess)
        c_soc.append(soc)
        c_h2.append(tank.level)
        c_f.append(freq.deviation)
        c_cur.append(w - w_act)
        c_shed.append(shed_p)
        c_clip.append(clipped)
        ely_hist.append(tuple(ely_load))
        fc_hist.append(tuple(fc_load))

        meas_wind = w
        meas_load = load_p

    arrays = {c: np.asarray(v, dtype=bool if c == "clipped" else float) for c, v in cols.items()}
    trace = Trace(arrays, dt, np.asarray(ely_hist, dtype=float).reshape(n, n_ely),
                  np.asarray(fc_hist, dtype=float).reshape(n, n_fc))
    if scn.check_balance:
        check_balance(trace)
    return RunResult(scn.name, d, trace, scn.seed,
                     tuple((k * dt, kind, idx) for k, kind, idx in events),
                     h2_produced=produced_sum, h2_consumed=consumed_sum, h2_spilled=tank.spilled)


def check_balance(trace: Trace, tol: float = BALANCE_TOL) -> None:
    lhs = trace.wind_actual + trace.fc_P + trace.bess_P
    rhs = trace.load_P - trace.shed + trace.ely_P
    err = np.abs(lhs - rhs)
    if err.size and err.max() > tol:
        i = int(np.argmax(err))
        raise InvariantViolation(f"power balance off by {err[i]:.3g} MW at t={trace.t[i]:g} s")


def _peaks(trace: Trace) -> tuple[float, float]:
    req = trace.bess_requested
    if len(req) == 0:
        return 0.0, 0.0
    return max(-float(req.min()), 0.0), max(float(req.max()), 0.0)


def find_worst_instant(baseline: RunResult, direction: str) -> float:
    """Time of the largest BESS charge or discharge request (earliest on ties)."""
    req = baseline.trace.bess_requested
    if len(req) == 0:
        raise ConfigError("empty trace")
    if direction == "discharge":
        k = int(np.argmax(req))
    elif direction == "charge":
        k = int(np.argmin(req))
    else:
        raise ConfigError(f"direction must be 'charge' or 'discharge', got {direction!r}")
    return float(baseline.trace.t[k])


def run_contingency(scn: Scenario, event_kind: str, direction: str) -> RunResult:
    """Baseline run, then the same run with one trip at the baseline's worst instant."""
    base = run(replace(scn, events=()))
    t = find_worst_instant(base, direction)
    res = run(replace(scn, events=(EventSpec(t, event_kind),)))
    res.baseline_peaks = _peaks(base.trace)
    return res


def run_year(design: DesignSpec, annual_means: Sequence[float], dt_long: float = 60.0,
             control: ControlConfig = ControlConfig(), seed: int = 0,
             turbulence_intensity: float = 0.12, wake: bool = True, name: str | None = None,
             hours: int = 8760, length_scale: float = wind_mod.KAIMAL_LENGTH_SCALE,
             coherence_decay: float = 12.0) -> RunResult:
    """One year at ``dt_long`` on the assembled annual wind field, net H2 tracked."""
    wf = annual_wind_field(design, annual_means, dt_long, seed, turbulence_intensity, wake, hours,
                           length_scale, coherence_decay)
    scn = Scenario(name or f"year-{design.name}", design, wf, dt_long, control=control, seed=seed)
    return run(scn)


def annual_wind_field(design: DesignSpec, annual_means: Sequence[float], dt_long: float = 60.0,
                      seed: int = 0, turbulence_intensity: float = 0.12, wake: bool = True,
                      hours: int = 8760, length_scale: float = wind_mod.KAIMAL_LENGTH_SCALE,
                      coherence_decay: float = 12.0) -> WindField:
    layout = design.layout()
    turb = wind_mod.TurbulenceSpec(0.0, turbulence_intensity, length_scale, coherence_decay, seed)
    wf = wind_mod.assemble_annual(annual_means, layout, turb, dt_long, seed, hours=hours)
    return wind_mod.apply_wake(wf, layout, design.turbine, design.wake_decay, enabled=wake)
