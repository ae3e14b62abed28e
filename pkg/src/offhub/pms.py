"""Power management: secondary dispatch, unit allocation, reactive sharing, frequency proxy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError

NOMINAL_HZ = 50.0

SURPLUS = "surplus"
DEFICIT = "deficit"
BLACKOUT = "blackout"


@dataclass(frozen=True)
class ControlConfig:
    soc_target: float = 0.5
    soc_gain: float = 20.0  # MW per unit SOC error
    soc_cap_fraction: float = 0.5  # bias cap as a fraction of BESS power rating
    soc_integral_time: float = 3600.0  # s; 0 disables integral action
    ely_allocation: str = "sequence"
    fc_allocation: str = "sequence"
    freq_droop: float = 0.04
    freq_lag: float = 2.0
    mode_hysteresis: float = 0.5
    shed_hysteresis: float = 0.5
    pf_low: float = 0.5  # thyristor power factor at and below pf_low_loading
    pf_high: float = 0.9  # at full load
    pf_low_loading: float = 0.1

    def __post_init__(self):
        if not (0 < self.soc_target < 1):
            raise ConfigError("soc_target must lie in (0, 1)")
        if self.freq_droop <= 0 or self.freq_lag <= 0:
            raise ConfigError("freq_droop and freq_lag must be > 0")
        for name in ("ely_allocation", "fc_allocation"):
            if getattr(self, name) not in ("sequence", "synchronized"):
                raise ConfigError(f"{name} must be 'sequence' or 'synchronized'")
        if self.soc_gain < 0 or self.soc_cap_fraction < 0 or self.soc_integral_time < 0:
            raise ConfigError("soc_gain, soc_cap_fraction and soc_integral_time must be >= 0")
        if not (0 < self.pf_low <= 1 and 0 < self.pf_high <= 1 and 0 <= self.pf_low_loading < 1):
            raise ConfigError("thyristor power-factor law out of range")


@dataclass(frozen=True)
class Ratings:
    ely: float
    fc: float
    bess: float


@dataclass(frozen=True)
class DispatchDecision:
    ely_plant_target: float
    fc_plant_target: float
    wind_setpoint: float  # farm power limit; inf when not curtailing
    shed_priorities_active: frozenset = field(default_factory=frozenset)
    mode: str = SURPLUS


@dataclass(frozen=True)
class FrequencyState:
    deviation: float = 0.0
    nominal: float = NOMINAL_HZ


def soc_regulation_power(soc: float, cfg: ControlConfig, bess_rating: float | None = None) -> float:
    """Extra demand (MW) placed on the generators to steer SOC to target.

    Positive means the BESS should charge. Capped at ``soc_cap_fraction``
    of the BESS rating when a rating is given.
    """
    bias = cfg.soc_gain * (cfg.soc_target - soc)
    if bess_rating is not None:
        cap = cfg.soc_cap_fraction * bess_rating
        bias = min(max(bias, -cap), cap)
    return bias


def soc_integral_step(integral: float, soc: float, cfg: ControlConfig, dt: float,
                      bess_rating: float) -> float:
    """Advance the integral part of SOC regulation by ``dt`` seconds (clamped to the cap)."""
    if cfg.soc_integral_time <= 0:
        return 0.0
    integral += cfg.soc_gain * (cfg.soc_target - soc) * dt / cfg.soc_integral_time
    cap = cfg.soc_cap_fraction * bess_rating
    return min(max(integral, -cap), cap)


def dispatch_targets(wind_avail: float, load: float, soc_bias: float, h2_available: bool,
                     ratings: Ratings, cfg: ControlConfig, prev_mode: str = SURPLUS,
                     shed_candidates: Sequence[tuple[int, float]] = (),
                     prev_shed: frozenset = frozenset()) -> DispatchDecision:
    """Plant-level targets for one PMS cycle.

    ``shed_candidates`` lists (priority, MW) of connected loads; they are only
    used when the fuel cells cannot run for lack of hydrogen.
    """
    net = wind_avail - load - soc_bias
    hyst = cfg.mode_hysteresis
    if prev_mode == SURPLUS:
        surplus = net > -hyst
    else:
        surplus = net > hyst

    if surplus:
        ely = min(max(net, 0.0), ratings.ely)
        setpoint = math.inf
        if net > ratings.ely:
            setpoint = max(load + soc_bias + ratings.ely, 0.0)
        return DispatchDecision(ely, 0.0, setpoint, frozenset(), SURPLUS)

    deficit = -net
    if h2_available:
        return DispatchDecision(0.0, min(max(deficit, 0.0), ratings.fc), math.inf,
                                frozenset(), DEFICIT)

    # no hydrogen: keep what wind alone can carry, lowest priority goes first
    shed = set(prev_shed)
    remaining = load - sum(mw for pr, mw in shed_candidates if pr in shed)
    for pr in sorted({p for p, _ in shed_candidates}):
        if remaining <= wind_avail:
            break
        if pr not in shed:
            shed.add(pr)
            remaining -= sum(mw for p, mw in shed_candidates if p == pr)
    for pr in sorted(shed, reverse=True):
        block = sum(mw for p, mw in shed_candidates if p == pr)
        if remaining + block + cfg.shed_hysteresis <= wind_avail:
            shed.discard(pr)
            remaining += block
        else:
            break
    return DispatchDecision(0.0, 0.0, math.inf, frozenset(shed), BLACKOUT)


def allocate_sequence(plant_target: float, units: Sequence[float]) -> tuple[list[float], bool]:
    """Fill units in index order, each to its rating before the next starts.

    Returns (per-unit MW, clamped) where ``clamped`` flags a target above the
    plant rating.
    """
    total = math.fsum(units)
    clamped = plant_target > total * (1 + 1e-12)
    remaining = min(max(plant_target, 0.0), total)
    out = []
    for r in units:
        take = min(r, remaining)
        out.append(take)
        remaining -= take
    return out, clamped


def allocate_synchronized(plant_target: float, units: Sequence[float]) -> tuple[list[float], bool]:
    """Every unit at the same loading fraction."""
    total = math.fsum(units)
    clamped = plant_target > total * (1 + 1e-12)
    frac = min(max(plant_target, 0.0), total) / total if total > 0 else 0.0
    return [r * frac for r in units], clamped


def thyristor_power_factor(loading: float, cfg: ControlConfig = ControlConfig()) -> float:
    lo = cfg.pf_low_loading
    if loading <= lo:
        return cfg.pf_low
    return cfg.pf_low + (cfg.pf_high - cfg.pf_low) * (loading - lo) / (1.0 - lo)


def electrolyzer_reactive_demand(loading: float, rating: float,
                                 cfg: ControlConfig = ControlConfig()) -> float:
    """Reactive power (MVAr) drawn by one thyristor-fed train."""
    if loading <= 0:
        return 0.0
    pf = thyristor_power_factor(loading, cfg)
    return loading * rating * math.sqrt(1.0 - pf * pf) / pf


def reactive_dispatch(fc_block_power: Sequence[float], q_load: float, q_ely: float,
                      afe_ratings: Sequence[float]) -> tuple[float, float]:
    """Share reactive demand: fuel-cell AFEs first, the BESS covers the rest."""
    headroom = 0.0
    for p, s in zip(fc_block_power, afe_ratings):
        headroom += math.sqrt(max(s * s - p * p, 0.0))
    demand = q_load + q_ely
    q_afe = min(demand, headroom)
    return q_afe, demand - q_afe


def frequency_step(state: FrequencyState, bess_requested: float, bess_rating: float,
                   cfg: ControlConfig, dt: float) -> FrequencyState:
    """First-order droop response to the per-unit BESS power demand."""
    target = -cfg.freq_droop * state.nominal * bess_requested / bess_rating
    alpha = 1.0 - math.exp(-dt / cfg.freq_lag)
    return FrequencyState(state.deviation + alpha * (target - state.deviation), state.nominal)
