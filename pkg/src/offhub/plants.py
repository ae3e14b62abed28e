"""Ramp- and capacity-limited units: electrolyzers, fuel cells, BESS, H2 tank, loads."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .errors import ConfigError, DomainError

H2_MOLAR_MASS = 2.016  # g/mol
MOLAR_VOLUME_NORMAL = 22.414  # L/mol at 0 degC, 1 atm
H2_NORMAL_DENSITY = H2_MOLAR_MASS / MOLAR_VOLUME_NORMAL  # kg/Nm3
H2_LHV_KWH_PER_KG = 33.33
FC_EFFICIENCY = 0.5
#: kg of H2 per MWh of fuel-cell output at 50 % LHV efficiency.
FC_SPECIFIC_CONSUMPTION = 1000.0 / (H2_LHV_KWH_PER_KG * FC_EFFICIENCY)

FAST_ELY_RAMP_S = 11.0
SLOW_ELY_RAMP_S = 706.0
FC_RAMP_S = 10.0

_RANGE_TOL = 1e-9


def ramp_toward(load: float, target: float, ramp_time_full: float, dt: float) -> float:
    """Move ``load`` toward ``target`` by at most dt/ramp_time_full (fractions of rating)."""
    step = dt / ramp_time_full
    if target > load:
        return min(load + step, target)
    if target < load:
        return max(load - step, target)
    return load


def ramp_units(loads: list[float], targets: list[float], ramp_time_full: float, dt: float,
               sequential: bool = False) -> list[float]:
    """Ramp a plant's units in place toward per-unit target fractions.

    With ``sequential`` only one unit moves at a time in each direction:
    start-ups run in index order, shut-downs in reverse order. Time left in
    the step after a unit reaches its target passes on to the next unit, so
    the plant moves at one unit's rate regardless of ``dt``.
    """
    n = len(loads)
    if not sequential:
        for i in range(n):
            loads[i] = ramp_toward(loads[i], targets[i], ramp_time_full, dt)
        return loads
    budget = dt
    for i in range(n):
        gap = targets[i] - loads[i]
        if gap <= 0:
            continue
        need = gap * ramp_time_full
        if need <= budget:
            loads[i] = targets[i]
            budget -= need
        else:
            loads[i] += budget / ramp_time_full
            break
    budget = dt
    for i in range(n - 1, -1, -1):
        gap = loads[i] - targets[i]
        if gap <= 0:
            continue
        need = gap * ramp_time_full
        if need <= budget:
            loads[i] = targets[i]
            budget -= need
        else:
            loads[i] -= budget / ramp_time_full
            break
    return loads


def _check_power(power: float, rating: float) -> None:
    if power < -_RANGE_TOL or power > rating * (1 + _RANGE_TOL) + _RANGE_TOL:
        raise DomainError(f"power {power} MW outside [0, {rating}] MW")


@dataclass
class ElectrolyzerTrain:
    rating: float = 5.0
    ramp_time_full: float = SLOW_ELY_RAMP_S
    load: float = 0.0
    target: float = 0.0
    nominal_production: float = 1000.0  # Nm3/h at rated power

    def __post_init__(self):
        if self.ramp_time_full <= 0 or self.rating <= 0:
            raise ConfigError("electrolyzer rating and ramp time must be > 0")

    @property
    def kg_per_mwh(self) -> float:
        return self.nominal_production * H2_NORMAL_DENSITY / self.rating

    @property
    def power(self) -> float:
        return self.load * self.rating

    def step(self, dt: float) -> float:
        self.load = ramp_toward(self.load, self.target, self.ramp_time_full, dt)
        return self.power


def ely_hydrogen_rate(power: float, train: ElectrolyzerTrain) -> float:
    """Hydrogen production in kg/h at electrical input ``power`` (MW)."""
    _check_power(power, train.rating)
    return power * train.kg_per_mwh


@dataclass
class FuelCellBlock:
    rating: float = 5.0
    ramp_time_full: float = FC_RAMP_S
    load: float = 0.0
    target: float = 0.0
    specific_consumption: float = FC_SPECIFIC_CONSUMPTION  # kg/MWh

    def __post_init__(self):
        if self.ramp_time_full <= 0 or self.rating <= 0:
            raise ConfigError("fuel cell rating and ramp time must be > 0")
        if self.specific_consumption <= 0:
            raise ConfigError("specific_consumption must be > 0")

    @property
    def power(self) -> float:
        return self.load * self.rating

    def step(self, dt: float) -> float:
        self.load = ramp_toward(self.load, self.target, self.ramp_time_full, dt)
        return self.power


def fc_hydrogen_consumption(power: float, block: FuelCellBlock, dt: float) -> float:
    """Hydrogen burnt (kg) running at ``power`` MW for ``dt`` hours."""
    _check_power(power, block.rating)
    return power * dt * block.specific_consumption


@dataclass
class Bess:
    power_rating: float = 10.0
    energy_capacity: float = 10.0
    soc: float = 0.5
    soc_min: float = 0.0
    soc_max: float = 1.0
    round_trip_efficiency: float = 1.0
    apparent_rating: float = 20.0

    def __post_init__(self):
        if self.power_rating <= 0 or self.energy_capacity <= 0:
            raise ConfigError("BESS power and energy ratings must be > 0")
        if not (0 <= self.soc_min <= self.soc <= self.soc_max <= 1):
            raise ConfigError("BESS SOC must satisfy 0 <= soc_min <= soc <= soc_max <= 1")
        if not (0 < self.round_trip_efficiency <= 1):
            raise ConfigError("round_trip_efficiency must lie in (0, 1]")


def bess_limits(bess: Bess, dt: float) -> tuple[float, float]:
    """(max discharge, max charge) in MW for the next ``dt`` hours, both >= 0."""
    eta = math.sqrt(bess.round_trip_efficiency)
    e = bess.energy_capacity
    dis = min(bess.power_rating, max(bess.soc - bess.soc_min, 0.0) * e * eta / dt)
    chg = min(bess.power_rating, max(bess.soc_max - bess.soc, 0.0) * e / (eta * dt))
    return dis, chg


def bess_apply(requested: float, bess: Bess, dt: float) -> tuple[float, float, bool]:
    """Deliver ``requested`` MW (+discharge/-charge) for ``dt`` hours within limits.

    Efficiency is split evenly: sqrt(eta) on the way in and on the way out.
    Returns (actual MW, new SOC, clipped).
    """
    if dt <= 0:
        raise DomainError("dt must be > 0")
    dis, chg = bess_limits(bess, dt)
    actual = min(max(requested, -chg), dis)
    eta = math.sqrt(bess.round_trip_efficiency)
    if actual >= 0:
        soc = bess.soc - actual * dt / (eta * bess.energy_capacity)
    else:
        soc = bess.soc - actual * dt * eta / bess.energy_capacity
    soc = min(max(soc, bess.soc_min), bess.soc_max)
    return actual, soc, actual != requested


@dataclass(frozen=True)
class HydrogenTank:
    level: float = 0.0
    capacity: float | None = None  # None: unbounded, negative levels track imports
    spilled: float = 0.0

    def __post_init__(self):
        if self.capacity is not None and self.level > self.capacity:
            raise ConfigError("tank level above capacity")

    @property
    def bounded(self) -> bool:
        return self.capacity is not None


def tank_update(tank: HydrogenTank, produced: float, consumed: float) -> HydrogenTank:
    if produced < 0 or consumed < 0:
        raise DomainError("produced and consumed must be >= 0")
    level = tank.level + produced - consumed
    spill = 0.0
    if tank.capacity is not None and level > tank.capacity:
        spill = level - tank.capacity
        level = tank.capacity
    return replace(tank, level=level, spilled=tank.spilled + spill)


@dataclass
class PlatformLoad:
    active_power: float
    power_factor: float = 0.8
    priority: int = 1  # lower sheds first
    connected: bool = True

    def __post_init__(self):
        if not (0 < self.power_factor <= 1):
            raise ConfigError("power_factor must lie in (0, 1]")
        if self.active_power < 0:
            raise ConfigError("active_power must be >= 0")

    @property
    def reactive_power(self) -> float:
        return self.active_power * math.tan(math.acos(self.power_factor))


def default_platforms() -> list[PlatformLoad]:
    """Two 5.75 MW and four 4 MW platforms at pf 0.8; the small ones shed first."""
    return [PlatformLoad(5.75, 0.8, 2), PlatformLoad(5.75, 0.8, 2)] + [
        PlatformLoad(4.0, 0.8, 1) for _ in range(4)
    ]


def total_load(platforms: Iterable[PlatformLoad]) -> tuple[float, float]:
    p = q = 0.0
    for pl in platforms:
        if pl.connected:
            p += pl.active_power
            q += pl.reactive_power
    return p, q
