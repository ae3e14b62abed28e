"""Named designs, the short-term S1-S7 suite, the synthetic year and the sizing sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from . import wind as wind_mod
from .engine import (
    TRIP_LOAD,
    TRIP_WIND_TURBINE,
    DesignSpec,
    RunResult,
    Scenario,
    run,
    run_contingency,
    run_year,
)
from .errors import ConfigError
from .plants import FAST_ELY_RAMP_S, SLOW_ELY_RAMP_S
from .pms import ControlConfig

REFERENCE_SEED = 0
SHORT_TERM_S = 7200.0
ANNUAL_CSV = "annual_mean_wind.csv"

DESIGNS = {
    "initial": DesignSpec(name="initial"),
    "design1": DesignSpec(name="design1", fc_mw=30.0, ely_ramp_s=FAST_ELY_RAMP_S),
    "design2": DesignSpec(name="design2", fc_mw=25.0, bess_mwh=300.0, ely_ramp_s=FAST_ELY_RAMP_S),
}


@dataclass(frozen=True)
class CaseSpec:
    name: str
    ely_ramp_s: float
    ely_allocation: str
    event: str | None = None  # event kind
    direction: str | None = None  # worst instant the event is placed at


SUITE = (
    CaseSpec("S1", SLOW_ELY_RAMP_S, "sequence"),
    CaseSpec("S2", SLOW_ELY_RAMP_S, "synchronized"),
    CaseSpec("S3", FAST_ELY_RAMP_S, "sequence"),
    CaseSpec("S4", SLOW_ELY_RAMP_S, "sequence", TRIP_WIND_TURBINE, "discharge"),
    CaseSpec("S5", FAST_ELY_RAMP_S, "sequence", TRIP_WIND_TURBINE, "discharge"),
    CaseSpec("S6", SLOW_ELY_RAMP_S, "sequence", TRIP_LOAD, "charge"),
    CaseSpec("S7", FAST_ELY_RAMP_S, "sequence", TRIP_LOAD, "charge"),
)


def short_term_wind(design: DesignSpec, seed: int = REFERENCE_SEED, mean_speed: float = 10.0,
                    turbulence_intensity: float = 0.12, dt: float = 1.0,
                    duration: float = SHORT_TERM_S, wake: bool = True,
                    length_scale: float = wind_mod.KAIMAL_LENGTH_SCALE,
                    coherence_decay: float = 12.0, rotor_averaging: bool = True) -> wind_mod.WindField:
    """Rotor-averaged, waked wind at every turbine for one short-term window."""
    layout = design.layout()
    turb = wind_mod.TurbulenceSpec(mean_speed, turbulence_intensity, length_scale, coherence_decay,
                                   seed, design.turbine.rotor_diameter if rotor_averaging else None)
    wf = wind_mod.synthesize_wind_field(layout, turb, dt, duration)
    return wind_mod.apply_wake(wf, layout, design.turbine, design.wake_decay, enabled=wake)


def case_scenario(case: CaseSpec, design: DesignSpec, wf: wind_mod.WindField,
                  control: ControlConfig = ControlConfig(), seed: int | None = None) -> Scenario:
    d = replace(design, ely_ramp_s=case.ely_ramp_s)
    cfg = replace(control, ely_allocation=case.ely_allocation)
    return Scenario(case.name, d, wf, wf.dt, control=cfg, seed=seed)


def run_case(case: CaseSpec, design: DesignSpec, wf: wind_mod.WindField,
             control: ControlConfig = ControlConfig(), seed: int | None = None) -> RunResult:
    scn = case_scenario(case, design, wf, control, seed)
    if case.event is None:
        return run(scn)
    return run_contingency(scn, case.event, case.direction)


def synthetic_annual_means(scale: float, shape: float = 2.0, seed: int = 2024,
                           corr_hours: float = 30.0, hours: int = 8760) -> np.ndarray:
    """Hourly mean wind speeds with a Weibull marginal and AR(1) persistence.

    A unit-variance Gaussian AR(1) series is mapped through the normal CDF
    and the Weibull inverse CDF, so every value scales linearly with
    ``scale`` for a fixed seed.
    """
    if scale <= 0 or shape <= 0 or corr_hours <= 0:
        raise ConfigError("scale, shape and corr_hours must be > 0")
    rng = np.random.default_rng(seed)
    phi = math.exp(-1.0 / corr_hours)
    eps = rng.standard_normal(hours)
    z = np.empty(hours)
    z[0] = eps[0]
    innov = math.sqrt(1.0 - phi * phi)
    for i in range(1, hours):
        z[i] = phi * z[i - 1] + innov * eps[i]
    u = np.clip(ndtr(z), 1e-12, 1.0 - 1e-12)
    return scale * (-np.log1p(-u)) ** (1.0 / shape)


def bundled_annual_means() -> np.ndarray:
    """The shipped synthetic year (``hour,mean_mps``)."""
    ref = resources.files("offhub.data").joinpath(ANNUAL_CSV)
    with resources.as_file(ref) as path:
        return wind_mod.read_annual_means(path)


def farm_capacity_factor(design: DesignSpec, means: Sequence[float], dt_long: float = 60.0,
                         seed: int = REFERENCE_SEED, turbulence_intensity: float = 0.12) -> float:
    """Available-power capacity factor of the farm over the year (no curtailment)."""
    from .engine import annual_wind_field

    wf = annual_wind_field(design, means, dt_long, seed, turbulence_intensity)
    p = wind_mod.turbine_power(wf, design.turbine).sum(axis=0)
    return float(p.mean() / design.wind_mw)


def calibrate_weibull_scale(target_cf: float = 0.51, design: DesignSpec = DESIGNS["design1"],
                            lo: float = 5.0, hi: float = 15.0, tol: float = 1e-3,
                            **kwargs) -> float:
    """Bisect the Weibull scale until the farm's annual capacity factor hits ``target_cf``."""
    gen = {k: kwargs.pop(k) for k in ("shape", "seed", "corr_hours") if k in kwargs}
    f = lambda c: farm_capacity_factor(design, synthetic_annual_means(c, **gen), **kwargs) - target_cf
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise ConfigError(f"target capacity factor {target_cf} not bracketed by [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm * flo > 0:
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_design(base: DesignSpec, factor: float, include_load: bool = True) -> DesignSpec:
    """Electrolyzer plant scaled by ``factor``; wind sized to load + electrolyzer peak.

    The wind rating is rounded to the nearest whole turbine.
    """
    if factor < 1:
        raise ConfigError("sweep factors must be >= 1")
    ely = base.ely_mw * factor
    need = ely + (base.load_mw if include_load else 0.0)
    rated = base.turbine.rated_power
    n = max(1, int(math.floor(need / rated + 0.5)))
    return replace(base, name=f"{base.name}x{factor:g}", ely_mw=ely, wind_mw=n * rated)


def neutrality_factor(factors: Sequence[float], net_h2: Sequence[float]) -> float | None:
    """Linear-interpolated factor where net hydrogen crosses zero, if bracketed."""
    pts = sorted(zip(factors, net_h2))
    for (f0, h0), (f1, h1) in zip(pts, pts[1:]):
        if h0 == 0:
            return f0
        if h0 < 0 <= h1:
            return f0 + (f1 - f0) * (-h0) / (h1 - h0)
    if pts and pts[-1][1] == 0:
        return pts[-1][0]
    return None


@lru_cache(maxsize=4)
def _cached_annual_means() -> tuple:
    return tuple(bundled_annual_means())


def year(design: DesignSpec, means: Sequence[float] | None = None, **kwargs) -> RunResult:
    if means is None:
        means = np.asarray(_cached_annual_means())
    return run_year(design, means, **kwargs)
