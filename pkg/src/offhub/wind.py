"""Wind farm inflow: turbulence synthesis, wakes, power curves and curtailment.

Per-turbine rotor-averaged wind speed series are synthesized with a
multivariate spectral (Veers) method: a Kaimal auto-spectrum per turbine and
a Davenport exponential coherence between turbines, so that large slow eddies
are shared across the farm while fast fluctuations average out. Wakes are a
Jensen top-hat deficit along a fixed wind direction (+x).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

#: IEC 61400-1 longitudinal integral scale above 60 m hub height (8.1 * 42 m).
KAIMAL_LENGTH_SCALE = 340.2
BLOCK_S = 7200.0
FADE_S = 60.0


@dataclass(frozen=True)
class TurbineSpec:
    rated_power: float = 8.0
    cut_in: float = 4.0
    rated_speed: float = 10.0
    cut_out: float = 25.0
    rotor_diameter: float = 164.0
    thrust_coefficient: float = 0.8

    def __post_init__(self):
        if not (0 < self.cut_in < self.rated_speed < self.cut_out):
            raise ConfigError("turbine speeds must satisfy 0 < cut_in < rated_speed < cut_out")
        if self.rated_power <= 0 or self.rotor_diameter <= 0:
            raise ConfigError("rated_power and rotor_diameter must be positive")
        if not (0 <= self.thrust_coefficient < 1):
            raise ConfigError("thrust_coefficient must lie in [0, 1)")


@dataclass(frozen=True)
class FarmLayout:
    positions: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.positions)
        object.__setattr__(self, "positions", pts)
        if not pts:
            raise ConfigError("layout needs at least one turbine")
        if len(set(pts)) != len(pts):
            raise ConfigError("turbine positions must be distinct")

    @property
    def n_turbines(self) -> int:
        return len(self.positions)

    @property
    def xy(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    def distances(self) -> np.ndarray:
        xy = self.xy
        return np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])

    def validate_spacing(self, rotor_diameter: float) -> None:
        d = self.distances()
        np.fill_diagonal(d, np.inf)
        if d.min() < rotor_diameter - 1e-9:
            raise ConfigError(f"turbines closer than one rotor diameter ({d.min():.1f} m)")

    @classmethod
    def rows(cls, n_turbines: int, rotor_diameter: float = 164.0, spacing_d: float = 5.0,
             n_rows: int = 2) -> "FarmLayout":
        """Rows perpendicular to the wind (+x); row r sits r*spacing downstream."""
        if n_turbines < 1:
            raise ConfigError("n_turbines must be >= 1")
        s = spacing_d * rotor_diameter
        per_row = math.ceil(n_turbines / n_rows)
        pos = [((i // per_row) * s, (i % per_row) * s) for i in range(n_turbines)]
        return cls(tuple(pos))


@dataclass(frozen=True)
class TurbulenceSpec:
    mean_speed: float = 10.0
    turbulence_intensity: float = 0.12
    length_scale: float = KAIMAL_LENGTH_SCALE
    coherence_decay: float = 12.0
    seed: int = 0
    rotor_diameter: float | None = None  # None: point turbulence, no rotor averaging

    def __post_init__(self):
        if self.mean_speed < 0:
            raise ConfigError("mean_speed must be >= 0")
        if not (0 <= self.turbulence_intensity < 1):
            raise ConfigError("turbulence_intensity must lie in [0, 1)")
        if self.length_scale <= 0:
            raise ConfigError("length_scale must be > 0")
        if self.coherence_decay < 0:
            raise ConfigError("coherence_decay must be >= 0")
        if self.rotor_diameter is not None and self.rotor_diameter <= 0:
            raise ConfigError("rotor_diameter must be > 0")


@dataclass(frozen=True)
class WindField:
    """Per-turbine wind speed, shape (n_turbines, n_steps), sampled every ``dt`` s."""

    dt: float
    speeds: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.speeds, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ConfigError("speeds must be a 2-D array (n_turbines, n_steps)")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ConfigError("wind speeds must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "speeds", arr)

    @property
    def n_turbines(self) -> int:
        return self.speeds.shape[0]

    @property
    def n_steps(self) -> int:
        return self.speeds.shape[1]

    @property
    def duration(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt


def power_curve(v, spec: TurbineSpec = TurbineSpec()):
    """Quasi-steady power (MW) for wind speed ``v`` (scalar or array, m/s).

    Cubic between cut-in and rated, flat to cut-out, zero outside.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("wind speed must be >= 0")
    vin3 = spec.cut_in ** 3
    frac = (arr ** 3 - vin3) / (spec.rated_speed ** 3 - vin3)
    p = spec.rated_power * np.clip(frac, 0.0, 1.0)
    p = np.where(arr >= spec.cut_out, 0.0, p)
    if np.ndim(v) == 0:
        return float(p)
    return p


def kaimal_psd(f, mean_speed: float, sigma: float, length_scale: float = KAIMAL_LENGTH_SCALE):
    """One-sided Kaimal spectrum in (m/s)^2/Hz."""
    f = np.asarray(f, dtype=float)
    tl = length_scale / mean_speed
    return 4.0 * sigma ** 2 * tl / (1.0 + 6.0 * f * tl) ** (5.0 / 3.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


def rotor_admittance(f, mean_speed: float, rotor_diameter: float, decay: float = 12.0):
    """Squared admittance of a rotor disc to point turbulence.

    Mean of the exponential coherence exp(-decay*f*s/V) over all pairs of
    points on the disc, using the closed-form distance density for two
    uniform points in a circle. Multiplying a point spectrum by this gives
    the spectrum of the disc-averaged wind speed.
    """
    f = np.asarray(f, dtype=float)
    r = rotor_diameter / 2.0
    s = (_GL_X + 1.0) * r
    u = s / (2.0 * r)
    pdf = 4.0 * s / (np.pi * r * r) * (np.arccos(u) - u * np.sqrt(1.0 - u * u))
    w = _GL_W * r * pdf
    c = decay * f[..., None] / mean_speed
    return np.exp(-c * s) @ w


def _n_steps(dt: float, duration: float) -> int:
    if dt <= 0 or duration <= 0:
        raise ConfigError("dt and duration must be > 0")
    if duration < dt:
        raise ConfigError("duration must be >= dt")
    n = int(round(duration / dt))
    if abs(n * dt - duration) > 1e-6 * max(1.0, duration):
        raise ConfigError(f"duration {duration} is not a multiple of dt {dt}")
    return n


def _fluctuations(distances: np.ndarray, mean_speed: float, sigma: float, length_scale: float,
                  decay: float, dt: float, n: int, rng: np.random.Generator,
                  rotor_diameter: float | None = None) -> np.ndarray:
    """Zero-mean correlated fluctuations, one row per turbine, period n*dt."""
    n_t = distances.shape[0]
    n_f = n // 2 + 1
    # phases are drawn for every bin so the stream length does not depend on sigma
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_f, n_t))
    if sigma <= 0 or mean_speed <= 0 or n < 2:
        return np.zeros((n_t, n))
    df = 1.0 / (n * dt)
    f = np.arange(n_f) * df
    psd = kaimal_psd(f, mean_speed, sigma, length_scale)
    if rotor_diameter is not None:
        psd = psd * rotor_admittance(f, mean_speed, rotor_diameter, decay)
    amp = np.sqrt(2.0 * psd * df)
    amp[0] = 0.0
    if n % 2 == 0:
        amp[-1] = 0.0
    coh = np.exp(-decay * f[:, None, None] * distances[None, :, :] / mean_speed)
    # tiny diagonal load keeps the factorisation stable when coherence -> 1
    coh += 1e-12 * np.eye(n_t)[None, :, :]
    chol = np.linalg.cholesky(coh)
    coeff = np.einsum("kij,kj->ki", chol, amp[:, None] * np.exp(1j * phases))
    spec = coeff.T * (n / 2.0)
    return np.fft.irfft(spec, n=n, axis=1)


def synthesize_wind_field(layout: FarmLayout, turb: TurbulenceSpec, dt: float,
                          duration: float) -> WindField:
    """Free-stream wind speed at every turbine for one stationary period."""
    n = _n_steps(dt, duration)
    rng = np.random.default_rng(turb.seed)
    sigma = turb.turbulence_intensity * turb.mean_speed
    u = _fluctuations(layout.distances(), turb.mean_speed, sigma, turb.length_scale,
                      turb.coherence_decay, dt, n, rng, turb.rotor_diameter)
    return WindField(dt, np.maximum(turb.mean_speed + u, 0.0))


def jensen_deficit(ct: float, k: float, x: float, radius: float) -> float:
    """Fractional velocity deficit of a top-hat wake ``x`` metres downstream."""
    if x <= 0:
        return 0.0
    return (1.0 - math.sqrt(1.0 - ct)) / (1.0 + k * x / radius) ** 2


def wake_pairs(layout: FarmLayout, spec: TurbineSpec, k: float = 0.05):
    """(downstream, upstream, deficit) for every rotor centre inside a wake cone."""
    xy = layout.xy
    r = spec.rotor_diameter / 2.0
    pairs = []
    for i in range(layout.n_turbines):
        for j in range(layout.n_turbines):
            dx = xy[i, 0] - xy[j, 0]
            if dx <= 0:
                continue
            if abs(xy[i, 1] - xy[j, 1]) <= r + k * dx:
                pairs.append((i, j, jensen_deficit(spec.thrust_coefficient, k, dx, r)))
    return pairs


def apply_wake(wf: WindField, layout: FarmLayout, spec: TurbineSpec = TurbineSpec(),
               k: float = 0.05, enabled: bool = True) -> WindField:
    """Reduce waked turbines' speeds by the combined Jensen deficit.

    Deficits from several upstream rotors combine as a root sum of squares.
    A waked speed is also capped at the inflow of each waking rotor, so a
    downstream sample never exceeds what arrives at the turbine in front.
    """
    if wf.n_turbines != layout.n_turbines:
        raise ConfigError(f"wind field has {wf.n_turbines} turbines, layout has {layout.n_turbines}")
    pairs = wake_pairs(layout, spec, k)
    if not enabled or not pairs:
        return wf
    free = wf.speeds
    out = np.array(free)
    sq = np.zeros(layout.n_turbines)
    for i, _, d in pairs:
        sq[i] += d * d
    for i in sorted({p[0] for p in pairs}):
        ups = [j for ii, j, _ in pairs if ii == i]
        waked = free[i] * (1.0 - min(math.sqrt(sq[i]), 1.0))
        out[i] = np.minimum(waked, np.min(free[ups], axis=0))
    return WindField(wf.dt, out)


def turbine_power(wf: WindField, spec: TurbineSpec = TurbineSpec()) -> np.ndarray:
    """Available power per turbine and step, MW."""
    return power_curve(wf.speeds, spec)


def available_farm_power(wf: WindField, spec: TurbineSpec, t_index: int):
    if not (0 <= t_index < wf.n_steps):
        raise IndexError(f"t_index {t_index} outside 0..{wf.n_steps - 1}")
    per = [power_curve(float(v), spec) for v in wf.speeds[:, t_index]]
    return math.fsum(per), per


def distribute_curtailment(farm_setpoint: float, per_turbine_available: Sequence[float]) -> list[float]:
    """Scale every turbine's limit by the same fraction of its available power."""
    if farm_setpoint < 0:
        raise DomainError("farm setpoint must be >= 0")
    avail = [float(a) for a in per_turbine_available]
    total = math.fsum(avail)
    if farm_setpoint >= total or total <= 0:
        return avail
    ratio = farm_setpoint / total
    return [a * ratio for a in avail]


def assemble_annual(mean_speeds: Sequence[float], layout: FarmLayout, turb: TurbulenceSpec,
                    dt_long: float = 60.0, seed: int | None = None, hours: int = 8760,
                    block_s: float = BLOCK_S, fade_s: float = FADE_S) -> WindField:
    """Chain stationary 2-hour blocks following an hourly mean-speed series.

    Each block is a periodic spectral realization at the block's mean speed,
    so a block continued past its end wraps to its own start. Block joins are
    blended over ``fade_s`` by fading from the previous block's continuation
    into the new block.
    """
    means = np.asarray(mean_speeds, dtype=float)
    if means.ndim != 1 or len(means) == 0:
        raise ConfigError("annual mean-wind series is empty")
    if len(means) < hours:
        raise ConfigError(f"annual mean-wind series has {len(means)} hours, need {hours}")
    if np.any(means < 0) or not np.all(np.isfinite(means)):
        raise ConfigError("annual mean wind speeds must be finite and >= 0")
    n_block = _n_steps(dt_long, block_s)
    hours_per_block = int(round(block_s / 3600.0))
    if hours % hours_per_block:
        raise ConfigError("hours must be a whole number of blocks")
    n_blocks = hours // hours_per_block
    block_means = means[:hours].reshape(n_blocks, hours_per_block).mean(axis=1)
    n_fade = max(1, int(round(fade_s / dt_long)))
    if n_fade >= n_block:
        raise ConfigError("fade window must be shorter than a block")

    master = turb.seed if seed is None else seed
    children = np.random.SeedSequence(master).spawn(n_blocks)
    dist = layout.distances()
    ti = turb.turbulence_intensity
    out = np.empty((layout.n_turbines, n_blocks * n_block))
    w = (np.arange(1, n_fade + 1) / (n_fade + 1))[None, :]
    prev = None
    for b, vb in enumerate(block_means):
        rng = np.random.default_rng(children[b])
        raw = vb + _fluctuations(dist, vb, ti * vb, turb.length_scale, turb.coherence_decay,
                                 dt_long, n_block, rng, turb.rotor_diameter)
        blk = out[:, b * n_block:(b + 1) * n_block]
        blk[:] = raw
        if prev is not None:
            blk[:, :n_fade] = (1.0 - w) * prev[:, :n_fade] + w * raw[:, :n_fade]
        prev = raw
    return WindField(dt_long, np.maximum(out, 0.0))


def read_annual_means(path: str | Path) -> np.ndarray:
    """Load an ``hour,mean_mps`` CSV."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["hour", "mean_mps"]:
        raise ConfigError(f"{path}:1: expected header 'hour,mean_mps'")
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            vals.append(float(row[1]))
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad row {row!r}") from exc
    return np.asarray(vals)


def write_annual_means(path: str | Path, means: Sequence[float]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("hour,mean_mps\n")
        for h, v in enumerate(means):
            fh.write(f"{h},{v:.6f}\n")


def write_wind_csv(path: str | Path, wf: WindField) -> None:
    header = ["t_s"] + [f"wt{i + 1}_mps" for i in range(wf.n_turbines)]
    data = np.column_stack([wf.times, wf.speeds.T])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.9g")


def read_wind_csv(path: str | Path) -> WindField:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t_s" or len(header) < 2:
            raise ConfigError(f"{path}:1: expected header 't_s,wt1_mps,...'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: column count does not match header")
    t = data[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    return WindField(dt, data[:, 1:].T)
