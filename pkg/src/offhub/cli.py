"""Command-line entry point: single runs, the S1-S7 suite, annual runs and the sizing sweep.

Exit codes: 0 success, 2 configuration error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import wind as wind_mod
from .config import Config, load_config
from .engine import RunResult, Scenario, run
from .errors import ConfigError, InvariantViolation
from .metrics import kpi_csv_row, summarize_designs, summary_text
from .scenarios import (
    SUITE,
    bundled_annual_means,
    neutrality_factor,
    run_case,
    short_term_wind,
    sweep_design,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def short_term_field(cfg: Config, design) -> wind_mod.WindField:
    path = cfg["wind.short_term_csv"]
    if path:
        try:
            return wind_mod.read_wind_csv(path)
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read wind CSV: {exc.strerror or exc}") from None
    return short_term_wind(design, cfg["scenario.seed"], cfg["wind.mean_speed"],
                           cfg["wind.turbulence_intensity"], cfg["scenario.dt"],
                           cfg["scenario.duration"], cfg["wind.wake"], cfg["wind.length_scale"],
                           cfg["wind.coherence_decay"], cfg["wind.rotor_averaging"])


def annual_means(cfg: Config) -> np.ndarray:
    path = cfg["wind.annual_csv"]
    if not path:
        return bundled_annual_means()
    try:
        return wind_mod.read_annual_means(path)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read annual wind CSV: {exc.strerror or exc}") from None


def build_scenario(cfg: Config) -> Scenario:
    design = cfg.design()
    wf = short_term_field(cfg, design)
    ev = cfg.event()
    return Scenario(cfg["scenario.name"], design, wf, cfg["scenario.dt"], cfg["scenario.duration"],
                    events=(ev,) if ev else (), control=cfg.control(), seed=cfg["scenario.seed"],
                    check_balance=cfg["scenario.check_balance"])


def _year_kwargs(cfg: Config) -> dict:
    return dict(dt_long=cfg["scenario.year_dt"], control=cfg.control(), seed=cfg["scenario.seed"],
                turbulence_intensity=cfg["wind.turbulence_intensity"], wake=cfg["wind.wake"],
                hours=cfg["scenario.year_hours"], length_scale=cfg["wind.length_scale"],
                coherence_decay=cfg["wind.coherence_decay"])


def write_outputs(res: RunResult, out: Path, cfg: Config, stride: int = 1,
                  extra: dict | None = None) -> Path:
    """``trace.csv``, ``summary.txt``, ``kpis.csv`` and ``config.ini`` under ``out/<scenario>``."""
    d = out / res.scenario
    d.mkdir(parents=True, exist_ok=True)
    if cfg["output.trace"]:
        res.trace.write_csv(d / "trace.csv", stride)
    (d / "summary.txt").write_text(summary_text(res, extra), encoding="utf-8")
    (d / "kpis.csv").write_text(kpi_csv_row(res, header=True), encoding="utf-8")
    (d / "config.ini").write_text(cfg.echo(), encoding="utf-8")
    return d


def write_year_series(res: RunResult, path: Path, stride: int) -> None:
    """SOC and net hydrogen (level minus start) against time in hours."""
    tr = res.trace
    s = max(stride, 1)
    t = tr.t[::s] / 3600.0
    net = tr.h2_level[::s] - res.design.tank_initial_kg
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t_h,soc,h2_net_kg\n")
        for a, b, c in zip(t, tr.soc[::s], net):
            fh.write(f"{a:.10g},{b:.10g},{c:.10g}\n")


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, *zip(*items)))


def cmd_run(cfg: Config, jobs: int = 1) -> int:
    scn = build_scenario(cfg)
    res = run(scn)
    d = write_outputs(res, Path(cfg["output.dir"]), cfg)
    print(f"{res.scenario}: wrote {d}")
    return EXIT_OK


def suite_report(results: Sequence[RunResult]) -> str:
    lines = ["case,max_charge_mw,max_discharge_mw,max_abs_freq_dev_hz,"
             "baseline_max_charge_mw,baseline_max_discharge_mw,event"]
    for r in results:
        k = r.kpis
        base = r.baseline_peaks or (float("nan"), float("nan"))
        ev = ";".join(f"{kind}[{idx}]@{t:g}s" for t, kind, idx in r.events)
        lines.append(f"{r.scenario},{k.bess_max_charge_mw:.6g},{k.bess_max_discharge_mw:.6g},"
                     f"{k.max_abs_freq_dev_hz:.6g},{base[0]:.6g},{base[1]:.6g},{ev}")
    return "\n".join(lines) + "\n"


def cmd_suite(cfg: Config, jobs: int = 1) -> int:
    design = cfg.design()
    wf = short_term_field(cfg, design)
    control = cfg.control()
    seed = cfg["scenario.seed"]
    results = _map(run_case, [(case, design, wf, control, seed) for case in SUITE], jobs)
    out = Path(cfg["output.dir"])
    for res in results:
        write_outputs(res, out, cfg)
    (out / "suite").mkdir(parents=True, exist_ok=True)
    report = suite_report(results)
    (out / "suite" / "report.csv").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def _run_year(design, means, kwargs, name):
    from .engine import run_year

    return run_year(design, means, name=name, **kwargs)


def cmd_year(cfg: Config, jobs: int = 1) -> int:
    design = cfg.design()
    means = annual_means(cfg)
    res = _run_year(design, means, _year_kwargs(cfg), f"year-{design.name}")
    stride = cfg["output.year_trace_stride"]
    d = write_outputs(res, Path(cfg["output.dir"]), cfg, stride)
    write_year_series(res, d / "series.csv", stride)
    table = summarize_designs([res])
    (d / "report.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


def cmd_sweep(cfg: Config, jobs: int = 1) -> int:
    base = cfg.design()
    factors = cfg.factors()
    designs = [sweep_design(base, f, cfg["scenario.sweep_include_load"]) for f in factors]
    means = annual_means(cfg)
    kw = _year_kwargs(cfg)
    items = [(d, means, kw, f"sweep-{d.name}") for d in designs]
    results = _map(_run_year, items, jobs)
    out = Path(cfg["output.dir"])
    stride = cfg["output.year_trace_stride"]
    for res in results:
        d = write_outputs(res, out, cfg, stride)
        write_year_series(res, d / "series.csv", stride)
    nets = [r.kpis.h2_net_kg for r in results]
    cross = neutrality_factor(factors, nets)
    lines = ["factor,wind_mw,ely_mw,h2_net_t"]
    for f, d, n in zip(factors, designs, nets):
        lines.append(f"{f:g},{d.wind_mw:g},{d.ely_mw:.6g},{n / 1000.0:.6g}")
    lines.append(f"# neutrality_factor = {'none' if cross is None else f'{cross:.4f}'}")
    report = "\n".join(lines) + "\n"
    (out / "sweep").mkdir(parents=True, exist_ok=True)
    (out / "sweep" / "report.csv").write_text(report, encoding="utf-8")
    (out / "sweep" / "kpis.txt").write_text(summarize_designs(results), encoding="utf-8")
    sys.stdout.write(report)
    order = sorted(zip(factors, nets))
    for (f0, n0), (f1, n1) in zip(order, order[1:]):
        if n1 < n0 - 1e-6 * max(abs(n0), 1.0):
            raise InvariantViolation(
                f"net hydrogen decreases from factor {f0:g} ({n0:.1f} kg) to {f1:g} ({n1:.1f} kg)")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "suite": cmd_suite, "year": cmd_year, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="offhub", description="Offshore energy-hub simulator.")
    ap.add_argument("command", choices=tuple(COMMANDS))
    ap.add_argument("design", nargs="?", help="design preset for year/sweep "
                    "(initial, design1, design2, custom); same as --set design.name=...")
    ap.add_argument("--config", metavar="PATH", help="scenario config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one dotted config key (repeatable)")
    ap.add_argument("--seed", type=int, help="turbulence seed (scenario.seed)")
    ap.add_argument("--out", metavar="DIR", help="output directory (output.dir)")
    ap.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel runs for suite/sweep")
    ap.add_argument("--factors", metavar="LIST", help="sweep factors, e.g. 1.0,1.6,1.8,2.0")
    ap.add_argument("--print-config", action="store_true",
                    help="print the effective config and exit")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = []
    if args.design:
        overrides.append(f"design.name={args.design}")
    overrides += args.overrides
    if args.seed is not None:
        overrides.append(f"scenario.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"output.dir={args.out}")
    if args.factors is not None:
        overrides.append(f"scenario.sweep_factors={args.factors}")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config, overrides)
        if args.print_config:
            sys.stdout.write(cfg.echo())
            return EXIT_OK
        return COMMANDS[args.command](cfg, args.jobs)
    except ConfigError as exc:
        print(f"offhub: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"offhub: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
