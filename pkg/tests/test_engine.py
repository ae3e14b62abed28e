import math
from dataclasses import replace

import numpy as np
import pytest

from offhub.engine import (
    TRACE_HEADER, TRIP_LOAD, TRIP_WIND_TURBINE, WORST_DISCHARGE, DesignSpec, EventSpec, RunResult,
    Scenario, Trace, check_balance, find_worst_instant, run, run_contingency, run_year,
)
from offhub.errors import ConfigError, InvariantViolation
from offhub.plants import FC_SPECIFIC_CONSUMPTION, H2_NORMAL_DENSITY
from offhub.pms import ControlConfig
from offhub.scenarios import DESIGNS
from offhub.wind import WindField

D1 = DESIGNS["design1"]


def const_wind(speed, n_steps, dt=1.0, n=8):
    return WindField(dt, np.full((n, n_steps), float(speed)))


def fake_result(requested):
    req = np.asarray(requested, dtype=float)
    cols = {k: np.zeros(req.size) for k in
            ("wind_avail", "wind_actual", "ely_P", "fc_P", "load_P", "bess_P", "Q_load", "Q_ely",
             "Q_afe", "Q_bess", "soc", "h2_level", "freq_dev", "curtailed", "shed")}
    cols["t"] = np.arange(req.size, dtype=float)
    cols["bess_requested"] = req
    cols["clipped"] = np.zeros(req.size, dtype=bool)
    return RunResult("fake", DesignSpec(), Trace(cols, 1.0))


class TestExamples:
    def test_zero_wind_fuel_cells_carry_the_load(self):
        tr = run(Scenario("z", D1, const_wind(0.0, 3600))).trace
        assert np.allclose(tr.fc_P[20:], 27.5) and tr.ely_P.max() == 0.0

    def test_constant_rated_wind_curtails(self):
        tr = run(Scenario("c", replace(D1, wind_mw=64.0), const_wind(10.0, 3600, n=8),
                          control=ControlConfig())).trace
        assert tr.ely_P[-1] == pytest.approx(35.0)
        assert tr.curtailed[-1] == pytest.approx(64 - 27.5 - 35)
        assert tr.wind_actual[-1] == pytest.approx(62.5)

    def test_s3_peak_small(self, suite_results):
        assert np.abs(suite_results["S3"].trace.bess_P).max() <= 2.0

    def test_trace_length(self):
        res = run(Scenario("l", D1, const_wind(9.0, 600), duration=300.0))
        assert len(res.trace) == 300
        assert res.trace[0].t == 0.0 and res.trace[299].t == 299.0


class TestWorstInstant:
    def test_spike(self):
        req = np.zeros(7200)
        req[6710] = 18.8
        assert find_worst_instant(fake_result(req), "discharge") == 6710.0

    def test_tie_gives_earliest(self):
        assert find_worst_instant(fake_result(np.zeros(50)), "discharge") == 0.0
        assert find_worst_instant(fake_result(np.zeros(50)), "charge") == 0.0

    def test_triangle(self):
        tri = -np.concatenate((np.arange(0, 51), np.arange(49, -1, -1))).astype(float)
        assert find_worst_instant(fake_result(tri), "charge") == 50.0

    def test_errors(self):
        with pytest.raises(ConfigError):
            find_worst_instant(fake_result([]), "charge")
        with pytest.raises(ConfigError):
            find_worst_instant(fake_result([1.0]), "up")


class TestEvents:
    def test_null_trip_changes_nothing(self):
        # turbine 0 sees no wind, so tripping it removes nothing
        speeds = np.full((8, 1200), 9.0)
        speeds[0] = 0.0
        scn = Scenario("n", D1, WindField(1.0, speeds))
        base = run(scn)
        trip = run(replace(scn, events=(EventSpec(600.0, TRIP_WIND_TURBINE, 0),)))
        assert np.array_equal(base.trace.bess_requested, trip.trace.bess_requested)

    def test_load_trip_lowers_load(self):
        scn = Scenario("l", D1, const_wind(9.0, 600), events=(EventSpec(100.0, TRIP_LOAD),))
        res = run(scn)
        assert res.events == ((100.0, TRIP_LOAD, 0),)
        assert res.trace.load_P[99] == pytest.approx(27.5)
        assert res.trace.load_P[100] == pytest.approx(27.5 - 5.75)

    def test_biggest_turbine_picked(self):
        speeds = np.full((8, 600), 8.0)
        speeds[5] = 9.5
        res = run(Scenario("b", D1, WindField(1.0, speeds), events=(EventSpec(10.0, TRIP_WIND_TURBINE),)))
        assert res.events[0][2] == 5

    def test_marker_resolved_by_run(self):
        scn = Scenario("m", D1, const_wind(9.0, 600))
        res = run(replace(scn, events=(EventSpec(WORST_DISCHARGE, TRIP_WIND_TURBINE),)))
        assert res.baseline_peaks is not None and len(res.events) == 1

    def test_contingency_monotone(self, suite_results):
        for case in ("S4", "S5"):
            res = suite_results[case]
            assert res.kpis.bess_max_discharge_mw >= res.baseline_peaks[1]
        for case in ("S6", "S7"):
            res = suite_results[case]
            assert res.kpis.bess_max_charge_mw >= res.baseline_peaks[0]

    def test_run_contingency_direct(self, reference_wind):
        scn = Scenario("c", DESIGNS["initial"], reference_wind, duration=1800.0)
        res = run_contingency(scn, TRIP_LOAD, "charge")
        assert res.kpis.bess_max_charge_mw >= res.baseline_peaks[0]


@pytest.fixture
def s1(suite_results):
    return suite_results["S1"]


class TestInvariants:
    def test_balance(self, s1):
        check_balance(s1.trace)

    def test_balance_detects_errors(self, s1):
        cols = {k: np.array(v) for k, v in s1.trace.columns.items()}
        cols["bess_P"][10] += 1e-3
        with pytest.raises(InvariantViolation):
            check_balance(Trace(cols, 1.0))

    def test_energy_ledger(self, s1):
        tr, d = s1.trace, s1.design
        h = tr.dt / 3600.0
        supply = math.fsum((tr.wind_actual + tr.fc_P) * h)
        demand = math.fsum((tr.load_P - tr.shed + tr.ely_P) * h)
        d_bess = (tr.soc[-1] - d.soc_initial) * d.bess_mwh
        assert supply - demand == pytest.approx(d_bess, rel=1e-6, abs=1e-9)

    def test_hydrogen_ledger(self, s1):
        net = s1.trace.h2_level[-1] - s1.design.tank_initial_kg
        assert net == pytest.approx(s1.h2_produced - s1.h2_consumed - s1.h2_spilled, rel=1e-9)

    def test_ramp_limits(self, s1):
        d, tr = s1.design, s1.trace
        # first row is already one step of ramping from the initial state
        assert np.all(np.abs(np.diff(tr.ely_units, axis=0)) <= tr.dt / d.ely_ramp_s + 1e-12)
        assert np.all(np.abs(np.diff(tr.fc_units, axis=0)) <= tr.dt / d.fc_ramp_s + 1e-12)

    def test_determinism(self, reference_wind):
        scn = Scenario("d", DESIGNS["initial"], reference_wind, duration=900.0)
        a, b = run(scn).trace, run(scn).trace
        for k in a.columns:
            assert np.array_equal(a.columns[k], b.columns[k])

    def test_curtailment_non_negative(self, s1):
        tr = s1.trace
        assert tr.curtailed.min() >= 0.0
        assert np.allclose(tr.curtailed, tr.wind_avail - tr.wind_actual, atol=1e-9)


class TestYear:
    def test_all_zero_wind_year(self):
        res = run_year(D1, np.zeros(8760), dt_long=3600.0)
        expected = -27.5 * 8760 * FC_SPECIFIC_CONSUMPTION
        assert res.kpis.h2_net_kg == pytest.approx(expected, rel=1e-9)
        assert res.kpis.ely_load_factor == 0.0

    def test_short_year(self):
        res = run_year(D1, np.full(48, 9.0), hours=48)
        assert len(res.trace) == 48 * 60
        assert res.scenario == "year-design1"

    def test_ely_rate_matches_design(self):
        assert D1.ely_kg_per_mwh == pytest.approx(200.0 * H2_NORMAL_DENSITY)


class TestValidation:
    def test_design(self):
        with pytest.raises(ConfigError):
            DesignSpec(wind_mw=60.0)
        with pytest.raises(ConfigError):
            DesignSpec(bess_mw=0.0)
        with pytest.raises(ConfigError):
            DesignSpec(tank_capacity_kg=10.0, tank_initial_kg=20.0)

    def test_scenario(self):
        wf = const_wind(9.0, 100)
        with pytest.raises(ConfigError):
            Scenario("x", D1, wf, dt=2.0)
        with pytest.raises(ConfigError):
            Scenario("x", D1, wf, duration=200.0)
        with pytest.raises(ConfigError):
            Scenario("x", D1, const_wind(9.0, 100, n=4))
        with pytest.raises(ConfigError):
            Scenario("x", D1, wf, events=(EventSpec(150.0, TRIP_LOAD),))
        with pytest.raises(ConfigError):
            Scenario("x", D1, wf, events=(EventSpec(10.0, TRIP_LOAD, 9),))
        with pytest.raises(ConfigError):
            EventSpec(1.0, "trip_cable")

    def test_unit_split(self):
        assert DESIGNS["initial"].ely_units == [5.0] * 7
        assert DesignSpec(ely_mw=63.0).ely_units == [63.0 / 13] * 13
        assert DesignSpec(fc_mw=0.0).fc_units == []


def test_trace_csv(tmp_path, suite_results):
    p = tmp_path / "t.csv"
    suite_results["S3"].trace.write_csv(p, stride=100)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert len(lines) == 1 + 72
    assert lines[2].startswith("100,")
