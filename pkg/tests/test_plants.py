import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from offhub import plants
from offhub.errors import ConfigError, DomainError
from offhub.plants import Bess, ElectrolyzerTrain, FuelCellBlock, HydrogenTank, PlatformLoad

FRAC = st.floats(0.0, 1.0)


class TestRamp:
    def test_examples(self):
        assert plants.ramp_toward(0.0, 1.0, 706.0, 706.0) == 1.0
        assert plants.ramp_toward(0.0, 1.0, 706.0, 353.0) == 0.5
        assert plants.ramp_toward(0.4, 0.4, 11.0, 1.0) == 0.4
        assert plants.ramp_toward(1.0, 0.0, 10.0, 1.0) == 0.9

    @given(FRAC, FRAC, st.floats(0.5, 1000.0), st.floats(0.01, 100.0))
    def test_rate_and_direction(self, load, target, ramp, dt):
        out = plants.ramp_toward(load, target, ramp, dt)
        assert abs(out - load) <= dt / ramp + 1e-12
        assert min(load, target) <= out <= max(load, target)
        assert 0.0 <= out <= 1.0
        if out != target:
            assert math.isclose(abs(out - load), dt / ramp, rel_tol=1e-9)

    def test_sequential_moves_one_unit_at_a_time(self):
        loads = [0.0] * 4
        plants.ramp_units(loads, [1.0] * 4, 10.0, 1.0, sequential=True)
        assert loads == [0.1, 0.0, 0.0, 0.0]
        plants.ramp_units(loads, [1.0] * 4, 10.0, 15.0, sequential=True)
        # 9 s finish unit 0, the remaining 6 s go to unit 1
        assert loads[0] == 1.0 and math.isclose(loads[1], 0.6) and loads[2:] == [0.0, 0.0]

    def test_sequential_shutdown_in_reverse(self):
        loads = [1.0, 1.0, 0.5]
        plants.ramp_units(loads, [0.0] * 3, 10.0, 7.0, sequential=True)
        assert loads[2] == 0.0 and math.isclose(loads[1], 0.8) and loads[0] == 1.0

    def test_synchronized_moves_all(self):
        loads = [0.0] * 3
        plants.ramp_units(loads, [1.0] * 3, 10.0, 1.0)
        assert loads == [0.1] * 3

    @given(st.lists(st.tuples(FRAC, FRAC), min_size=1, max_size=8), st.floats(1.0, 800.0),
           st.floats(0.1, 120.0), st.booleans())
    def test_units_obey_rate(self, pairs, ramp, dt, seq):
        loads = [p[0] for p in pairs]
        before = list(loads)
        plants.ramp_units(loads, [p[1] for p in pairs], ramp, dt, seq)
        for b, a, (_, t) in zip(before, loads, pairs):
            assert abs(a - b) <= dt / ramp + 1e-12
            assert min(b, t) - 1e-15 <= a <= max(b, t) + 1e-15


class TestHydrogen:
    def test_normal_density_oracle(self):
        assert math.isclose(plants.H2_NORMAL_DENSITY, 2.016 / 22.414, rel_tol=1e-12)

    def test_ely_rate(self):
        tr = ElectrolyzerTrain()
        assert math.isclose(plants.ely_hydrogen_rate(5.0, tr), 1000 * 2.016 / 22.414, rel_tol=1e-9)
        assert math.isclose(plants.ely_hydrogen_rate(5.0, tr), 89.9, abs_tol=0.05)
        assert plants.ely_hydrogen_rate(0.0, tr) == 0.0
        assert math.isclose(plants.ely_hydrogen_rate(2.5, tr), 44.97, abs_tol=0.01)

    def test_ely_over_rating(self):
        with pytest.raises(DomainError):
            plants.ely_hydrogen_rate(5.5, ElectrolyzerTrain())

    def test_fc_consumption(self):
        blk = FuelCellBlock(specific_consumption=60.0)
        assert plants.fc_hydrogen_consumption(5.0, blk, 1.0) == 300.0
        assert plants.fc_hydrogen_consumption(0.0, blk, 1.0) == 0.0
        assert plants.fc_hydrogen_consumption(2.0, blk, 0.5) == 60.0
        with pytest.raises(DomainError):
            plants.fc_hydrogen_consumption(6.0, blk, 1.0)

    def test_default_specific_consumption_oracle(self):
        assert math.isclose(plants.FC_SPECIFIC_CONSUMPTION, 1000 / (33.33 * 0.5), rel_tol=1e-12)
        blk = FuelCellBlock()
        assert math.isclose(plants.fc_hydrogen_consumption(5.0, blk, 1.0),
                            5.0 * 1000 / (33.33 * 0.5), rel_tol=1e-9)

    @given(st.floats(0.0, 2.5), st.floats(0.0, 2.0))
    def test_homogeneous(self, p, k):
        tr, blk = ElectrolyzerTrain(), FuelCellBlock()
        assert math.isclose(plants.ely_hydrogen_rate(k * p, tr), k * plants.ely_hydrogen_rate(p, tr),
                            rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(plants.fc_hydrogen_consumption(k * p, blk, 1.0),
                            k * plants.fc_hydrogen_consumption(p, blk, 1.0), rel_tol=1e-12, abs_tol=1e-12)

    def test_unit_steps(self):
        tr = ElectrolyzerTrain(ramp_time_full=11.0, target=1.0)
        assert math.isclose(tr.step(5.5), 2.5)
        fc = FuelCellBlock(target=1.0)
        assert math.isclose(fc.step(1.0), 0.5)

    def test_bad_units(self):
        with pytest.raises(ConfigError):
            ElectrolyzerTrain(ramp_time_full=0.0)
        with pytest.raises(ConfigError):
            FuelCellBlock(specific_consumption=0.0)


class TestBess:
    def test_ideal_charge(self):
        act, soc, clipped = plants.bess_apply(-5.0, Bess(10, 10, 0.5), 0.1)
        assert act == -5.0 and math.isclose(soc, 0.55) and not clipped

    def test_power_clip(self):
        act, _, clipped = plants.bess_apply(-18.8, Bess(10, 10, 0.5), 1 / 3600)
        assert act == -10.0 and clipped

    def test_empty_battery(self):
        act, soc, clipped = plants.bess_apply(1.0, Bess(10, 10, 0.0), 1 / 3600)
        assert act == 0.0 and soc == 0.0 and clipped

    def test_energy_clip(self):
        b = Bess(10, 10, 0.99)
        act, soc, clipped = plants.bess_apply(-10.0, b, 0.1)
        assert clipped and math.isclose(act, -0.1 / 0.1) and soc == 1.0

    def test_efficiency_split(self):
        eta = 0.9
        b = Bess(10, 10, 0.5, round_trip_efficiency=eta)
        _, soc_c, _ = plants.bess_apply(-1.0, b, 1.0)
        assert math.isclose(soc_c, 0.5 + 0.1 * math.sqrt(eta))
        _, soc_d, _ = plants.bess_apply(1.0, b, 1.0)
        assert math.isclose(soc_d, 0.5 - 0.1 / math.sqrt(eta))

    @given(st.floats(-50, 50), st.floats(0.0, 1.0), st.floats(1e-4, 2.0), st.floats(0.5, 1.0))
    def test_bounds(self, req, soc, dt, eta):
        b = Bess(10, 10, soc, 0.0, 1.0, eta)
        act, new, clipped = plants.bess_apply(req, b, dt)
        assert abs(act) <= 10.0
        assert 0.0 <= new <= 1.0
        assert clipped == (act != req)

    def test_validation(self):
        with pytest.raises(ConfigError):
            Bess(soc=1.2)
        with pytest.raises(ConfigError):
            Bess(0.0, 10.0)
        with pytest.raises(DomainError):
            plants.bess_apply(1.0, Bess(), 0.0)


class TestTank:
    def test_examples(self):
        t = plants.tank_update(HydrogenTank(0.0), 89.9, 0.0)
        assert t.level == 89.9
        assert plants.tank_update(HydrogenTank(100.0), 0.0, 300.0).level == -200.0

    def test_bounded_spill(self):
        t = plants.tank_update(HydrogenTank(90.0, capacity=100.0), 30.0, 0.0)
        assert t.level == 100.0 and t.spilled == 20.0

    def test_negative_flows(self):
        with pytest.raises(DomainError):
            plants.tank_update(HydrogenTank(), -1.0, 0.0)


class TestLoads:
    def test_default_platforms(self):
        p, q = plants.total_load(plants.default_platforms())
        assert math.isclose(p, 27.5)
        assert math.isclose(q, 27.5 * math.tan(math.acos(0.8)), rel_tol=1e-12)
        assert math.isclose(q, 20.625, rel_tol=1e-12)

    def test_none_connected(self):
        pl = plants.default_platforms()
        for x in pl:
            x.connected = False
        assert plants.total_load(pl) == (0.0, 0.0)

    def test_priorities(self):
        pl = plants.default_platforms()
        assert sorted(x.active_power for x in pl if x.priority == 1) == [4.0] * 4
        assert sorted(x.active_power for x in pl if x.priority == 2) == [5.75] * 2

    def test_validation(self):
        with pytest.raises(ConfigError):
            PlatformLoad(1.0, 0.0)
        with pytest.raises(ConfigError):
            PlatformLoad(-1.0)
