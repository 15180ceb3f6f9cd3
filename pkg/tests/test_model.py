import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_config, random_sample, random_state, tiny_config
from dccarbon.model import (Decision, SystemConfig, SystemState, UncertaintyBounds,
                            UncertaintySample, advance_state, check_assumptions, check_feasible,
                            decision_box, initial_state, power_demand, slot_costs)
from dccarbon.scenario import default_config


def one_by_one_sample(demand=5.0, ambient=0.0, price=0.0, carbon=0.0):
    return UncertaintySample(np.array([demand]), np.array([ambient]), np.array([price]),
                             np.array([carbon]))


def one_by_one_decision(a=0.0, m=0.0, pb=0.0, sc=0.0, sd=0.0, pc=0.0):
    return Decision(np.array([a]), np.array([[m]]), np.array([pb]), np.array([sc]),
                    np.array([sd]), np.array([pc]))


# ---------------------------------------------------------------- slot_costs

def test_zero_decision_costs_only_rejection():
    c = slot_costs(tiny_config(), one_by_one_sample(demand=5.0), one_by_one_decision())
    assert (c.workload_cost, c.storage_cost, c.electricity_cost) == (5.0, 0.0, 0.0)


def test_workload_cost_arithmetic():
    cfg = tiny_config(link_capacity=[[3.0]])
    c = slot_costs(cfg, one_by_one_sample(demand=5.0), one_by_one_decision(a=4.0, m=3.0))
    assert c.workload_cost == pytest.approx(2 * 3 + 1 * (5 - 4))


def test_grid_power_cost_and_emission():
    cfg = tiny_config(it_capacity=[10.0], discharge_cap=[4.0], cooling_cap=[2.0],
                      energy_max=[10.0])
    d = one_by_one_decision(pb=10.0, sd=4.0, pc=2.0)
    c = slot_costs(cfg, one_by_one_sample(demand=0.0, price=50.0, carbon=0.5), d)
    assert power_demand(d)[0] == pytest.approx(8.0)
    assert c.electricity_cost == pytest.approx(400.0)
    assert c.emission == pytest.approx(4.0)
    assert c.total == pytest.approx(c.workload_cost + c.storage_cost + c.electricity_cost)


def test_over_acceptance_rejected():
    with pytest.raises(ValueError):
        slot_costs(tiny_config(), one_by_one_sample(demand=1.0), one_by_one_decision(a=2.0))


def test_zero_decision_zero_demand_zero_emission():
    cfg = default_config()
    s = UncertaintySample(np.zeros(2), np.zeros(3), np.full(3, 40.0), np.full(3, 0.3))
    c = slot_costs(cfg, s, Decision.zeros(cfg))
    assert c.total == 0.0 and c.emission == 0.0


@given(st.integers(0, 2**31), st.floats(0, 1))
def test_cost_is_affine_in_decision(seed, w):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    s = random_sample(rng, cfg)
    lo, hi = decision_box(cfg, s)
    x1, x2 = rng.uniform(lo, hi), rng.uniform(lo, hi)
    d1, d2 = Decision.from_vector(cfg, x1), Decision.from_vector(cfg, x2)
    dm = Decision.from_vector(cfg, w * x1 + (1 - w) * x2)
    mix = w * slot_costs(cfg, s, d1).total + (1 - w) * slot_costs(cfg, s, d2).total
    assert slot_costs(cfg, s, dm).total == pytest.approx(mix, rel=1e-12, abs=1e-9)
    e = slot_costs(cfg, s, dm).emission
    assert e == pytest.approx(float(s.carbon @ power_demand(dm)), abs=1e-12)


# ---------------------------------------------------------------- advance_state

def test_front_queue_update():
    cfg = tiny_config(link_capacity=[[2.0]])
    st0 = SystemState(np.array([5.0]), np.zeros(1), np.zeros(1), np.zeros(1))
    nxt = advance_state(st0, one_by_one_sample(), one_by_one_decision(a=3.0, m=2.0), cfg)
    assert nxt.front_queue[0] == 6.0


def _emission_step(q, emission, cap):
    cfg = tiny_config(emission_cap=cap, it_capacity=[10.0])
    st0 = SystemState(np.zeros(1), np.array([10.0]), np.zeros(1), np.array([50.0]), q)
    d = one_by_one_decision(pb=emission)
    return advance_state(st0, one_by_one_sample(carbon=1.0), d, cfg).emission_vq


def test_emission_queue_clamps_at_zero():
    assert _emission_step(0.0, 1.0, 1.2) == 0.0


def test_emission_queue_accumulates_excess():
    assert _emission_step(2.0, 1.5, 1.2) == pytest.approx(2.3)


def test_storage_and_temperature_update():
    cfg = default_config()
    st0 = initial_state(cfg)
    s = UncertaintySample(np.zeros(2), np.array([-0.3, -0.2, -0.1]), np.zeros(3), np.zeros(3))
    d = Decision(np.zeros(2), np.zeros((2, 3)), np.array([1.0, 0, 0]), np.array([2.0, 0, 0]),
                 np.array([0, 1.9, 0]), np.array([0, 0, 0.5]))
    nxt = advance_state(st0, s, d, cfg)
    np.testing.assert_allclose(nxt.stored_energy, [12 + 2 * 0.95, 12 - 1.9 / 0.95, 12])
    np.testing.assert_allclose(nxt.temperature, [18 + 0.5 + 0.3, 18.2, 18 - 1.5 + 0.1])


@given(st.integers(0, 2**31), st.integers(1, 30))
def test_front_queue_telescopes(seed, T):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    state = random_state(rng, cfg)
    q0 = state.front_queue.copy()
    net = np.zeros(cfg.n_nodes)
    for _ in range(T):
        s = random_sample(rng, cfg)
        lo, hi = decision_box(cfg, s)
        d = Decision.from_vector(cfg, rng.uniform(lo, hi))
        net += d.accept - d.transfer.sum(axis=1)
        state = advance_state(state, s, d, cfg)
    np.testing.assert_allclose(state.front_queue, q0 + net, atol=1e-9)


# ---------------------------------------------------------------- check_feasible

def test_zero_decision_from_interior_is_feasible():
    cfg = default_config()
    st0 = initial_state(cfg, temperature=np.full(3, 25.0))
    s = UncertaintySample(np.ones(2), np.full(3, -0.3), np.full(3, 40.0), np.full(3, 0.2))
    assert check_feasible(cfg, s, st0, Decision.zeros(cfg)) == []


def test_process_over_capacity_flagged():
    cfg = default_config()
    st0 = initial_state(cfg, back_queue=np.full(3, 20.0), temperature=np.full(3, 25.0))
    s = UncertaintySample(np.ones(2), np.full(3, -0.3), np.full(3, 40.0), np.full(3, 0.2))
    d = Decision.zeros(cfg)
    d = Decision(d.accept, d.transfer, np.array([cfg.it_capacity[0] + 1, 0, 0]), d.charge,
                 d.discharge, d.cooling)
    v = check_feasible(cfg, s, st0, d)
    assert [x.constraint for x in v] == ["process_upper"]
    assert v[0].index == (0,)


def test_discharge_below_storage_floor_flagged():
    cfg = default_config()
    st0 = initial_state(cfg, stored_energy=np.array([3.0, 12.0, 12.0]),
                        temperature=np.full(3, 25.0))
    s = UncertaintySample(np.zeros(2), np.full(3, -0.3), np.full(3, 40.0), np.full(3, 0.2))
    d = Decision.zeros(cfg)
    d = Decision(d.accept, d.transfer, d.process, d.charge, np.array([2.0, 0, 0]), d.cooling)
    expected = 3.0 - 2.0 / 0.95
    assert expected < cfg.energy_min[0]
    v = check_feasible(cfg, s, st0, d)
    assert len(v) == 1 and v[0].constraint == "stored_energy_lower"
    assert v[0].value == pytest.approx(expected)
    assert advance_state(st0, s, d, cfg).stored_energy[0] == pytest.approx(expected)


_FIELDS = ("accept", "transfer", "process", "charge", "discharge", "cooling")


@given(st.integers(0, 2**31), st.sampled_from(_FIELDS))
def test_single_box_mutation_gives_single_violation(seed, field):
    rng = np.random.default_rng(seed)
    cfg = default_config()
    # deep interior state so one over-bound field cannot push a stock out of range
    st0 = initial_state(cfg, front_queue=np.full(2, 30.0), back_queue=np.full(3, 30.0),
                        temperature=np.full(3, 25.0))
    s = UncertaintySample(rng.uniform(1, 5, 2), np.full(3, -0.2), np.full(3, 40.0),
                          np.full(3, 0.2))
    d = Decision.zeros(cfg)
    parts = {f: getattr(d, f).copy() for f in _FIELDS}
    arr = parts[field]
    idx = tuple(int(rng.integers(0, n)) for n in arr.shape)
    upper = {"accept": s.demand, "transfer": cfg.link_capacity, "process": cfg.it_capacity,
             "charge": cfg.charge_cap, "discharge": cfg.discharge_cap,
             "cooling": cfg.cooling_cap}[field]
    arr[idx] = upper[idx] + 0.5
    v = check_feasible(cfg, s, st0, Decision(**parts))
    assert len(v) == 1
    assert v[0].constraint == f"{field}_upper" and v[0].index == idx


def test_tolerance_absorbs_roundoff():
    cfg = default_config()
    st0 = initial_state(cfg, stored_energy=np.array([2.0 + 1e-12, 12, 12]),
                        temperature=np.full(3, 25.0))
    s = UncertaintySample(np.zeros(2), np.full(3, -0.3), np.zeros(3), np.zeros(3))
    d = Decision.zeros(cfg)
    d = Decision(d.accept, d.transfer, d.process, d.charge, np.array([2e-12 * 0.95, 0, 0]),
                 d.cooling)
    assert check_feasible(cfg, s, st0, d) == []


# ---------------------------------------------------------------- config and assumptions

def test_config_json_round_trip(tmp_path):
    cfg = default_config()
    cfg.save(tmp_path / "c.json")
    back = SystemConfig.load(tmp_path / "c.json")
    assert back.to_json_dict() == cfg.to_json_dict()
    text = (tmp_path / "c.json").read_text()
    assert "emission_cap_tCO2_per_slot" in text and "temp_min_degC" in text


@pytest.mark.parametrize("change", [dict(charge_eff=[1.5, 1, 1]), dict(cooling_cap=[-1, 1, 1]),
                                    dict(energy_min=[30, 2, 2]), dict(emission_cap=-1.0)])
def test_config_rejects_invalid(change):
    with pytest.raises(ValueError):
        default_config().replace(**change)


def _bounds(ambient_min, ambient_max):
    return UncertaintyBounds(np.full(2, 5.0), np.full(3, ambient_min), np.full(3, ambient_max),
                             np.full(3, 10.0), np.full(3, 90.0), np.zeros(3), np.full(3, 0.5))


def test_default_case_satisfies_assumptions():
    assert check_assumptions(default_config(), _bounds(-0.6, -0.05)) == []


def test_small_cooling_capacity_flagged():
    cfg = default_config().replace(cooling_cap=[0.5, 1, 1])
    problems = check_assumptions(cfg, _bounds(-0.6, -0.05))
    assert len(problems) == 1 and "hydro" in problems[0]


def test_cooling_ambient_flagged():
    assert len(check_assumptions(default_config(), _bounds(-0.6, 0.2))) == 3


def test_initial_state_defaults():
    cfg = default_config()
    s = initial_state(cfg)
    np.testing.assert_array_equal(s.stored_energy, (cfg.energy_min + cfg.energy_max) / 2)
    np.testing.assert_array_equal(s.temperature, cfg.temp_min)
    assert s.emission_vq == 0.0 and not s.front_queue.any() and not s.back_queue.any()
