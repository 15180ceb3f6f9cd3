import hypothesis
import numpy as np
import pytest

from dccarbon.model import (SampleSeries, SystemConfig, SystemState, UncertaintyBounds,
                            UncertaintySample)
from dccarbon.online import StrategyParams

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")


def tiny_config(**kw) -> SystemConfig:
    """One node, one center, unit-ish coefficients."""
    base = dict(link_capacity=[[1.0]], it_capacity=[1.0], charge_cap=[0.0], discharge_cap=[0.0],
                energy_min=[0.0], energy_max=[0.0], charge_eff=[1.0], discharge_eff=[1.0],
                cooling_cap=[0.0], temp_min=[0.0], temp_max=[100.0], heat_coeff=[1.0],
                cool_coeff=[1.0], transfer_cost=[[2.0]], rejection_penalty=[1.0],
                storage_wear=[0.0], emission_cap=1.0)
    base.update(kw)
    return SystemConfig(**base)


def random_config(rng: np.random.Generator, n_i: int = 2, n_j: int = 3) -> SystemConfig:
    u = lambda lo, hi, size=n_j: rng.uniform(lo, hi, size)
    e_min = u(0, 5)
    t_min = u(15, 20)
    return SystemConfig(
        link_capacity=rng.uniform(0.5, 4, (n_i, n_j)), it_capacity=u(1, 5), charge_cap=u(0.5, 3),
        discharge_cap=u(0.5, 3), energy_min=e_min, energy_max=e_min + u(5, 20),
        charge_eff=u(0.8, 1), discharge_eff=u(0.8, 1), cooling_cap=u(1, 4),
        temp_min=t_min, temp_max=t_min + u(8, 20), heat_coeff=u(0.2, 1), cool_coeff=u(1, 3),
        transfer_cost=rng.uniform(0, 8, (n_i, n_j)), rejection_penalty=rng.uniform(50, 300, n_i),
        storage_wear=u(0, 4), emission_cap=float(rng.uniform(0.5, 3)))


def random_sample(rng, config: SystemConfig) -> UncertaintySample:
    n_i, n_j = config.n_nodes, config.n_centers
    return UncertaintySample(rng.uniform(0, 5, n_i), rng.uniform(-1, 0, n_j),
                             rng.uniform(-20, 100, n_j), rng.uniform(0, 0.8, n_j))


def random_state(rng, config: SystemConfig, emission_vq=None) -> SystemState:
    n_i, n_j = config.n_nodes, config.n_centers
    return SystemState(rng.uniform(0, 30, n_i), rng.uniform(0, 30, n_j),
                       rng.uniform(config.energy_min, config.energy_max),
                       rng.uniform(config.temp_min, config.temp_max),
                       float(rng.uniform(0, 40)) if emission_vq is None else emission_vq)


def random_params(rng, config: SystemConfig) -> StrategyParams:
    n_i, n_j = config.n_nodes, config.n_centers
    return StrategyParams(float(rng.uniform(0, 5)), rng.uniform(-40, 10, n_i),
                          rng.uniform(-40, 10, n_j), rng.uniform(-40, 10, n_j),
                          rng.uniform(-40, 10, n_j), float(rng.uniform(0, 30)))


def random_series(rng, config: SystemConfig, n: int) -> SampleSeries:
    return SampleSeries.from_samples([random_sample(rng, config) for _ in range(n)])


def wide_bounds(config: SystemConfig) -> UncertaintyBounds:
    n_i, n_j = config.n_nodes, config.n_centers
    return UncertaintyBounds(np.full(n_i, 5.0), np.full(n_j, -1.0), np.zeros(n_j),
                             np.full(n_j, -20.0), np.full(n_j, 100.0), np.zeros(n_j),
                             np.full(n_j, 0.8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
