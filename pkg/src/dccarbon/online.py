"""Drift-plus-penalty online dispatch.

Every physical stock is shifted by a tunable offset to form a virtual queue, and
an extra queue accumulates emission in excess of the cap.  Each slot minimizes
``I + V * cost`` where ``I`` is the linear part of the Lyapunov drift bound.  The
objective is linear in the decision and the constraints are per-variable boxes,
so the minimizer is read off coefficient signs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .linprog import LinearProgram
from .model import (Decision, SystemConfig, SystemState, UncertaintyBounds, UncertaintySample,
                    decision_box, power_demand, slot_costs)


@dataclass(frozen=True)
class StrategyParams:
    penalty_weight: float  # V
    theta_front: np.ndarray  # (I,)
    theta_back: np.ndarray  # (J,)
    theta_storage: np.ndarray  # (J,)
    theta_temp: np.ndarray  # (J,)
    emission_queue_cap: float = 0.0  # Q^E the offsets were tuned against

    def __post_init__(self):
        for name in ("theta_front", "theta_back", "theta_storage", "theta_temp"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "penalty_weight", float(self.penalty_weight))
        object.__setattr__(self, "emission_queue_cap", float(self.emission_queue_cap))
        if not np.isfinite(self.penalty_weight) or self.penalty_weight < 0:
            raise ValueError("penalty weight V must be finite and nonnegative")
        if not np.isfinite(self.emission_queue_cap) or self.emission_queue_cap < 0:
            raise ValueError("emission queue cap must be finite and nonnegative")

    @classmethod
    def zeros(cls, config: SystemConfig, penalty_weight: float = 0.0) -> "StrategyParams":
        j = config.n_centers
        return cls(penalty_weight, np.zeros(config.n_nodes), np.zeros(j), np.zeros(j), np.zeros(j))

    def to_json_dict(self) -> dict:
        return {f.name: (v.tolist() if isinstance(v := getattr(self, f.name), np.ndarray) else v)
                for f in fields(self)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "StrategyParams":
        return cls(**{f.name: d[f.name] for f in fields(cls)})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "StrategyParams":
        d = json.loads(Path(path).read_text())
        return cls.from_json_dict(d.get("params", d))


@dataclass(frozen=True)
class VirtualQueues:
    front: np.ndarray
    back: np.ndarray
    storage: np.ndarray
    temp: np.ndarray
    emission: float


@dataclass(frozen=True)
class DriftCoefficients:
    accept: np.ndarray
    transfer: np.ndarray
    process: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    cooling: np.ndarray
    constant: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.accept, self.transfer.ravel(), self.process, self.charge,
                               self.discharge, self.cooling])

    def evaluate(self, decision: Decision) -> float:
        return float(self.to_vector() @ decision.to_vector() + self.constant)


def virtual_queues(state: SystemState, params: StrategyParams) -> VirtualQueues:
    return VirtualQueues(state.front_queue + params.theta_front,
                         state.back_queue + params.theta_back,
                         state.stored_energy + params.theta_storage,
                         state.temperature + params.theta_temp,
                         float(state.emission_vq))


def lyapunov_value(vq: VirtualQueues) -> float:
    return 0.5 * float(np.sum(vq.front ** 2) + np.sum(vq.back ** 2) + np.sum(vq.storage ** 2)
                       + np.sum(vq.temp ** 2) + vq.emission ** 2)


def drift_term(vq: VirtualQueues, sample: UncertaintySample, decision: Decision,
               config: SystemConfig) -> float:
    """Linear part ``I`` of the one-slot drift bound, evaluated at ``decision``."""
    front = vq.front @ (decision.accept - decision.transfer.sum(axis=1))
    back = vq.back @ (decision.transfer.sum(axis=0) - decision.process)
    storage = vq.storage @ (decision.charge * config.charge_eff
                            - decision.discharge / config.discharge_eff)
    temp = vq.temp @ (config.heat_coeff * decision.process - config.cool_coeff * decision.cooling
                      - sample.ambient)
    emission = vq.emission * (sample.carbon @ power_demand(decision) - config.emission_cap)
    return float(front + back + storage + temp + emission)


def drift_coefficients(vq: VirtualQueues, sample: UncertaintySample, params: StrategyParams,
                       config: SystemConfig) -> DriftCoefficients:
    """Per-field coefficients of ``I + V * cost`` plus its decision-free constant."""
    V = params.penalty_weight
    qe_carbon = vq.emission * sample.carbon
    price = V * sample.price
    wear = V * config.storage_wear
    constant = (-vq.emission * config.emission_cap
                + V * float(config.rejection_penalty @ sample.demand)
                - float(vq.temp @ sample.ambient))
    return DriftCoefficients(
        accept=vq.front - V * config.rejection_penalty,
        transfer=-vq.front[:, None] + vq.back[None, :] + V * config.transfer_cost,
        process=-vq.back + vq.temp * config.heat_coeff + qe_carbon + price,
        charge=vq.storage * config.charge_eff + qe_carbon + wear + price,
        discharge=-vq.storage / config.discharge_eff - qe_carbon + wear - price,
        cooling=-vq.temp * config.cool_coeff + qe_carbon + price,
        constant=float(constant),
    )


def online_objective(state: SystemState, sample: UncertaintySample, decision: Decision,
                     params: StrategyParams, config: SystemConfig) -> float:
    """``I + V * (f^W + f^S + f^G)`` evaluated directly from its definition."""
    vq = virtual_queues(state, params)
    return drift_term(vq, sample, decision, config) + \
        params.penalty_weight * slot_costs(config, sample, decision).total


def _frozen_emission(state: SystemState) -> SystemState:
    return SystemState(state.front_queue, state.back_queue, state.stored_energy,
                       state.temperature, 0.0)


def online_coefficients(state: SystemState, sample: UncertaintySample, params: StrategyParams,
                        config: SystemConfig, use_emission_queue: bool = True) -> DriftCoefficients:
    if not use_emission_queue:
        state = _frozen_emission(state)
    return drift_coefficients(virtual_queues(state, params), sample, params, config)


def online_step(state: SystemState, sample: UncertaintySample, params: StrategyParams,
                config: SystemConfig, use_emission_queue: bool = True) -> Decision:
    """Minimizer of the per-slot drift-plus-penalty problem.

    Each field goes to its upper bound when its coefficient is negative and to
    zero when positive. At a zero coefficient acceptance goes to the full demand
    and every other field stays at zero.
    With ``use_emission_queue=False`` the emission queue is treated as empty.
    """
    co = online_coefficients(state, sample, params, config, use_emission_queue)
    vec = co.to_vector()
    if not np.all(np.isfinite(vec)) or not np.isfinite(co.constant):
        raise ValueError("non-finite drift-plus-penalty coefficient")
    return Decision(
        accept=np.where(co.accept <= 0.0, sample.demand, 0.0),
        transfer=np.where(co.transfer < 0.0, config.link_capacity, 0.0),
        process=np.where(co.process < 0.0, config.it_capacity, 0.0),
        charge=np.where(co.charge < 0.0, config.charge_cap, 0.0),
        discharge=np.where(co.discharge < 0.0, config.discharge_cap, 0.0),
        cooling=np.where(co.cooling < 0.0, config.cooling_cap, 0.0),
    )


def online_lp(state: SystemState, sample: UncertaintySample, params: StrategyParams,
              config: SystemConfig, use_emission_queue: bool = True) -> tuple[LinearProgram, float]:
    """The per-slot problem as an LP over the decision layout, plus its constant term."""
    co = online_coefficients(state, sample, params, config, use_emission_queue)
    lo, hi = decision_box(config, sample)
    return LinearProgram(c=co.to_vector(), lower=lo, upper=hi), co.constant


def compute_drift_bound(config: SystemConfig, bounds: UncertaintyBounds) -> float:
    """Constant ``B`` with ``L(t+1) - L(t) <= I + B`` for any in-bounds slot."""
    link = config.link_capacity
    front = np.sum((bounds.demand_max + link.sum(axis=1)) ** 2)
    back = np.sum((link.sum(axis=0) + config.it_capacity) ** 2)
    storage = np.sum((config.charge_cap * config.charge_eff
                      + config.discharge_cap / config.discharge_eff) ** 2)
    ambient = np.maximum(np.abs(bounds.ambient_min), np.abs(bounds.ambient_max))
    temp = np.sum((config.heat_coeff * config.it_capacity
                   + config.cool_coeff * config.cooling_cap + ambient) ** 2)
    draw = config.it_capacity + config.charge_cap + config.discharge_cap + config.cooling_cap
    emission = (bounds.carbon_max @ draw + config.emission_cap) ** 2
    return float(front + back + storage + temp + emission)


@dataclass(frozen=True)
class OnlinePolicy:
    """Slot policy for the simulator: ``policy(t, state, sample) -> Decision``."""

    config: SystemConfig
    params: StrategyParams
    use_emission_queue: bool = True

    def __call__(self, t: int, state: SystemState, sample: UncertaintySample) -> Decision:
        return online_step(state, sample, self.params, self.config, self.use_emission_queue)
