"""Plant description, per-slot costs and dynamics of a distributed data-center system.

Index conventions: ``I`` mapping nodes (front end), ``J`` data centers (back end).
One slot is one hour; every rate coefficient is already expressed per slot, so
workload units and energy units (MWh) are interchangeable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-9


def _arr(x, shape=None) -> np.ndarray:
    a = np.array(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ValueError(f"expected shape {shape}, got {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemConfig:
    link_capacity: np.ndarray  # (I, J) workload per slot
    it_capacity: np.ndarray  # (J,)
    charge_cap: np.ndarray
    discharge_cap: np.ndarray
    energy_min: np.ndarray
    energy_max: np.ndarray
    charge_eff: np.ndarray
    discharge_eff: np.ndarray
    cooling_cap: np.ndarray
    temp_min: np.ndarray
    temp_max: np.ndarray
    heat_coeff: np.ndarray  # degC per unit processed
    cool_coeff: np.ndarray  # degC per MWh of cooling
    transfer_cost: np.ndarray  # (I, J) $/unit
    rejection_penalty: np.ndarray  # (I,) $/unit
    storage_wear: np.ndarray  # (J,) $/MWh
    emission_cap: float  # tCO2 per slot
    node_names: tuple[str, ...] = ()
    center_names: tuple[str, ...] = ()

    def __post_init__(self):
        link = np.array(self.link_capacity, dtype=float)
        if link.ndim != 2:
            raise ValueError("link_capacity must be a 2-D (nodes x centers) array")
        n_i, n_j = link.shape
        object.__setattr__(self, "link_capacity", _arr(link))
        object.__setattr__(self, "transfer_cost", _arr(self.transfer_cost, (n_i, n_j)))
        object.__setattr__(self, "rejection_penalty", _arr(self.rejection_penalty, (n_i,)))
        for name in _CENTER_FIELDS:
            object.__setattr__(self, name, _arr(getattr(self, name), (n_j,)))
        object.__setattr__(self, "emission_cap", float(self.emission_cap))
        if not self.node_names:
            object.__setattr__(self, "node_names", tuple(f"node{i}" for i in range(n_i)))
        if not self.center_names:
            object.__setattr__(self, "center_names", tuple(f"dc{j}" for j in range(n_j)))
        object.__setattr__(self, "node_names", tuple(self.node_names))
        object.__setattr__(self, "center_names", tuple(self.center_names))
        if len(self.node_names) != n_i or len(self.center_names) != n_j:
            raise ValueError("name lists do not match array dimensions")
        self._validate()

    def _validate(self):
        nonneg = ["link_capacity", "it_capacity", "charge_cap", "discharge_cap", "cooling_cap",
                  "transfer_cost", "rejection_penalty", "storage_wear"]
        for name in nonneg:
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be nonnegative")
        if self.emission_cap < 0:
            raise ValueError("emission_cap must be nonnegative")
        for name in ("charge_eff", "discharge_eff"):
            v = getattr(self, name)
            if np.any(v <= 0) or np.any(v > 1):
                raise ValueError(f"{name} must lie in (0, 1]")
        if np.any(self.heat_coeff <= 0) or np.any(self.cool_coeff <= 0):
            raise ValueError("heat_coeff and cool_coeff must be positive")
        if np.any(self.energy_min > self.energy_max):
            raise ValueError("energy_min exceeds energy_max")
        if np.any(self.temp_min > self.temp_max):
            raise ValueError("temp_min exceeds temp_max")

    @property
    def n_nodes(self) -> int:
        return self.link_capacity.shape[0]

    @property
    def n_centers(self) -> int:
        return self.link_capacity.shape[1]

    def replace(self, **changes) -> "SystemConfig":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return SystemConfig(**kw)

    def to_json_dict(self) -> dict:
        out = {"mapping_nodes": list(self.node_names), "data_centers": list(self.center_names)}
        for attr, key in CONFIG_JSON_KEYS.items():
            v = getattr(self, attr)
            out[key] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "SystemConfig":
        missing = [k for k in CONFIG_JSON_KEYS.values() if k not in d]
        if missing:
            raise ValueError(f"config is missing fields: {', '.join(missing)}")
        kw = {attr: d[key] for attr, key in CONFIG_JSON_KEYS.items()}
        return cls(node_names=tuple(d.get("mapping_nodes", ())),
                   center_names=tuple(d.get("data_centers", ())), **kw)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SystemConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


_CENTER_FIELDS = ("it_capacity", "charge_cap", "discharge_cap", "energy_min", "energy_max",
                  "charge_eff", "discharge_eff", "cooling_cap", "temp_min", "temp_max",
                  "heat_coeff", "cool_coeff", "storage_wear")

# attribute -> unit-annotated JSON key
CONFIG_JSON_KEYS = {
    "link_capacity": "link_capacity_MWh_per_slot",
    "it_capacity": "it_capacity_MWh_per_slot",
    "charge_cap": "charge_cap_MW",
    "discharge_cap": "discharge_cap_MW",
    "energy_min": "energy_min_MWh",
    "energy_max": "energy_max_MWh",
    "charge_eff": "charge_eff",
    "discharge_eff": "discharge_eff",
    "cooling_cap": "cooling_cap_MW",
    "temp_min": "temp_min_degC",
    "temp_max": "temp_max_degC",
    "heat_coeff": "heat_coeff_degC_per_MWh",
    "cool_coeff": "cool_coeff_degC_per_MWh",
    "transfer_cost": "transfer_cost_usd_per_MWh",
    "rejection_penalty": "rejection_penalty_usd_per_MWh",
    "storage_wear": "storage_wear_usd_per_MWh",
    "emission_cap": "emission_cap_tCO2_per_slot",
}


@dataclass(frozen=True)
class UncertaintySample:
    """One slot's realization: demand per node, ambient effect, price and carbon intensity per center."""

    demand: np.ndarray
    ambient: np.ndarray
    price: np.ndarray
    carbon: np.ndarray


@dataclass(frozen=True)
class SampleSeries:
    """A sequence of slot realizations stored column-wise: (T, I) and three (T, J) arrays."""

    demand: np.ndarray
    ambient: np.ndarray
    price: np.ndarray
    carbon: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            a = np.array(getattr(self, f.name), dtype=float)
            if a.ndim != 2:
                raise ValueError(f"{f.name} must be a 2-D (slots x index) array")
            a.setflags(write=False)
            object.__setattr__(self, f.name, a)
        t = self.demand.shape[0]
        n_j = self.ambient.shape[1]
        for a in (self.ambient, self.price, self.carbon):
            if a.shape != (t, n_j):
                raise ValueError("per-center series must share shape (T, J)")

    def __len__(self):
        return self.demand.shape[0]

    def __getitem__(self, key):
        if isinstance(key, slice):
            return SampleSeries(self.demand[key], self.ambient[key], self.price[key], self.carbon[key])
        return UncertaintySample(self.demand[key], self.ambient[key], self.price[key], self.carbon[key])

    def __iter__(self):
        for t in range(len(self)):
            yield self[t]

    @property
    def n_nodes(self) -> int:
        return self.demand.shape[1]

    @property
    def n_centers(self) -> int:
        return self.ambient.shape[1]

    @classmethod
    def from_samples(cls, samples: Sequence[UncertaintySample]) -> "SampleSeries":
        return cls(np.array([s.demand for s in samples]), np.array([s.ambient for s in samples]),
                   np.array([s.price for s in samples]), np.array([s.carbon for s in samples]))


@dataclass(frozen=True)
class UncertaintyBounds:
    demand_max: np.ndarray
    ambient_min: np.ndarray
    ambient_max: np.ndarray
    price_min: np.ndarray
    price_max: np.ndarray
    carbon_min: np.ndarray
    carbon_max: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _arr(getattr(self, f.name)))
        if np.any(self.demand_max < 0) or np.any(self.carbon_min < 0):
            raise ValueError("demand and carbon-intensity bounds must be nonnegative")
        for lo, hi in (("ambient_min", "ambient_max"), ("price_min", "price_max"),
                       ("carbon_min", "carbon_max")):
            if np.any(getattr(self, lo) > getattr(self, hi)):
                raise ValueError(f"{lo} exceeds {hi}")

    def contains(self, sample: UncertaintySample, tol: float = 0.0) -> bool:
        return bool(
            np.all(sample.demand >= -tol) and np.all(sample.demand <= self.demand_max + tol)
            and np.all(sample.ambient >= self.ambient_min - tol)
            and np.all(sample.ambient <= self.ambient_max + tol)
            and np.all(sample.price >= self.price_min - tol)
            and np.all(sample.price <= self.price_max + tol)
            and np.all(sample.carbon >= self.carbon_min - tol)
            and np.all(sample.carbon <= self.carbon_max + tol))

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name).tolist() for f in fields(self)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "UncertaintyBounds":
        return cls(**{f.name: d[f.name] for f in fields(cls)})


@dataclass(frozen=True)
class SystemState:
    front_queue: np.ndarray  # (I,)
    back_queue: np.ndarray  # (J,)
    stored_energy: np.ndarray
    temperature: np.ndarray
    emission_vq: float = 0.0


@dataclass(frozen=True)
class Decision:
    accept: np.ndarray  # (I,)
    transfer: np.ndarray  # (I, J)
    process: np.ndarray  # (J,)
    charge: np.ndarray
    discharge: np.ndarray
    cooling: np.ndarray

    @classmethod
    def zeros(cls, config: SystemConfig) -> "Decision":
        n_i, n_j = config.n_nodes, config.n_centers
        return cls(np.zeros(n_i), np.zeros((n_i, n_j)), np.zeros(n_j), np.zeros(n_j),
                   np.zeros(n_j), np.zeros(n_j))

    def to_vector(self) -> np.ndarray:
        """Flatten in the fixed LP layout: accept, transfer (row-major), process, charge, discharge, cooling."""
        return np.concatenate([self.accept, self.transfer.ravel(), self.process, self.charge,
                               self.discharge, self.cooling])

    @classmethod
    def from_vector(cls, config: SystemConfig, x: Sequence[float]) -> "Decision":
        x = np.asarray(x, dtype=float)
        s = decision_slices(config)
        n_i, n_j = config.n_nodes, config.n_centers
        return cls(x[s["accept"]].copy(), x[s["transfer"]].reshape(n_i, n_j).copy(),
                   x[s["process"]].copy(), x[s["charge"]].copy(), x[s["discharge"]].copy(),
                   x[s["cooling"]].copy())


def decision_slices(config: SystemConfig) -> dict[str, slice]:
    n_i, n_j = config.n_nodes, config.n_centers
    out, k = {}, 0
    for name, n in (("accept", n_i), ("transfer", n_i * n_j), ("process", n_j),
                    ("charge", n_j), ("discharge", n_j), ("cooling", n_j)):
        out[name] = slice(k, k + n)
        k += n
    return out


def decision_size(config: SystemConfig) -> int:
    return config.n_nodes * (1 + config.n_centers) + 4 * config.n_centers


def decision_box(config: SystemConfig, sample: UncertaintySample) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds of every decision field in the LP layout."""
    upper = np.concatenate([sample.demand, config.link_capacity.ravel(), config.it_capacity,
                            config.charge_cap, config.discharge_cap, config.cooling_cap])
    return np.zeros_like(upper), upper


@dataclass(frozen=True)
class SlotCosts:
    workload_cost: float
    storage_cost: float
    electricity_cost: float
    total: float
    emission: float


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: tuple
    value: float
    limit: float

    def __str__(self):
        return f"{self.constraint}{list(self.index)}: value {self.value:.6g} vs limit {self.limit:.6g}"


def initial_state(config: SystemConfig, **overrides) -> SystemState:
    """Empty queues, half-full storage, temperature at its lower bound, emission queue at zero."""
    kw = dict(front_queue=np.zeros(config.n_nodes), back_queue=np.zeros(config.n_centers),
              stored_energy=(config.energy_min + config.energy_max) / 2,
              temperature=config.temp_min.copy(), emission_vq=0.0)
    kw.update(overrides)
    return SystemState(**kw)


def power_demand(decision: Decision) -> np.ndarray:
    return decision.process + decision.charge - decision.discharge + decision.cooling


def slot_costs(config: SystemConfig, sample: UncertaintySample, decision: Decision) -> SlotCosts:
    rejected = sample.demand - decision.accept
    if np.any(rejected < -FEAS_TOL):
        raise ValueError("accepted workload exceeds demand")
    f_w = float(np.sum(config.transfer_cost * decision.transfer)
                + np.dot(config.rejection_penalty, rejected))
    f_s = float(np.dot(config.storage_wear, decision.charge + decision.discharge))
    grid = power_demand(decision)
    f_g = float(np.dot(sample.price, grid))
    emission = float(np.dot(sample.carbon, grid))
    return SlotCosts(f_w, f_s, f_g, f_w + f_s + f_g, emission)


def advance_state(state: SystemState, sample: UncertaintySample, decision: Decision,
                  config: SystemConfig) -> SystemState:
    """Raw successor state. Bounds are not enforced here."""
    emission = float(np.dot(sample.carbon, power_demand(decision)))
    return SystemState(
        front_queue=state.front_queue + decision.accept - decision.transfer.sum(axis=1),
        back_queue=state.back_queue + decision.transfer.sum(axis=0) - decision.process,
        stored_energy=(state.stored_energy + decision.charge * config.charge_eff
                       - decision.discharge / config.discharge_eff),
        temperature=(state.temperature + config.heat_coeff * decision.process
                     - config.cool_coeff * decision.cooling - sample.ambient),
        emission_vq=max(state.emission_vq + emission - config.emission_cap, 0.0),
    )


def _collect(out, name, values, limits, bad):
    for idx in zip(*np.nonzero(bad)):
        out.append(Violation(name, tuple(int(k) for k in idx), float(values[idx]),
                             float(limits[idx] if np.ndim(limits) else limits)))


def state_violations(config: SystemConfig, state: SystemState, front_cap=None, back_cap=None,
                     tol: float = FEAS_TOL) -> list[Violation]:
    out: list[Violation] = []
    _collect(out, "front_queue_nonneg", state.front_queue, 0.0, state.front_queue < -tol)
    _collect(out, "back_queue_nonneg", state.back_queue, 0.0, state.back_queue < -tol)
    _collect(out, "stored_energy_lower", state.stored_energy, config.energy_min,
             state.stored_energy < config.energy_min - tol)
    _collect(out, "stored_energy_upper", state.stored_energy, config.energy_max,
             state.stored_energy > config.energy_max + tol)
    _collect(out, "temperature_lower", state.temperature, config.temp_min,
             state.temperature < config.temp_min - tol)
    _collect(out, "temperature_upper", state.temperature, config.temp_max,
             state.temperature > config.temp_max + tol)
    if front_cap is not None:
        _collect(out, "front_queue_cap", state.front_queue, front_cap,
                 state.front_queue > front_cap + tol)
    if back_cap is not None:
        _collect(out, "back_queue_cap", state.back_queue, back_cap,
                 state.back_queue > back_cap + tol)
    return out


def check_feasible(config: SystemConfig, sample: UncertaintySample, state: SystemState,
                   decision: Decision, front_cap=None, back_cap=None,
                   tol: float = FEAS_TOL) -> list[Violation]:
    """All violated decision boxes and successor-state bounds; empty means feasible."""
    out: list[Violation] = []
    boxes = (("accept", decision.accept, sample.demand),
             ("transfer", decision.transfer, config.link_capacity),
             ("process", decision.process, config.it_capacity),
             ("charge", decision.charge, config.charge_cap),
             ("discharge", decision.discharge, config.discharge_cap),
             ("cooling", decision.cooling, config.cooling_cap))
    for name, value, upper in boxes:
        _collect(out, f"{name}_lower", value, 0.0, value < -tol)
        _collect(out, f"{name}_upper", value, upper, value > upper + tol)
    nxt = advance_state(state, sample, decision, config)
    out.extend(state_violations(config, nxt, front_cap, back_cap, tol))
    return out


def check_assumptions(config: SystemConfig, bounds: UncertaintyBounds) -> list[str]:
    """Structural conditions the online feasibility guarantee relies on.

    Returns human-readable problems; an empty list means both hold:
    cooling can always offset peak IT heat plus the strongest ambient heating,
    and the ambient term never cools a data center (so an idle, uncooled
    center cannot drift below its lower temperature bound).
    """
    problems = []
    cool = config.cool_coeff * config.cooling_cap
    need = config.heat_coeff * config.it_capacity - bounds.ambient_min
    for j in np.nonzero(cool < need - FEAS_TOL)[0]:
        problems.append(f"cooling capacity of {config.center_names[j]} too small: "
                        f"{cool[j]:.6g} degC/slot < {need[j]:.6g} required")
    for j in np.nonzero(bounds.ambient_max > FEAS_TOL)[0]:
        problems.append(f"ambient effect at {config.center_names[j]} may cool the room "
                        f"(upper bound {bounds.ambient_max[j]:.6g} > 0)")
    return problems
