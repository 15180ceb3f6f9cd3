"""Discrete-time simulation loop, per-slot traces and summary metrics."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .model import (Decision, SampleSeries, SystemConfig, SystemState, UncertaintyBounds,
                    UncertaintySample, Violation, advance_state, check_feasible, initial_state,
                    slot_costs, state_violations)
from .online import StrategyParams, compute_drift_bound, drift_term, lyapunov_value, virtual_queues

Policy = Callable[[int, SystemState, UncertaintySample], Decision]


class InfeasibleDecisionError(RuntimeError):
    def __init__(self, slot: int, violations: list[Violation]):
        self.slot = slot
        self.violations = violations
        detail = "; ".join(str(v) for v in violations[:5])
        super().__init__(f"slot {slot}: policy returned an infeasible decision ({detail})")


@dataclass
class Trace:
    """Per-slot record of a run. State arrays have ``T + 1`` rows (start of each slot plus the end)."""

    config: SystemConfig
    samples: SampleSeries
    params: Optional[StrategyParams]
    label: str
    front_queue: np.ndarray
    back_queue: np.ndarray
    stored_energy: np.ndarray
    temperature: np.ndarray
    emission_vq: np.ndarray
    accept: np.ndarray
    transfer: np.ndarray
    process: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    cooling: np.ndarray
    workload_cost: np.ndarray
    storage_cost: np.ndarray
    electricity_cost: np.ndarray
    total_cost: np.ndarray
    emission: np.ndarray
    drift_linear: np.ndarray  # I_t at the chosen decision
    lyapunov: np.ndarray  # L_t, T + 1 entries
    violations: list = field(default_factory=list)  # (slot, Violation)
    out_of_bounds_slots: int = 0

    def __len__(self):
        return self.total_cost.size

    @property
    def drift(self) -> np.ndarray:
        return np.diff(self.lyapunov)

    def state(self, t: int) -> SystemState:
        return SystemState(self.front_queue[t], self.back_queue[t], self.stored_energy[t],
                           self.temperature[t], float(self.emission_vq[t]))

    def decision(self, t: int) -> Decision:
        return Decision(self.accept[t], self.transfer[t], self.process[t], self.charge[t],
                        self.discharge[t], self.cooling[t])

    def csv_header(self) -> list[str]:
        n_i, n_j = self.config.n_nodes, self.config.n_centers
        I, J = range(n_i), range(n_j)
        head = ["t"]
        head += [f"front_queue_{i}" for i in I] + [f"back_queue_{j}" for j in J]
        head += [f"stored_energy_{j}" for j in J] + [f"temperature_{j}" for j in J]
        head += ["emission_vq"]
        head += [f"accept_{i}" for i in I] + [f"transfer_{i}_{j}" for i in I for j in J]
        for name in ("process", "charge", "discharge", "cooling"):
            head += [f"{name}_{j}" for j in J]
        head += ["workload_cost", "storage_cost", "electricity_cost", "total_cost", "emission",
                 "drift_linear", "lyapunov", "drift"]
        return head

    def _rows(self, start: int, stop: int) -> np.ndarray:
        T = len(self)
        n = stop - start
        cols = [np.arange(start, stop)[:, None],
                self.front_queue[start:stop], self.back_queue[start:stop],
                self.stored_energy[start:stop], self.temperature[start:stop],
                self.emission_vq[start:stop, None],
                self.accept[start:stop], self.transfer[start:stop].reshape(n, -1),
                self.process[start:stop], self.charge[start:stop],
                self.discharge[start:stop], self.cooling[start:stop]]
        for a in (self.workload_cost, self.storage_cost, self.electricity_cost, self.total_cost,
                  self.emission, self.drift_linear):
            cols.append(a[start:stop, None])
        cols.append(self.lyapunov[start:stop, None])
        cols.append(self.drift[start:stop, None] if T else np.zeros((0, 1)))
        return np.hstack(cols)

    def to_csv(self, path, chunk: int = 1000) -> None:
        """One row per slot: state at the start of the slot, the decision and its costs."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            for start in range(0, len(self), chunk):
                block = self._rows(start, min(start + chunk, len(self)))
                for row in block:
                    w.writerow([int(row[0])] + [format(v, ".17g") for v in row[1:]])


def simulate(policy: Policy, samples: SampleSeries, config: SystemConfig,
             initial: Optional[SystemState] = None, params: Optional[StrategyParams] = None,
             bounds: Optional[UncertaintyBounds] = None, front_cap=None, back_cap=None,
             on_infeasible: str = "raise", label: str = "") -> Trace:
    """Observe, decide, cost, advance for every slot of ``samples``.

    The emission queue is updated for every policy so diagnostics are comparable.
    ``params`` only feeds the Lyapunov diagnostics (NaN without it).
    ``on_infeasible`` is ``"raise"`` (abort with the slot index) or ``"record"``.
    """
    if on_infeasible not in ("raise", "record"):
        raise ValueError("on_infeasible must be 'raise' or 'record'")
    T = len(samples)
    n_i, n_j = config.n_nodes, config.n_centers
    state = initial if initial is not None else initial_state(config)
    S = {k: np.empty((T + 1, n)) for k, n in (("front_queue", n_i), ("back_queue", n_j),
                                              ("stored_energy", n_j), ("temperature", n_j))}
    eq = np.empty(T + 1)
    D = {k: np.empty((T, n_j)) for k in ("process", "charge", "discharge", "cooling")}
    D["accept"] = np.empty((T, n_i))
    D["transfer"] = np.empty((T, n_i, n_j))
    C = {k: np.empty(T) for k in ("workload_cost", "storage_cost", "electricity_cost",
                                  "total_cost", "emission", "drift_linear")}
    lyap = np.full(T + 1, np.nan)
    violations, oob = [], 0

    def record_state(t, s):
        S["front_queue"][t] = s.front_queue
        S["back_queue"][t] = s.back_queue
        S["stored_energy"][t] = s.stored_energy
        S["temperature"][t] = s.temperature
        eq[t] = s.emission_vq
        if params is not None:
            lyap[t] = lyapunov_value(virtual_queues(s, params))

    record_state(0, state)
    for t in range(T):
        sample = samples[t]
        if bounds is not None and not bounds.contains(sample):
            oob += 1
        d = policy(t, state, sample)
        bad = check_feasible(config, sample, state, d, front_cap, back_cap)
        if bad:
            if on_infeasible == "raise":
                raise InfeasibleDecisionError(t, bad)
            violations.extend((t, v) for v in bad)
        costs = slot_costs(config, sample, d)
        for k in ("accept", "transfer", "process", "charge", "discharge", "cooling"):
            D[k][t] = getattr(d, k)
        C["workload_cost"][t] = costs.workload_cost
        C["storage_cost"][t] = costs.storage_cost
        C["electricity_cost"][t] = costs.electricity_cost
        C["total_cost"][t] = costs.total
        C["emission"][t] = costs.emission
        C["drift_linear"][t] = (drift_term(virtual_queues(state, params), sample, d, config)
                                if params is not None else np.nan)
        state = advance_state(state, sample, d, config)
        record_state(t + 1, state)
    return Trace(config=config, samples=samples, params=params, label=label, **S, emission_vq=eq,
                 **D, **C, lyapunov=lyap, violations=violations, out_of_bounds_slots=oob)


def replay_states(trace: Trace, initial: Optional[SystemState] = None) -> list[SystemState]:
    """Re-run the recorded decisions through the dynamics from the recorded initial state."""
    state = initial if initial is not None else trace.state(0)
    out = [state]
    for t in range(len(trace)):
        state = advance_state(state, trace.samples[t], trace.decision(t), trace.config)
        out.append(state)
    return out


def bootstrap_se(x: np.ndarray, block: Optional[int] = None, n_boot: int = 200,
                 seed: int = 0) -> float:
    """Moving-block bootstrap standard error of the mean of a (possibly autocorrelated) series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 0.0
    block = block or max(1, int(round(n ** (1 / 3))))
    block = min(block, n)
    n_blocks = int(np.ceil(n / block))
    rng = np.random.default_rng(seed)
    csum = np.concatenate([[0.0], np.cumsum(x)])
    starts = rng.integers(0, n - block + 1, size=(n_boot, n_blocks))
    sums = (csum[starts + block] - csum[starts]).sum(axis=1)
    return float(np.std(sums / (n_blocks * block), ddof=1))


@dataclass
class Report:
    label: str
    n_slots: int
    avg_cost_rate: float
    avg_emission_rate: float
    cost_se: float
    emission_se: float
    emission_cap: float
    emission_exceeds_cap: bool
    max_emission_vq: float
    violation_count: int
    out_of_bounds_slots: int
    queue_ranges: dict
    drift_bound: Optional[float] = None
    gap_bound: Optional[float] = None  # B / V
    penalty_weight: Optional[float] = None

    def to_json_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")


def metrics(trace: Trace, start: int = 0, stop: Optional[int] = None,
            bounds: Optional[UncertaintyBounds] = None) -> Report:
    """Averages over slots ``[start, stop)`` of the trace."""
    stop = len(trace) if stop is None else stop
    if not 0 <= start < stop <= len(trace):
        raise ValueError(f"empty or out-of-range evaluation window [{start}, {stop})")
    cost = trace.total_cost[start:stop]
    em = trace.emission[start:stop]
    # states reached inside the window: start of each slot and the successor of the last one
    sl = slice(start, stop + 1)
    ranges = {}
    for name in ("front_queue", "back_queue", "stored_energy", "temperature"):
        a = getattr(trace, name)[sl]
        ranges[name] = {"min": a.min(axis=0).tolist(), "max": a.max(axis=0).tolist()}
    # violations are recorded against the successor of slot t, i.e. state t + 1
    n_viol = sum(1 for t, _ in trace.violations if start <= t < stop)
    B = gap = V = None
    if trace.params is not None:
        V = trace.params.penalty_weight
    if bounds is not None:
        B = compute_drift_bound(trace.config, bounds)
        if V:
            gap = B / V
    avg_em = float(em.mean())
    return Report(
        label=trace.label, n_slots=stop - start, avg_cost_rate=float(cost.mean()),
        avg_emission_rate=avg_em, cost_se=bootstrap_se(cost), emission_se=bootstrap_se(em),
        emission_cap=trace.config.emission_cap,
        emission_exceeds_cap=bool(avg_em > trace.config.emission_cap),
        max_emission_vq=float(trace.emission_vq[sl].max()), violation_count=n_viol,
        out_of_bounds_slots=trace.out_of_bounds_slots, queue_ranges=ranges,
        drift_bound=B, gap_bound=gap, penalty_weight=V)


def count_state_violations(trace: Trace, tol: float = 1e-9) -> int:
    """Bound violations found by re-checking every recorded state directly."""
    return sum(len(state_violations(trace.config, trace.state(t), tol=tol))
               for t in range(len(trace) + 1))
