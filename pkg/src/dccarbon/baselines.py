"""Comparison policies: clairvoyant horizon LPs, myopic per-slot LPs, and the online
policy with the emission queue switched off."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .linprog import LinearProgram, LpStatus, solve
from .model import (Decision, SampleSeries, SystemConfig, SystemState, UncertaintyBounds,
                    UncertaintySample, advance_state, decision_size, decision_slices,
                    initial_state)
from .online import OnlinePolicy, StrategyParams


@dataclass(frozen=True)
class BaselineCaps:
    front_cap: float = 90.0
    back_cap: float = 70.0

    def __post_init__(self):
        if self.front_cap < 0 or self.back_cap < 0:
            raise ValueError("queue caps must be nonnegative")


class Variant(str, Enum):
    PROPOSED = "proposed"
    C1 = "c1"  # offline, emission bound
    C2 = "c2"  # greedy, emission bound
    C3 = "c3"  # offline
    C4 = "c4"  # greedy
    C5 = "c5"  # online policy, emission queue ignored

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "Variant":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown variant {name!r}; choose from "
                             f"{', '.join(v.value for v in cls)}") from None


_LABELS = {
    Variant.PROPOSED: "Proposed",
    Variant.C1: "C1 offline low-carbon",
    Variant.C2: "C2 greedy low-carbon",
    Variant.C3: "C3 offline",
    Variant.C4: "C4 greedy",
    Variant.C5: "C5 no emission bound",
}


class BaselineInfeasibleError(RuntimeError):
    pass


# ---------------------------------------------------------------- shared row builders

def _decision_cost(config: SystemConfig, sample_price: np.ndarray) -> np.ndarray:
    """Linear cost coefficients over the decision layout (rejection constant excluded)."""
    return np.concatenate([-config.rejection_penalty, config.transfer_cost.ravel(), sample_price,
                           sample_price + config.storage_wear, -sample_price + config.storage_wear,
                           sample_price])


def _emission_row(config: SystemConfig, carbon: np.ndarray) -> np.ndarray:
    I, J = config.n_nodes, config.n_centers
    return np.concatenate([np.zeros(I + I * J), carbon, carbon, -carbon, carbon])


def _transition(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """``next = state + D @ decision + offset(sample)``; returns ``D`` over (qF, qB, eS, tau)."""
    I, J = config.n_nodes, config.n_centers
    sl = decision_slices(config)
    n = decision_size(config)
    D = np.zeros((I + 3 * J, n))
    for i in range(I):
        D[i, sl["accept"].start + i] = 1.0
        for j in range(J):
            D[i, sl["transfer"].start + i * J + j] = -1.0
            D[I + j, sl["transfer"].start + i * J + j] = 1.0
    for j in range(J):
        D[I + j, sl["process"].start + j] = -1.0
        D[I + J + j, sl["charge"].start + j] = config.charge_eff[j]
        D[I + J + j, sl["discharge"].start + j] = -1.0 / config.discharge_eff[j]
        D[I + 2 * J + j, sl["process"].start + j] = config.heat_coeff[j]
        D[I + 2 * J + j, sl["cooling"].start + j] = -config.cool_coeff[j]
    return D, np.arange(I + 3 * J)


def _state_vector(s: SystemState) -> np.ndarray:
    return np.concatenate([s.front_queue, s.back_queue, s.stored_energy, s.temperature])


def _state_bounds(config: SystemConfig, caps: BaselineCaps) -> tuple[np.ndarray, np.ndarray]:
    I, J = config.n_nodes, config.n_centers
    lo = np.concatenate([np.zeros(I), np.zeros(J), config.energy_min, config.temp_min])
    hi = np.concatenate([np.full(I, caps.front_cap), np.full(J, caps.back_cap), config.energy_max,
                         config.temp_max])
    return lo, hi


def _state_offset(config: SystemConfig, ambient: np.ndarray) -> np.ndarray:
    I, J = config.n_nodes, config.n_centers
    return np.concatenate([np.zeros(I + 2 * J), -ambient])


# ---------------------------------------------------------------- offline horizon LP

@dataclass
class OfflinePlan:
    decisions: list
    objective: float  # average cost per slot
    avg_emission: float
    status: LpStatus

    def __len__(self):
        return len(self.decisions)


def offline_lp(config: SystemConfig, samples: SampleSeries, caps: BaselineCaps,
               with_emission_bound: bool, initial: Optional[SystemState] = None,
               emission_budget: Optional[float] = None) -> tuple[LinearProgram, float]:
    """Horizon LP over ``[decision_t, state_{t+1}]`` blocks; returns the LP and the constant
    rejection term so ``(c @ x + const) / T`` is the average cost.

    ``emission_budget`` overrides the total emission allowance ``T * C^E``.
    """
    T = len(samples)
    if T < 1:
        raise ValueError("offline problem needs at least one slot")
    I, J = config.n_nodes, config.n_centers
    nd = decision_size(config)
    ns = I + 3 * J
    blk = nd + ns
    n = T * blk
    D, _ = _transition(config)
    s_lo, s_hi = _state_bounds(config, caps)
    x0 = _state_vector(initial if initial is not None else initial_state(config))

    c = np.zeros(n)
    lower = np.zeros(n)
    upper = np.zeros(n)
    em_row = np.zeros(n)
    Dc = sp.coo_matrix(D)
    rows, cols, vals = [], [], []
    b_eq = np.empty(T * ns)
    eye = np.arange(ns)
    for t in range(T):
        off = t * blk
        c[off:off + nd] = _decision_cost(config, samples.price[t])
        em_row[off:off + nd] = _emission_row(config, samples.carbon[t])
        lo_d = np.zeros(nd)
        hi_d = np.concatenate([samples.demand[t], config.link_capacity.ravel(), config.it_capacity,
                               config.charge_cap, config.discharge_cap, config.cooling_cap])
        lower[off:off + nd], upper[off:off + nd] = lo_d, hi_d
        lower[off + nd:off + blk], upper[off + nd:off + blk] = s_lo, s_hi
        r0 = t * ns
        # next_state - D @ decision - prev_state = offset
        rows += [r0 + eye, r0 + Dc.row]
        cols += [off + nd + eye, off + Dc.col]
        vals += [np.ones(ns), -Dc.data]
        offset = _state_offset(config, samples.ambient[t])
        if t == 0:
            b_eq[r0:r0 + ns] = offset + x0
        else:
            rows.append(r0 + eye)
            cols.append(off - ns + eye)
            vals.append(-np.ones(ns))
            b_eq[r0:r0 + ns] = offset
    A_eq = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(T * ns, n))
    const = float(np.sum(samples.demand @ config.rejection_penalty))
    kw = {}
    if with_emission_bound:
        budget = T * config.emission_cap if emission_budget is None else emission_budget
        kw = dict(A_ub=sp.csr_matrix(em_row[None, :]), b_ub=np.array([budget]))
    return LinearProgram(c=c, A_eq=A_eq, b_eq=b_eq, lower=lower, upper=upper, **kw), const


def _diagnose(config, samples, caps, with_emission_bound, initial, method) -> str:
    if with_emission_bound:
        lp, _ = offline_lp(config, samples, caps, False, initial)
        if solve(lp, method).optimal:
            return "the average-emission bound cannot be met (forced cooling alone exceeds it)"
    return ("the temperature/storage bounds cannot be held for this data; check the cooling "
            "capacity against heat load plus ambient heating and the initial state")


def _extract(config: SystemConfig, x: np.ndarray, T: int) -> list[Decision]:
    nd = decision_size(config)
    blk = nd + config.n_nodes + 3 * config.n_centers
    return [Decision.from_vector(config, x[t * blk:t * blk + nd]) for t in range(T)]


def polish(config: SystemConfig, samples: SampleSeries, decisions: list[Decision],
           caps: Optional[BaselineCaps] = None, initial: Optional[SystemState] = None,
           tol: float = 1e-6) -> list[Decision]:
    """Forward-replay a solver trajectory and remove round-off drift.

    Successor-state bound breaches smaller than ``tol`` are repaired by trimming the
    decision field that directly drives the breached stock; larger ones are left alone.
    """
    state = initial if initial is not None else initial_state(config)
    out = []
    for t, d in enumerate(decisions):
        sample = samples[t]
        acc = np.clip(d.accept, 0.0, sample.demand)
        m = np.clip(d.transfer, 0.0, config.link_capacity)
        pb = np.clip(d.process, 0.0, config.it_capacity)
        ch = np.clip(d.charge, 0.0, config.charge_cap)
        dis = np.clip(d.discharge, 0.0, config.discharge_cap)
        cool = np.clip(d.cooling, 0.0, config.cooling_cap)

        def fix(cur, deficit, lo, hi, scale):
            # move cur by deficit/scale inside [lo, hi] when the breach is tiny
            mask = (deficit > 0) & (deficit < tol)
            return np.where(mask, np.clip(cur + deficit / scale, lo, hi), cur)

        # front queue: q + a - sum m in [0, cap]
        qf = state.front_queue + acc - m.sum(axis=1)
        short = -qf
        if np.any((short > 0) & (short < tol)):
            for i in np.nonzero((short > 0) & (short < tol))[0]:
                tot = m[i].sum()
                if tot > 0:
                    m[i] *= max(0.0, 1.0 - short[i] / tot)
            qf = state.front_queue + acc - m.sum(axis=1)
        if caps is not None:
            acc = fix(acc, -(caps.front_cap - qf), 0.0, sample.demand, -1.0)
        qb = state.back_queue + m.sum(axis=0) - pb
        pb = fix(pb, -qb, 0.0, config.it_capacity, -1.0)
        if caps is not None:
            pb = fix(pb, qb - caps.back_cap, 0.0, config.it_capacity, 1.0)
        es = state.stored_energy + ch * config.charge_eff - dis / config.discharge_eff
        dis = fix(dis, config.energy_min - es, 0.0, config.discharge_cap,
                  -1.0 / config.discharge_eff)
        ch = fix(ch, es - config.energy_max, 0.0, config.charge_cap, -config.charge_eff)
        tau = state.temperature + config.heat_coeff * pb - config.cool_coeff * cool - sample.ambient
        cool = fix(cool, tau - config.temp_max, 0.0, config.cooling_cap, config.cool_coeff)
        cool = fix(cool, config.temp_min - tau, 0.0, config.cooling_cap, -config.cool_coeff)
        d2 = Decision(acc, m, pb, ch, dis, cool)
        out.append(d2)
        state = advance_state(state, sample, d2, config)
    return out


def offline_solve(config: SystemConfig, samples: SampleSeries, caps: BaselineCaps = BaselineCaps(),
                  with_emission_bound: bool = True, initial: Optional[SystemState] = None,
                  method: str = "highs", block: Optional[int] = None,
                  lookahead: int = 0) -> OfflinePlan:
    """Clairvoyant minimum-average-cost trajectory.

    ``block=None`` solves the whole horizon at once.  Otherwise windows of
    ``block + lookahead`` slots are solved in sequence and the first ``block``
    decisions of each are committed; the emission allowance of each window is the
    cumulative budget up to its end minus what was already emitted.
    """
    T = len(samples)
    init = initial if initial is not None else initial_state(config)
    if block is None or block >= T:
        lp, const = offline_lp(config, samples, caps, with_emission_bound, init)
        sol = solve(lp, method)
        if not sol.optimal:
            raise BaselineInfeasibleError(
                f"offline problem is {sol.status.value}: "
                + _diagnose(config, samples, caps, with_emission_bound, init, method))
        decisions = _extract(config, sol.x, T)
    else:
        if block < 1 or lookahead < 0:
            raise ValueError("block must be positive and lookahead nonnegative")
        decisions, state, emitted = [], init, 0.0
        for start in range(0, T, block):
            stop = min(T, start + block + lookahead)
            window = samples[start:stop]
            budget = config.emission_cap * stop - emitted
            lp, _ = offline_lp(config, window, caps, with_emission_bound, state, budget)
            sol = solve(lp, method)
            if not sol.optimal:
                raise BaselineInfeasibleError(
                    f"offline window [{start}, {stop}) is {sol.status.value}: "
                    + _diagnose(config, window, caps, with_emission_bound, state, method))
            commit = _extract(config, sol.x, min(block, T - start))
            for k, d in enumerate(commit):
                s = samples[start + k]
                emitted += float(s.carbon @ (d.process + d.charge - d.discharge + d.cooling))
                state = advance_state(state, s, d, config)
            decisions += commit
    decisions = polish(config, samples, decisions, caps, init)
    cost, em = 0.0, 0.0
    for t, d in enumerate(decisions):
        s = samples[t]
        grid = d.process + d.charge - d.discharge + d.cooling
        cost += float(np.sum(config.transfer_cost * d.transfer)
                      + config.rejection_penalty @ (s.demand - d.accept)
                      + config.storage_wear @ (d.charge + d.discharge) + s.price @ grid)
        em += float(s.carbon @ grid)
    return OfflinePlan(decisions, cost / T, em / T, LpStatus.OPTIMAL)


@dataclass(frozen=True)
class ReplayPolicy:
    """Plays back a precomputed trajectory, ignoring the observed state."""

    decisions: tuple

    def __call__(self, t: int, state: SystemState, sample: UncertaintySample) -> Decision:
        return self.decisions[t]


# ---------------------------------------------------------------- greedy per-slot LP

def greedy_lp(state: SystemState, sample: UncertaintySample, config: SystemConfig,
              caps: BaselineCaps, emission_limit: Optional[float]) -> LinearProgram:
    """Single-slot cost minimization with successor-state bounds as rows."""
    D, _ = _transition(config)
    lo, hi = _state_bounds(config, caps)
    base = _state_vector(state) + _state_offset(config, sample.ambient)
    A = [D, -D]
    b = [hi - base, base - lo]
    if emission_limit is not None:
        A.append(_emission_row(config, sample.carbon)[None, :])
        b.append(np.array([emission_limit]))
    upper = np.concatenate([sample.demand, config.link_capacity.ravel(), config.it_capacity,
                            config.charge_cap, config.discharge_cap, config.cooling_cap])
    return LinearProgram(c=_decision_cost(config, sample.price), A_ub=np.vstack(A),
                         b_ub=np.concatenate(b), lower=np.zeros_like(upper), upper=upper)


def greedy_step(state: SystemState, sample: UncertaintySample, config: SystemConfig,
                caps: BaselineCaps = BaselineCaps(), with_emission_bound: bool = True,
                emission_limit: Optional[float] = None, method: str = "simplex") -> Decision:
    """Cheapest decision for this slot alone that keeps the successor state in bounds.

    With the emission bound the slot's emission is capped at ``C^E`` unless
    ``emission_limit`` gives another allowance.
    """
    limit = None
    if with_emission_bound:
        limit = config.emission_cap if emission_limit is None else emission_limit
    sol = solve(greedy_lp(state, sample, config, caps, limit), method)
    if not sol.optimal:
        raise BaselineInfeasibleError(
            f"single-slot problem is {sol.status.value}; the configuration cannot hold the "
            "state bounds (check cooling capacity and queue caps)")
    d = Decision.from_vector(config, sol.x)
    return _clean(d, state, sample, config, caps)


def _clean(d: Decision, state, sample, config, caps) -> Decision:
    # the simplex refinement can leave 1e-12 negatives or tiny bound overshoots
    return polish(config, SampleSeries.from_samples([sample]), [d], caps, state)[0]


class GreedyPolicy:
    """Myopic per-slot LP.  ``budget="slot"`` caps each slot's emission at ``C^E``;
    ``budget="cumulative"`` allows any slot emission that keeps the running total
    within ``(t + 1) * C^E`` (this mode carries the running total between calls)."""

    def __init__(self, config: SystemConfig, caps: BaselineCaps = BaselineCaps(),
                 with_emission_bound: bool = True, budget: str = "slot", method: str = "simplex"):
        if budget not in ("slot", "cumulative"):
            raise ValueError("budget must be 'slot' or 'cumulative'")
        self.config = config
        self.caps = caps
        self.with_emission_bound = with_emission_bound
        self.budget = budget
        self.method = method
        self.emitted = 0.0

    def __call__(self, t: int, state: SystemState, sample: UncertaintySample) -> Decision:
        limit = None
        if self.with_emission_bound and self.budget == "cumulative":
            limit = max(self.config.emission_cap * (t + 1) - self.emitted, 0.0)
        d = greedy_step(state, sample, self.config, self.caps, self.with_emission_bound, limit,
                        self.method)
        grid = d.process + d.charge - d.discharge + d.cooling
        self.emitted += float(sample.carbon @ grid)
        return d


# ---------------------------------------------------------------- variant runner

def run_variant(variant: Variant, config: SystemConfig, samples: SampleSeries,
                params: Optional[StrategyParams] = None, caps: Optional[BaselineCaps] = None,
                initial: Optional[SystemState] = None, bounds: Optional[UncertaintyBounds] = None,
                on_infeasible: str = "raise", offline_block: Optional[int] = None,
                offline_lookahead: int = 0, greedy_budget: str = "slot"):
    """Simulate one comparison variant and return its trace.

    ``Proposed`` needs tuned ``params``.  ``C5`` uses ``params`` when given
    (they should be tuned with ``Q^E = 0``), otherwise solves for them from ``bounds``.
    """
    from .sim import simulate
    from .tuning import optimize_params

    variant = Variant(variant)
    caps = caps or BaselineCaps()
    initial = initial if initial is not None else initial_state(config)
    kw = dict(initial=initial, bounds=bounds, on_infeasible=on_infeasible, label=variant.label)
    if variant is Variant.PROPOSED:
        if params is None:
            raise ValueError("the proposed policy needs strategy parameters")
        return simulate(OnlinePolicy(config, params), samples, config, params=params, **kw)
    if variant is Variant.C5:
        if params is None:
            if bounds is None:
                raise ValueError("C5 needs strategy parameters or uncertainty bounds")
            params = optimize_params(config, bounds, 0.0)
        return simulate(OnlinePolicy(config, params, use_emission_queue=False), samples, config,
                        params=params, **kw)
    cap_kw = dict(front_cap=caps.front_cap, back_cap=caps.back_cap)
    if variant in (Variant.C1, Variant.C3):
        plan = offline_solve(config, samples, caps, variant is Variant.C1, initial,
                             block=offline_block, lookahead=offline_lookahead)
        return simulate(ReplayPolicy(tuple(plan.decisions)), samples, config, **cap_kw, **kw)
    policy = GreedyPolicy(config, caps, variant is Variant.C2, greedy_budget)
    return simulate(policy, samples, config, **cap_kw, **kw)
