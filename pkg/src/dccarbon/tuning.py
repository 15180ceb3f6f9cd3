"""Strategy-parameter tuning.

The online policy keeps every physical stock inside its bounds whenever the
offsets and penalty weight satisfy a set of linear inequalities in
``z = (V, theta_F, theta_B, theta_S, theta_H)``.  We maximize ``V`` over that
polyhedron, then pick offsets in the middle of the remaining slack, and iterate
on the emission-queue level ``Q^E`` until it stops growing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .linprog import LinearProgram, LpStatus, solve
from .model import SampleSeries, SystemConfig, UncertaintyBounds, check_assumptions, initial_state
from .online import OnlinePolicy, StrategyParams

V_MAX = 1e6
RESIDUAL_TOL = 1e-8


class InfeasibleParamsError(ValueError):
    pass


@dataclass(frozen=True)
class ParamConstraints:
    """Rows ``G z >= h`` over ``z = (V, theta_F[I], theta_B[J], theta_S[J], theta_H[J])``."""

    G: np.ndarray
    h: np.ndarray
    labels: tuple
    n_nodes: int
    n_centers: int

    @property
    def n_rows(self) -> int:
        return self.G.shape[0]

    def pack(self, params: StrategyParams) -> np.ndarray:
        return np.concatenate([[params.penalty_weight], params.theta_front, params.theta_back,
                               params.theta_storage, params.theta_temp])

    def unpack(self, z, emission_queue_cap: float) -> StrategyParams:
        I, J = self.n_nodes, self.n_centers
        s = np.cumsum([1, I, J, J, J])
        return StrategyParams(float(z[0]), z[1:s[1]], z[s[1]:s[2]], z[s[2]:s[3]], z[s[3]:s[4]],
                              emission_queue_cap)

    def residuals(self, z) -> np.ndarray:
        """``G z - h``; a point is feasible when every entry is nonnegative."""
        if isinstance(z, StrategyParams):
            z = self.pack(z)
        return self.G @ np.asarray(z, dtype=float) - self.h

    def violated(self, z, tol: float = RESIDUAL_TOL) -> list[str]:
        r = self.residuals(z)
        return [f"{lab}: residual {v:.3g}" for lab, v in zip(self.labels, r) if v < -tol]


def feasibility_constraints(config: SystemConfig, bounds: UncertaintyBounds, emission_queue_cap: float,
                            margin: float = 0.0) -> ParamConstraints:
    """The sufficient conditions for feasibility, one row per (node, center) link and five per center, plus ``V >= 0``.

    ``margin`` tightens every row to ``G z >= h + margin``.
    """
    if emission_queue_cap < 0:
        raise ValueError("emission queue cap must be nonnegative")
    I, J = config.n_nodes, config.n_centers
    n = 1 + I + 3 * J
    iF, iB, iS, iH = 1, 1 + I, 1 + I + J, 1 + I + 2 * J
    Q = emission_queue_cap
    rows, rhs, labels = [], [], []

    def add(coefs: dict, b: float, label: str):
        g = np.zeros(n)
        for k, v in coefs.items():
            g[k] += v
        rows.append(g)
        rhs.append(b + margin)
        labels.append(label)

    c = config
    link_total = c.link_capacity.sum(axis=1)
    for i in range(I):
        for j in range(J):
            add({iF + i: -1.0, iB + j: 1.0, 0: c.transfer_cost[i, j]}, link_total[i],
                f"route[{i},{j}]")
    for j in range(J):
        eta_c, eta_d = c.charge_eff[j], c.discharge_eff[j]
        kb, kc = c.heat_coeff[j], c.cool_coeff[j]
        add({iB + j: -1.0, iH + j: kb, 0: bounds.price_min[j]},
            c.it_capacity[j] - c.temp_min[j] * kb, f"process[{j}]")
        add({iS + j: -1.0 / eta_d, 0: c.storage_wear[j] - bounds.price_max[j]},
            (c.energy_min[j] + c.discharge_cap[j] / eta_d) / eta_d + Q * bounds.carbon_max[j],
            f"discharge[{j}]")
        add({iS + j: eta_c, 0: c.storage_wear[j] + bounds.price_min[j]},
            -(c.energy_max[j] - c.charge_cap[j] * eta_c) * eta_c, f"charge[{j}]")
        add({iH + j: -kc, 0: bounds.price_min[j]},
            (c.temp_min[j] + kc * c.cooling_cap[j]) * kc, f"cool_off[{j}]")
        add({iH + j: kc, 0: -bounds.price_max[j]},
            -(c.temp_max[j] - kb * c.it_capacity[j] + bounds.ambient_min[j]) * kc
            + Q * bounds.carbon_max[j], f"cool_on[{j}]")
    add({0: 1.0}, 0.0, "penalty_weight")
    return ParamConstraints(np.array(rows), np.array(rhs), tuple(labels), I, J)


def _max_v(cons: ParamConstraints, v_cap: Optional[float]) -> tuple[LpStatus, float]:
    n = cons.G.shape[1]
    c = np.zeros(n)
    c[0] = -1.0
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    if v_cap is not None:
        upper[0] = v_cap
    sol = solve(LinearProgram(c=c, A_ub=-cons.G, b_ub=-cons.h, lower=lower, upper=upper),
                method="simplex")
    return sol.status, (float(sol.x[0]) if sol.optimal else np.nan)


def max_penalty_weight(config: SystemConfig, bounds: UncertaintyBounds, emission_queue_cap: float,
                       margin: float = 0.0, v_max: float = V_MAX) -> tuple[float, bool]:
    """Largest feasible ``V`` and whether the cap ``v_max`` was needed."""
    cons = feasibility_constraints(config, bounds, emission_queue_cap, margin)
    status, v = _max_v(cons, None)
    if status is LpStatus.INFEASIBLE:
        raise InfeasibleParamsError(
            "no feasible strategy parameters: the feasibility conditions on (V, theta) are "
            f"inconsistent at Q^E = {emission_queue_cap:.6g}; check cooling capacity and "
            "temperature/storage bands against the uncertainty bounds")
    if status is LpStatus.UNBOUNDED:
        status, v = _max_v(cons, v_max)
        return v, True
    return v, False


def _offsets_at(config: SystemConfig, bounds: UncertaintyBounds, V: float, Q: float,
                margin: float) -> tuple[np.ndarray, ...]:
    """Offsets at a fixed ``V``: temperature and storage offsets at the middle of their
    feasible interval, back-end offsets as large as allowed, front-end offsets as large as allowed."""
    c = config
    kb, kc = c.heat_coeff, c.cool_coeff
    eta_c, eta_d = c.charge_eff, c.discharge_eff
    h_hi = (V * bounds.price_min - margin) / kc - (c.temp_min + kc * c.cooling_cap)
    h_lo = ((V * bounds.price_max + Q * bounds.carbon_max + margin) / kc
            - (c.temp_max - kb * c.it_capacity + bounds.ambient_min))
    s_hi = eta_d * ((c.storage_wear - bounds.price_max) * V - Q * bounds.carbon_max - margin) \
        - (c.energy_min + c.discharge_cap / eta_d)
    s_lo = (margin - (c.storage_wear + bounds.price_min) * V) / eta_c \
        - (c.energy_max - c.charge_cap * eta_c)
    theta_h = 0.5 * (h_lo + h_hi)
    theta_s = 0.5 * (s_lo + s_hi)
    theta_b = kb * theta_h + bounds.price_min * V - c.it_capacity + c.temp_min * kb - margin
    theta_f = np.min(theta_b[None, :] + c.transfer_cost * V, axis=1) \
        - c.link_capacity.sum(axis=1) - margin
    return theta_f, theta_b, theta_s, theta_h


def optimize_params(config: SystemConfig, bounds: UncertaintyBounds, emission_queue_cap: float,
                    v_max: float = V_MAX, margin: float = 0.0,
                    check: bool = True) -> StrategyParams:
    """Maximize ``V`` over the feasibility conditions and return matching offsets.

    Raises :class:`InfeasibleParamsError` when no parameters exist, including when the
    structural cooling/ambient assumptions fail (``check=True``).
    """
    if check:
        problems = check_assumptions(config, bounds)
        if problems:
            raise InfeasibleParamsError("no feasible strategy parameters: " + "; ".join(problems))
    V, _ = max_penalty_weight(config, bounds, emission_queue_cap, margin, v_max)
    V = max(V, 0.0)
    offsets = _offsets_at(config, bounds, V, emission_queue_cap, margin)
    params = StrategyParams(V, *offsets, emission_queue_cap=emission_queue_cap)
    cons = feasibility_constraints(config, bounds, emission_queue_cap, margin)
    bad = cons.violated(params)
    if bad:
        # the simplex optimum sits on the boundary; back off V slightly to absorb round-off
        V2 = V * (1 - 1e-9) - 1e-12
        if V2 >= 0:
            params = StrategyParams(V2, *_offsets_at(config, bounds, V2, emission_queue_cap, margin),
                                    emission_queue_cap=emission_queue_cap)
            bad = cons.violated(params)
    if bad:
        raise InfeasibleParamsError("no feasible strategy parameters: " + "; ".join(bad))
    return params


# ---------------------------------------------------------------- fixed point on Q^E

@dataclass
class TuningReport:
    params: StrategyParams
    history: list  # (Q^E used, V, simulated max emission queue)
    converged: bool
    iterations: int
    v_capped: bool = False
    bounds: Optional[UncertaintyBounds] = None
    train_violations: int = 0

    def to_json_dict(self) -> dict:
        return {
            "params": self.params.to_json_dict(),
            "converged": self.converged,
            "iterations": self.iterations,
            "v_capped": self.v_capped,
            "train_violations": self.train_violations,
            "history": [{"emission_queue_cap": q, "penalty_weight": v, "max_emission_vq": m}
                        for q, v, m in self.history],
            "bounds": self.bounds.to_json_dict() if self.bounds is not None else None,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    def save_history_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "emission_queue_cap", "penalty_weight", "max_emission_vq"])
            for k, (q, v, m) in enumerate(self.history, start=1):
                w.writerow([k, format(q, ".17g"), format(v, ".17g"), format(m, ".17g")])


def simulate_max_queue(config: SystemConfig, samples: SampleSeries,
                       params: StrategyParams) -> tuple[float, int]:
    """Run the online policy over ``samples``; return the peak emission queue and violation count."""
    from .sim import simulate

    trace = simulate(OnlinePolicy(config, params), samples, config, initial_state(config),
                     on_infeasible="record")
    return float(trace.emission_vq.max()), len(trace.violations)


def tune(config: SystemConfig, samples: SampleSeries,
         sim_hook: Optional[Callable[[StrategyParams], float]] = None,
         bounds: Optional[UncertaintyBounds] = None, max_iter: int = 50, rel_tol: float = 1e-3,
         margin: float = 0.0, v_max: float = V_MAX, bound_margin: float = 0.05) -> TuningReport:
    """Alternate between the max-``V`` solve and a training simulation until ``Q^E`` settles.

    ``Q^E`` is updated as ``max(Q^E, simulated peak)`` so the iterates never decrease.
    ``sim_hook(params)`` replaces the built-in training simulation when given.
    """
    if len(samples) == 0:
        raise ValueError("tuning needs a nonempty historical dataset")
    if bounds is None:
        from .scenario import estimate_bounds
        bounds = estimate_bounds(samples, bound_margin)
    n_viol = 0

    def run(p):
        nonlocal n_viol
        if sim_hook is not None:
            return float(sim_hook(p))
        peak, n_viol = simulate_max_queue(config, samples, p)
        return peak

    Q = 0.0
    history = []
    converged = False
    for _ in range(max_iter):
        params = optimize_params(config, bounds, Q, v_max=v_max, margin=margin)
        peak = run(params)
        history.append((Q, params.penalty_weight, peak))
        new_q = max(Q, peak)
        if abs(new_q - Q) <= rel_tol * new_q or new_q == Q:
            converged = True
            Q = new_q
            break
        Q = new_q
    final = optimize_params(config, bounds, Q, v_max=v_max, margin=margin)
    _, capped = max_penalty_weight(config, bounds, Q, margin, v_max)
    return TuningReport(final, history, converged, len(history), capped, bounds, n_viol)
