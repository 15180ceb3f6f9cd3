"""Method comparison and parameter sweeps over a train/evaluation split."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import BaselineCaps, Variant, run_variant
from .model import SampleSeries, SystemConfig, UncertaintyBounds
from .online import StrategyParams
from .scenario import estimate_bounds
from .sim import Report, metrics
from .tuning import InfeasibleParamsError, optimize_params, tune

AXES = ("qe", "ce")


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- comparison

@dataclass
class ComparisonRow:
    variant: Variant
    report: Report

    def csv_row(self) -> list:
        r = self.report
        return [self.variant.value, r.label, format(r.avg_cost_rate, ".17g"),
                format(r.avg_emission_rate, ".17g"), format(r.cost_se, ".17g"),
                format(r.emission_se, ".17g"), format(r.max_emission_vq, ".17g"),
                r.violation_count, int(r.emission_exceeds_cap)]


COMPARISON_HEADER = ["variant", "method", "cost_rate_usd_per_slot", "emission_rate_tCO2_per_slot",
                     "cost_se", "emission_se", "max_emission_vq", "violations", "exceeds_cap"]


def _compare_one(task):
    variant, config, samples, params, bounds, caps = task
    trace = run_variant(variant, config, samples, params=params, bounds=bounds, caps=caps,
                        on_infeasible="record")
    return ComparisonRow(variant, metrics(trace, bounds=bounds))


def compare(config: SystemConfig, eval_samples: SampleSeries, params: Optional[StrategyParams],
            bounds: UncertaintyBounds, variants: Sequence[Variant] = tuple(Variant),
            caps: BaselineCaps = BaselineCaps(), jobs: int = 1) -> list[ComparisonRow]:
    """One row per variant, evaluated on the same samples from the same initial state."""
    tasks = [(Variant(v), config, eval_samples, params, bounds, caps) for v in variants]
    return _pmap(_compare_one, tasks, jobs)


def save_comparison(rows: list[ComparisonRow], csv_path, json_path=None) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        for row in rows:
            w.writerow(row.csv_row())
    if json_path is not None:
        doc = [{"variant": r.variant.value, **r.report.to_json_dict()} for r in rows]
        Path(json_path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepPoint:
    value: float
    status: str  # "ok" or "error"
    report: Optional[Report] = None
    params: Optional[StrategyParams] = None
    tuning_iterations: int = 0
    error: str = ""


def _sweep_one(task) -> SweepPoint:
    axis, value, config, train, eval_samples, bounds = task
    try:
        if axis == "qe":
            params = optimize_params(config, bounds, value)
            cfg, iters = config, 0
        else:
            cfg = config.replace(emission_cap=value)
            rep = tune(cfg, train, bounds=bounds)
            params, iters = rep.params, rep.iterations
        trace = run_variant(Variant.PROPOSED, cfg, eval_samples, params=params, bounds=bounds,
                            on_infeasible="record")
        return SweepPoint(value, "ok", metrics(trace, bounds=bounds), params, iters)
    except (InfeasibleParamsError, ValueError) as exc:
        return SweepPoint(value, "error", error=str(exc))


def sweep(axis: str, values: Sequence[float], config: SystemConfig, train: SampleSeries,
          eval_samples: SampleSeries, bounds: Optional[UncertaintyBounds] = None,
          jobs: int = 1) -> list[SweepPoint]:
    """Evaluate the proposed policy at each swept value.

    ``axis="qe"`` fixes the emission-queue level and solves for ``(V, theta)`` directly;
    ``axis="ce"`` changes the emission cap and reruns the full tuning loop.
    A point that fails is reported with ``status="error"``; the others still run.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    vals = [float(v) for v in values]
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("sweep values must be nonempty and strictly increasing")
    bounds = bounds if bounds is not None else estimate_bounds(train)
    tasks = [(axis, v, config, train, eval_samples, bounds) for v in vals]
    return _pmap(_sweep_one, tasks, jobs)


SWEEP_HEADER = ["value", "status", "penalty_weight", "emission_queue_cap", "tuning_iterations",
                "cost_rate_usd_per_slot", "cost_se", "emission_rate_tCO2_per_slot", "emission_se",
                "max_emission_vq", "violations", "error"]


def save_sweep(points: list[SweepPoint], path, axis: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis] + SWEEP_HEADER[1:])
        for p in points:
            if p.status == "ok":
                r = p.report
                nums = [p.params.penalty_weight, p.params.emission_queue_cap]
                w.writerow([format(p.value, ".17g"), p.status]
                           + [format(x, ".17g") for x in nums] + [p.tuning_iterations]
                           + [format(x, ".17g") for x in (r.avg_cost_rate, r.cost_se,
                                                          r.avg_emission_rate, r.emission_se,
                                                          r.max_emission_vq)]
                           + [r.violation_count, ""])
            else:
                w.writerow([format(p.value, ".17g"), p.status] + [""] * 9 + [p.error])


def trend_inversions(values: Sequence[float], ses: Sequence[float], increasing: bool) -> list[tuple]:
    """Adjacent steps that go the wrong way, as ``(index, size, allowed)`` with
    ``allowed = 2 * max(se_k, se_{k+1})``."""
    v = np.asarray(values, dtype=float)
    s = np.asarray(ses, dtype=float)
    out = []
    for k in range(len(v) - 1):
        step = v[k + 1] - v[k]
        wrong = -step if increasing else step
        if wrong > 0:
            out.append((k, float(wrong), float(2 * max(s[k], s[k + 1]))))
    return out


def monotone_within_noise(values, ses, increasing: bool) -> bool:
    """At most one wrong-way step, and that one smaller than its 2-SE allowance."""
    inv = trend_inversions(values, ses, increasing)
    return len(inv) == 0 or (len(inv) == 1 and inv[0][1] < inv[0][2])
