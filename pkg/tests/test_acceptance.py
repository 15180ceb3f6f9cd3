"""End-to-end acceptance checks at the full case-study scale.

Each test prints one ``[criterion k] PASS|FAIL`` line with the measured quantities,
then asserts.  Run with ``pytest tests/test_acceptance.py -v`` to see the lines.
"""

import hashlib

import numpy as np
import pytest

from conftest import random_config, random_params, random_sample, random_state, tiny_config
from dccarbon.baselines import BaselineCaps, Variant, offline_solve
from dccarbon.cli import main
from dccarbon.experiments import compare, monotone_within_noise, sweep
from dccarbon.linprog import LpStatus, solve
from dccarbon.model import UncertaintyBounds, advance_state
from dccarbon.online import (OnlinePolicy, compute_drift_bound, drift_term, lyapunov_value,
                             online_lp, online_objective, online_step, virtual_queues)
from dccarbon.scenario import default_config, default_spec, estimate_bounds, generate
from dccarbon.sim import count_state_violations, metrics, simulate
from dccarbon.tuning import tune
from test_baselines import brute_force_offline, series
from test_linprog import grid_min, grid_tolerance, random_box_lp

SEEDS = (0, 1, 2, 3, 4)
N_SLOTS, N_TRAIN = 10_000, 1_000
TOL = 1e-9


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'}: {detail}")


def split(seed):
    s = generate(default_spec(), seed, N_SLOTS)
    return s[:N_TRAIN], s[N_TRAIN:]


@pytest.fixture(scope="module")
def seed_runs():
    """Tune on the first 1,000 slots of each seed and run the policy on the other 9,000."""
    cfg = default_config()
    out = {}
    for seed in SEEDS:
        train, evals = split(seed)
        rep = tune(cfg, train)
        trace = simulate(OnlinePolicy(cfg, rep.params), evals, cfg, params=rep.params,
                         bounds=rep.bounds, on_infeasible="record", label="Proposed")
        out[seed] = (rep, trace, metrics(trace, bounds=rep.bounds))
    return out


@pytest.fixture(scope="module")
def comparison(seed_runs):
    rep, _, _ = seed_runs[0]
    _, evals = split(0)
    rows = compare(default_config(), evals, rep.params, rep.bounds)
    return {r.variant: r.report for r in rows}


def test_criterion_1_feasibility(seed_runs, capsys):
    counts = {}
    for seed, (_, trace, m) in seed_runs.items():
        counts[seed] = (m.violation_count, count_state_violations(trace, TOL))
    ok = all(a == 0 and b == 0 for a, b in counts.values()) and len(counts) >= 5
    report(capsys, 1, ok, f"violations per seed (decision check, state recheck) {counts}")
    assert ok


def test_criterion_2_emission_cap(seed_runs, capsys):
    cap = default_config().emission_cap
    rows = []
    ok = True
    for seed, (_, _, m) in seed_runs.items():
        delta = m.max_emission_vq / m.n_slots
        rows.append(f"seed {seed}: {m.avg_emission_rate:.5f} <= {cap + delta:.5f}")
        ok &= m.avg_emission_rate <= cap + delta
    report(capsys, 2, ok, "; ".join(rows))
    assert ok


def test_criterion_3_method_ordering(comparison, capsys):
    cap = default_config().emission_cap
    p, c1, c2 = comparison[Variant.PROPOSED], comparison[Variant.C1], comparison[Variant.C2]

    def gap(lo, hi):
        return hi.avg_cost_rate - lo.avg_cost_rate - 2 * np.hypot(lo.cost_se, hi.cost_se)

    checks = {"C1 < Proposed": bool(gap(c1, p) > 0), "Proposed < C2": bool(gap(p, c2) > 0)}
    for v in (Variant.C3, Variant.C4, Variant.C5):
        r = comparison[v]
        checks[f"{v.value} emission > cap"] = bool(r.avg_emission_rate - 2 * r.emission_se > cap)
    ok = all(checks.values())
    table = ", ".join(f"{r.label}: cost {r.avg_cost_rate:.2f} (se {r.cost_se:.2f}) "
                      f"emission {r.avg_emission_rate:.4f}" for r in comparison.values())
    report(capsys, 3, ok, f"{checks}; {table}")
    assert ok


def test_criterion_4_gap_bound(comparison, seed_runs, capsys):
    p, c1 = comparison[Variant.PROPOSED], comparison[Variant.C1]
    rep = seed_runs[0][0]
    B = compute_drift_bound(default_config(), rep.bounds)
    V = rep.params.penalty_weight
    rhs = c1.avg_cost_rate + B / V + 3 * p.cost_se
    ok = p.avg_cost_rate <= rhs
    report(capsys, 4, ok, f"cost {p.avg_cost_rate:.3f} <= C1 {c1.avg_cost_rate:.3f} + B/V "
                          f"{B / V:.3f} + 3 se {3 * p.cost_se:.3f} = {rhs:.3f}")
    assert ok


def test_criterion_5_closed_form_matches_lp(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(1000):
        cfg = default_config() if k % 2 else random_config(rng, int(rng.integers(1, 4)),
                                                           int(rng.integers(1, 4)))
        st0, s, p = random_state(rng, cfg), random_sample(rng, cfg), random_params(rng, cfg)
        lp, const = online_lp(st0, s, p, cfg)
        sol = solve(lp, "simplex")
        assert sol.status is LpStatus.OPTIMAL
        mine = online_objective(st0, s, online_step(st0, s, p, cfg), p, cfg)
        worst = max(worst, abs(mine - (sol.objective + const)))
    ok = worst <= 1e-6
    report(capsys, 5, ok, f"max |closed form - LP| over 1000 triples = {worst:.3e}")
    assert ok


def test_criterion_6_drift_bound(seed_runs, capsys):
    cfg = default_config()
    rep = seed_runs[0][0]
    samples = generate(default_spec(), 77, 1000)
    bounds = estimate_bounds(samples, 0.0)
    B = compute_drift_bound(cfg, bounds)
    trace = simulate(OnlinePolicy(cfg, rep.params), samples, cfg, params=rep.params)
    ok_sim = trace.drift <= trace.drift_linear + B + 1e-9
    # a second run with random offsets on a random system, checked slot by slot
    rng = np.random.default_rng(5)
    rcfg = random_config(rng)
    rb = UncertaintyBounds(np.full(2, 5.0), np.full(3, -1.0), np.zeros(3), np.full(3, -20.0),
                           np.full(3, 100.0), np.zeros(3), np.full(3, 0.8))
    rB = compute_drift_bound(rcfg, rb)
    params = random_params(rng, rcfg)
    state = random_state(rng, rcfg, emission_vq=0.0)
    ok_rand = []
    for _ in range(1000):
        s = random_sample(rng, rcfg)
        d = online_step(state, s, params, rcfg)
        nxt = advance_state(state, s, d, rcfg)
        delta = lyapunov_value(virtual_queues(nxt, params)) - lyapunov_value(
            virtual_queues(state, params))
        ok_rand.append(delta <= drift_term(virtual_queues(state, params), s, d, rcfg) + rB + 1e-9)
        state = nxt
    ok = bool(ok_sim.all()) and all(ok_rand)
    report(capsys, 6, ok, f"scenario run {ok_sim.mean():.1%} of 1000 slots, random run "
                          f"{np.mean(ok_rand):.1%} of 1000 slots satisfy drift <= I + B")
    assert ok


def test_criterion_7_tuning_converges(seed_runs, capsys):
    its = {seed: (rep.converged, rep.iterations) for seed, (rep, _, _) in seed_runs.items()}
    ok = its[0][0] and its[0][1] <= 15
    report(capsys, 7, ok, f"default scenario: converged={its[0][0]} after {its[0][1]} "
                          f"iterations, Q^E = {seed_runs[0][0].params.emission_queue_cap:.4f}; "
                          f"other seeds {its}")
    assert ok


def test_criterion_8_sweeps(capsys):
    train, evals = split(0)
    cfg = default_config()
    qe = sweep("qe", [15.0, 20.0, 25.0, 30.0, 35.0], cfg, train, evals)
    ce = sweep("ce", [1.1, 1.2, 1.3, 1.4, 1.5], cfg, train, evals)
    all_ok = all(p.status == "ok" and p.report.violation_count == 0 for p in qe + ce)
    cost_q = [p.report.avg_cost_rate for p in qe]
    em_q = [p.report.avg_emission_rate for p in qe]
    cost_c = [p.report.avg_cost_rate for p in ce]
    checks = {
        "cost up in Q^E": monotone_within_noise(cost_q, [p.report.cost_se for p in qe], True),
        "emission down in Q^E": monotone_within_noise(em_q, [p.report.emission_se for p in qe],
                                                      False),
        "cost down in C^E": monotone_within_noise(cost_c, [p.report.cost_se for p in ce], False),
    }
    ok = all_ok and all(checks.values())
    report(capsys, 8, ok, f"{checks}; Q^E cost {np.round(cost_q, 2).tolist()} emission "
                          f"{np.round(em_q, 4).tolist()}; C^E cost {np.round(cost_c, 2).tolist()}")
    assert ok


def test_criterion_9_offline_and_lp_oracles(capsys):
    cfg = tiny_config(emission_cap=0.5)
    s = series([1.0, 1.0], [0.0, 0.0], [-3.0, -5.0], [1.0, 1.0])
    offline = []
    for bound in (True, False):
        plan = offline_solve(cfg, s, BaselineCaps(), with_emission_bound=bound)
        offline.append(abs(plan.objective - brute_force_offline(cfg, s, bound)) <= 1e-6)
    lp_ok = []
    for seed in range(25):
        rng = np.random.default_rng(1000 + seed)
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        lp, center = random_box_lp(rng, n, m)
        k = {1: 2001, 2: 301, 3: 61, 4: 21, 5: 13}[n]
        sol = solve(lp, "simplex")
        best = grid_min(lp, k)
        lp_ok.append(sol.objective <= best + 1e-9
                     and best - sol.objective <= grid_tolerance(lp, sol.x, center, k))
    ok = all(offline) and all(lp_ok)
    report(capsys, 9, ok, f"offline T=2 matches grid {offline}; simplex within grid resolution "
                          f"on {sum(lp_ok)}/{len(lp_ok)} random LPs")
    assert ok


def test_criterion_10_cli_determinism(tmp_path, capsys):
    digests = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        assert main(["tune", "--seed", "0", "--out", str(d / "params.json")]) == 0
        assert main(["run", "--seed", "0", "--params", str(d / "params.json"),
                     "--out", str(d / "run")]) == 0
        digests.append(tuple(hashlib.sha256(p.read_bytes()).hexdigest()
                             for p in (d / "params.json", d / "run" / "trace.csv")))
    ok = digests[0] == digests[1]
    report(capsys, 10, ok, f"params/trace sha256 {digests[0][0][:12]}/{digests[0][1][:12]} vs "
                           f"{digests[1][0][:12]}/{digests[1][1][:12]}")
    assert ok

