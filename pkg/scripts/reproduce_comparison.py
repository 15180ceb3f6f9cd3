"""Tune the online policy and compare it with the five baselines on one seed.

Writes params.json, tuning_history.csv, comparison.csv and comparison.json to --out.

    python scripts/reproduce_comparison.py --seed 0 --out results/seed0
"""

import argparse
import time
from pathlib import Path

from dccarbon.experiments import compare, save_comparison
from dccarbon.scenario import (DEFAULT_HORIZON, DEFAULT_TRAIN_SLOTS, default_config, default_spec,
                               generate)
from dccarbon.tuning import tune


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--emission-cap", type=float, default=1.2)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/comparison")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = default_config(args.emission_cap)
    samples = generate(default_spec(), args.seed, DEFAULT_HORIZON)
    train, evals = samples[:DEFAULT_TRAIN_SLOTS], samples[DEFAULT_TRAIN_SLOTS:]

    t0 = time.perf_counter()
    rep = tune(cfg, train)
    rep.save(out / "params.json")
    rep.save_history_csv(out / "tuning_history.csv")
    print(f"tuned in {time.perf_counter() - t0:.1f} s: {rep.iterations} iterations, "
          f"V = {rep.params.penalty_weight:.5g}, Q^E = {rep.params.emission_queue_cap:.4f}")

    t0 = time.perf_counter()
    rows = compare(cfg, evals, rep.params, rep.bounds, jobs=args.jobs)
    save_comparison(rows, out / "comparison.csv", out / "comparison.json")
    print(f"compared {len(rows)} methods in {time.perf_counter() - t0:.1f} s\n")
    print(f"{'method':24s} {'cost $/slot':>12s} {'se':>6s} {'tCO2/slot':>10s} {'viol':>5s}")
    for r in rows:
        m = r.report
        flag = " > cap" if m.emission_exceeds_cap else ""
        print(f"{m.label:24s} {m.avg_cost_rate:12.2f} {m.cost_se:6.2f} "
              f"{m.avg_emission_rate:10.4f} {m.violation_count:5d}{flag}")


if __name__ == "__main__":
    main()
