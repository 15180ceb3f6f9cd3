"""Sweep the emission-queue level and the emission cap for the online policy.

    python scripts/run_sweeps.py --out results/sweeps
"""

import argparse
from pathlib import Path

from dccarbon.experiments import monotone_within_noise, save_sweep, sweep
from dccarbon.scenario import (DEFAULT_HORIZON, DEFAULT_TRAIN_SLOTS, default_config, default_spec,
                               generate)


def parse_values(text):
    return [float(v) for v in text.split(",")]


def show(axis, points):
    print(f"\n{axis:>6s} {'status':>7s} {'V':>9s} {'cost':>9s} {'se':>6s} {'emission':>9s} {'se':>7s}")
    for p in points:
        if p.status != "ok":
            print(f"{p.value:6.3g} {p.status:>7s}  {p.error[:60]}")
            continue
        r = p.report
        print(f"{p.value:6.3g} {p.status:>7s} {p.params.penalty_weight:9.4f} "
              f"{r.avg_cost_rate:9.2f} {r.cost_se:6.2f} {r.avg_emission_rate:9.4f} "
              f"{r.emission_se:7.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--qe", type=parse_values, default=[5, 10, 15, 20, 25, 30, 35])
    ap.add_argument("--ce", type=parse_values, default=[1.1, 1.2, 1.3, 1.4, 1.5])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/sweeps")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    samples = generate(default_spec(), args.seed, DEFAULT_HORIZON)
    train, evals = samples[:DEFAULT_TRAIN_SLOTS], samples[DEFAULT_TRAIN_SLOTS:]
    cfg = default_config()

    qe = sweep("qe", args.qe, cfg, train, evals, jobs=args.jobs)
    save_sweep(qe, out / "sweep_qe.csv", "qe")
    show("Q^E", qe)
    ce = sweep("ce", args.ce, cfg, train, evals, jobs=args.jobs)
    save_sweep(ce, out / "sweep_ce.csv", "ce")
    show("C^E", ce)

    ok = [p for p in qe if p.status == "ok"]
    okc = [p for p in ce if p.status == "ok"]
    print("\ncost rises with Q^E:",
          monotone_within_noise([p.report.avg_cost_rate for p in ok],
                                [p.report.cost_se for p in ok], True))
    print("emission falls with Q^E:",
          monotone_within_noise([p.report.avg_emission_rate for p in ok],
                                [p.report.emission_se for p in ok], False))
    print("cost falls with C^E:",
          monotone_within_noise([p.report.avg_cost_rate for p in okc],
                                [p.report.cost_se for p in okc], False))


if __name__ == "__main__":
    main()
