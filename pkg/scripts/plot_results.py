"""Figures from the CSVs written by the other scripts (needs matplotlib).

    python scripts/plot_results.py --comparison results/comparison --sweeps results/sweeps \
        --out results/figures
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_history(rows, out):
    it = [int(r["iteration"]) for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(it, [float(r["emission_queue_cap"]) for r in rows], "o-", label="Q^E used")
    ax.plot(it, [float(r["max_emission_vq"]) for r in rows], "s--", label="simulated peak")
    ax.set_xlabel("iteration")
    ax.set_ylabel("emission queue")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "tuning_history.png", dpi=150)


def plot_comparison(rows, out):
    names = [r["variant"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    axes[0].bar(names, [float(r["cost_rate_usd_per_slot"]) for r in rows],
                yerr=[2 * float(r["cost_se"]) for r in rows])
    axes[0].set_ylabel("cost ($/slot)")
    axes[1].bar(names, [float(r["emission_rate_tCO2_per_slot"]) for r in rows])
    axes[1].set_ylabel("emission (tCO2/slot)")
    fig.tight_layout()
    fig.savefig(out / "comparison.png", dpi=150)


def plot_sweep(rows, axis, out):
    ok = [r for r in rows if r["status"] == "ok"]
    x = [float(r[axis]) for r in ok]
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.errorbar(x, [float(r["cost_rate_usd_per_slot"]) for r in ok],
                yerr=[2 * float(r["cost_se"]) for r in ok], fmt="o-", color="C0")
    ax.set_xlabel({"qe": "Q^E", "ce": "C^E (tCO2/slot)"}[axis])
    ax.set_ylabel("cost ($/slot)", color="C0")
    ax2 = ax.twinx()
    ax2.plot(x, [float(r["emission_rate_tCO2_per_slot"]) for r in ok], "s--", color="C1")
    ax2.set_ylabel("emission (tCO2/slot)", color="C1")
    fig.tight_layout()
    fig.savefig(out / f"sweep_{axis}.png", dpi=150)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--comparison", default="results/comparison")
    ap.add_argument("--sweeps", default="results/sweeps")
    ap.add_argument("--out", default="results/figures")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cmp_dir, sw_dir = Path(args.comparison), Path(args.sweeps)
    if (cmp_dir / "tuning_history.csv").exists():
        plot_history(read(cmp_dir / "tuning_history.csv"), out)
    if (cmp_dir / "comparison.csv").exists():
        plot_comparison(read(cmp_dir / "comparison.csv"), out)
    for axis in ("qe", "ce"):
        path = sw_dir / f"sweep_{axis}.csv"
        if path.exists():
            plot_sweep(read(path), axis, out)
    print(f"figures written to {out}")


if __name__ == "__main__":
    main()
