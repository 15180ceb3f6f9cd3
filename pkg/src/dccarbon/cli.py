"""Command-line entry point.

Configuration precedence: command-line flag > ``--config`` file > built-in default.
All randomness comes from ``--seed``; identical invocations write identical files.
When ``--data`` is omitted, the scenario is generated in memory from ``--spec``
(or the built-in scenario) with ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .baselines import BaselineCaps, BaselineInfeasibleError, Variant, run_variant
from .experiments import compare, save_comparison, save_sweep, sweep
from .model import SystemConfig, UncertaintyBounds, check_assumptions
from .online import StrategyParams
from .scenario import (DEFAULT_HORIZON, DEFAULT_TRAIN_SLOTS, ScenarioFormatError, ScenarioSpec,
                       default_config, default_spec, estimate_bounds, generate, load_csv, save_csv)
from .sim import InfeasibleDecisionError, metrics
from .tuning import InfeasibleParamsError, tune


class CliError(Exception):
    pass


def _load_config(args) -> SystemConfig:
    cfg = SystemConfig.load(args.config) if args.config else default_config()
    if getattr(args, "emission_cap", None) is not None:
        cfg = cfg.replace(emission_cap=args.emission_cap)
    return cfg


def _load_spec(args) -> ScenarioSpec:
    return ScenarioSpec.load(args.spec) if getattr(args, "spec", None) else default_spec()


def _load_data(args):
    if args.data:
        return load_csv(args.data)
    return generate(_load_spec(args), args.seed, args.slots)


def _split(args, samples):
    n = args.train_slots
    if not 0 < n < len(samples):
        raise CliError(f"--train-slots must lie in [1, {len(samples) - 1}] for "
                       f"{len(samples)} slots, got {n}")
    return samples[:n], samples[n:]


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------- commands

def cmd_init(args) -> int:
    out = _out_dir(args.out)
    default_config().save(out / "config.json")
    default_spec().save(out / "scenario.json")
    print(f"wrote {out / 'config.json'} and {out / 'scenario.json'}")
    return 0


def cmd_generate(args) -> int:
    if args.slots < 1:
        raise CliError("--slots must be at least 1")
    samples = generate(_load_spec(args), args.seed, args.slots)
    save_csv(args.out, samples)
    print(f"wrote {len(samples)} slots to {args.out}")
    return 0


def cmd_tune(args) -> int:
    config = _load_config(args)
    train, _ = _split(args, _load_data(args))
    rep = tune(config, train, max_iter=args.max_iter, margin=args.margin)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rep.save(out)
    if args.history:
        rep.save_history_csv(args.history)
    state = "converged" if rep.converged else "did not converge"
    print(f"tuning {state} after {rep.iterations} iterations: V = {rep.params.penalty_weight:.6g}, "
          f"Q^E = {rep.params.emission_queue_cap:.6g}; wrote {out}")
    return 0


def _params_and_bounds(args, config, train):
    bounds = estimate_bounds(train)
    params = None
    if args.params:
        doc = json.loads(Path(args.params).read_text())
        params = StrategyParams.from_json_dict(doc.get("params", doc))
        if doc.get("bounds"):
            bounds = UncertaintyBounds.from_json_dict(doc["bounds"])
    return params, bounds


def cmd_run(args) -> int:
    config = _load_config(args)
    train, evals = _split(args, _load_data(args))
    params, bounds = _params_and_bounds(args, config, train)
    variant = Variant.parse(args.variant)
    if variant is Variant.PROPOSED and params is None:
        raise CliError("the proposed policy needs --params (run `tune` first)")
    trace = run_variant(variant, config, evals, params=params, bounds=bounds,
                        caps=BaselineCaps(args.front_cap, args.back_cap),
                        on_infeasible=args.on_infeasible)
    out = _out_dir(args.out)
    report = metrics(trace, bounds=bounds)
    report.save(out / "report.json")
    trace.to_csv(out / "trace.csv")
    print(f"{report.label}: cost rate {report.avg_cost_rate:.4f} $/slot, emission rate "
          f"{report.avg_emission_rate:.4f} tCO2/slot, {report.violation_count} violations; "
          f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    config = _load_config(args)
    train, evals = _split(args, _load_data(args))
    params, bounds = _params_and_bounds(args, config, train)
    variants = [Variant.parse(v) for v in args.variants.split(",")]
    if Variant.PROPOSED in variants and params is None:
        raise CliError("the proposed policy needs --params (run `tune` first)")
    rows = compare(config, evals, params, bounds, variants,
                   BaselineCaps(args.front_cap, args.back_cap), jobs=args.jobs)
    out = _out_dir(args.out)
    save_comparison(rows, out / "comparison.csv", out / "comparison.json")
    for r in rows:
        print(f"{r.report.label:24s} cost {r.report.avg_cost_rate:10.3f}  "
              f"emission {r.report.avg_emission_rate:7.4f}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args)
    train, evals = _split(args, _load_data(args))
    values = [float(v) for v in args.values.split(",")]
    points = sweep(args.axis, values, config, train, evals, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_sweep(points, out, args.axis)
    n_bad = sum(p.status != "ok" for p in points)
    print(f"wrote {len(points)} sweep points to {out} ({n_bad} failed)")
    return 0


def cmd_check(args) -> int:
    config = _load_config(args)
    train, _ = _split(args, _load_data(args))
    problems = check_assumptions(config, estimate_bounds(train))
    for p in problems:
        print(p)
    if not problems:
        print("all structural assumptions hold")
    return 1 if problems else 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dccarbon",
        description="Online low-carbon workload and energy scheduling for distributed data centers.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_flags(p, train=True):
        p.add_argument("--config", help="system config JSON (default: built-in case study)")
        p.add_argument("--emission-cap", type=float, help="override the emission cap, tCO2/slot")
        p.add_argument("--data", help="scenario CSV; generated from --spec/--seed when omitted")
        p.add_argument("--spec", help="scenario spec JSON used when --data is omitted")
        p.add_argument("--seed", type=int, default=0, help="seed for in-memory generation")
        p.add_argument("--slots", type=int, default=DEFAULT_HORIZON,
                       help="slots to generate when --data is omitted")
        if train:
            p.add_argument("--train-slots", type=int, default=DEFAULT_TRAIN_SLOTS,
                           help="leading slots used for tuning; the rest are evaluated")

    def cap_flags(p):
        p.add_argument("--front-cap", type=float, default=90.0, help="front queue cap for baselines")
        p.add_argument("--back-cap", type=float, default=70.0, help="back queue cap for baselines")

    p = sub.add_parser("init", help="write the default config and scenario spec")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("generate", help="draw a scenario CSV")
    p.add_argument("--spec", help="scenario spec JSON (default: built-in)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--slots", type=int, default=DEFAULT_HORIZON, help="number of slots")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tune", help="tune strategy parameters on the training slots")
    data_flags(p)
    p.add_argument("--max-iter", type=int, default=50, help="iteration limit")
    p.add_argument("--margin", type=float, default=0.0, help="slack added to every condition")
    p.add_argument("--history", help="optional CSV of the iteration history")
    p.add_argument("--out", required=True, help="output params JSON")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("run", help="simulate one variant on the evaluation slots")
    data_flags(p)
    cap_flags(p)
    p.add_argument("--params", help="params JSON from `tune`")
    p.add_argument("--variant", default="proposed",
                   help=f"one of {', '.join(v.value for v in Variant)}")
    p.add_argument("--on-infeasible", choices=("raise", "record"), default="raise",
                   help="abort or record when a policy breaks a bound")
    p.add_argument("--out", required=True, help="output directory (report.json, trace.csv)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="evaluate several variants side by side")
    data_flags(p)
    cap_flags(p)
    p.add_argument("--params", help="params JSON from `tune`")
    p.add_argument("--variants", default=",".join(v.value for v in Variant),
                   help="comma-separated variant names")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="sweep the emission-queue level or the emission cap")
    data_flags(p)
    p.add_argument("--axis", choices=("qe", "ce"), required=True, help="swept quantity")
    p.add_argument("--values", required=True, help="comma-separated increasing values")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="check the structural assumptions against the data")
    data_flags(p)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleParamsError as exc:
        print(f"error: tuning failed, the parameter feasibility conditions have no solution: "
              f"{exc}", file=sys.stderr)
    except (CliError, ScenarioFormatError, ValueError, KeyError, OSError,
            BaselineInfeasibleError, InfeasibleDecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
