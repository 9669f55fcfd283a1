"""``ksb`` command-line entry point.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 bound violation.
"""

import argparse
import dataclasses
import json
import logging
from pathlib import Path
import sys

from .errors import BoundViolation, ConfigError, SolverError
from .experiment import (ExperimentConfig, bounds_csv, format_table, run_bounds,
                         run_experiment, run_rademacher, run_verify)
from .synth_data import generate_mixture, read_dataset_csv, write_dataset_csv

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3

log = logging.getLogger("kernel_sum_bounds")


def _load_config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if getattr(args, "mode", None):
        changes["mode"] = args.mode
    if getattr(args, "seed", None) is not None:
        if args.command == "verify":
            changes["verify_seed"] = args.seed
        elif args.command == "rademacher":
            changes["mc_seed"] = args.seed
            changes["mixture"] = dataclasses.replace(cfg.mixture, seed=args.seed)
        else:
            changes["mixture"] = dataclasses.replace(cfg.mixture, seed=args.seed)
    if getattr(args, "out_dir", None):
        changes["out_dir"] = args.out_dir
    if getattr(args, "samples", None) is not None:
        changes["mc_samples"] = args.samples
    if getattr(args, "instances", None) is not None:
        changes["verify_instances"] = args.instances
    # re-run validation on the merged settings
    return ExperimentConfig.from_dict({**cfg.to_dict(), **_plain(changes)})


def _plain(changes):
    return {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in changes.items()}


def _write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_gen_data(args):
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dataset.csv"
    write_dataset_csv(generate_mixture(cfg.mixture), path)
    print(path)
    return EXIT_OK


def cmd_experiment(args):
    cfg = _load_config(args)
    data = read_dataset_csv(args.data) if args.data else None
    result = run_experiment(cfg, data=data, out_dir=cfg.out_dir)
    sys.stdout.write(result.csv_text)
    rep = result.report
    print(f"all q_t <= B^2 = {cfg.B_squared:g}: {rep['all_q_within_B_squared']}")
    print(f"empirical dominated by plotted curves: {rep['dominated_by_plotted_curves']}")
    print(f"wrote {Path(cfg.out_dir) / 'experiment.csv'}, experiment.svg, "
          f"experiment-report.json")
    if not rep["dominated_by_rigorous_bounds"]:
        log.error("empirical curve exceeds the rigorous bound at some prefix")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_config(args)
    report = run_verify(cfg)
    path = Path(cfg.out_dir) / "verify-report.json"
    _write_json(path, report)
    total = len(report["instances"])
    bad = len(report["failures"])
    print(f"{total - bad}/{total} instances passed ({cfg.mode} mode); report: {path}")
    return EXIT_OK if report["passed"] else EXIT_VIOLATION


def cmd_bounds(args):
    rows = run_bounds(args.B, args.R, args.n, args.m)
    sys.stdout.write(format_table(rows))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(bounds_csv(rows))
    return EXIT_OK


def cmd_rademacher(args):
    cfg = _load_config(args)
    out = run_rademacher(cfg)
    print(json.dumps(out, indent=2))
    checks = [out["jensen"]["holds"]] + [m["holds"] for m in out["moments_first_kernel"]]
    if "subset_chain" in out:
        checks.append(out["subset_chain"]["holds"])
    return EXIT_OK if all(checks) else EXIT_VIOLATION


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ksb", description="SVM quadratic-form and Rademacher bounds for sums of kernels")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode=True):
        p.add_argument("--config", help="JSON experiment config (default: built-in)")
        p.add_argument("--seed", type=int, help="override the relevant seed")
        p.add_argument("--out-dir", help="output directory (default from config)")
        if mode:
            p.add_argument("--mode", choices=["hard", "slack"], help="solver mode")

    p = sub.add_parser("gen-data", help="write the synthetic dataset as CSV")
    common(p, mode=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("experiment", help="prefix-sum experiment: CSV, SVG and report")
    common(p)
    p.add_argument("--data", help="read the dataset from this CSV instead of generating it")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="check the bounds on seeded random instances")
    common(p)
    p.add_argument("--instances", type=int, help="number of random instances")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="closed-form Rademacher bound table")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rademacher", help="Monte-Carlo checks on the experiment data")
    common(p)
    p.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    p.set_defaults(func=cmd_rademacher)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except BoundViolation as exc:
        log.error("bound violation: %s", exc)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
