"""Experiment reproduction, randomized bound verification and bound tables."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from . import bounds
from .bounds import (SLACK_C, many_kernel_bounds, rademacher_sum_bound,
                     rademacher_sum_bound_BR, scale_max, scale_sum, subset_bound,
                     verify_sum_bound)
from .errors import BoundViolation, ConfigError
from .kernels import Dataset, KernelSpec, labeled_gram, radius_squared, sum_matrices, trace
from .prng import Xoshiro256pp, substream_seed
from .qp_solver import DEFAULT_TOL, solution_from_alpha, solve_dual_hard, solve_dual_slack
from .rademacher_mc import (DEFAULT_SAMPLES, estimate_sqrt_form, moment_check,
                            subset_chain_check)
from .svg import line_plot
from .synth_data import MixtureConfig, generate_mixture

log = logging.getLogger(__name__)

DEFAULT_B_SQUARED = 320.0
CSV_HEADER = "m,empirical,curve_sum,curve_max"


def default_kernels(d):
    """5 rbf (bandwidths {8, 4, 2, 1, 0.5} * sqrt(d), widest first), linear,
    polynomial, cosine."""
    root = math.sqrt(d)
    return ([KernelSpec.rbf(s * root) for s in (8.0, 4.0, 2.0, 1.0, 0.5)]
            + [KernelSpec.linear(), KernelSpec.polynomial(2, 1.0), KernelSpec.cosine()])


@dataclass
class ExperimentConfig:
    mixture: MixtureConfig = field(default_factory=MixtureConfig)
    kernels: list = None
    permutation: list = None
    mode: str = "hard"
    C: float = SLACK_C
    B_squared: float = DEFAULT_B_SQUARED
    tol: float = DEFAULT_TOL
    max_sweeps: int | None = None
    mc_samples: int = DEFAULT_SAMPLES
    mc_seed: int = 0
    verify_instances: int = 100
    verify_seed: int = 0
    verify_max_sweeps: int = 200_000
    check_bounds: bool = True
    out_dir: str = "out"

    def __post_init__(self):
        if self.kernels is None:
            self.kernels = default_kernels(self.mixture.d)
        self.kernels = [k if isinstance(k, KernelSpec) else KernelSpec.from_dict(k)
                        for k in self.kernels]
        m = len(self.kernels)
        if m < 1:
            raise ConfigError("need at least one kernel")
        if self.permutation is None:
            self.permutation = list(range(1, m + 1))
        self.permutation = [int(p) for p in self.permutation]
        if sorted(self.permutation) != list(range(1, m + 1)):
            raise ConfigError(f"permutation must be a permutation of 1..{m}")
        if self.mode not in ("hard", "slack"):
            raise ConfigError(f"mode must be 'hard' or 'slack', got {self.mode!r}")
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if self.mode == "slack" and self.check_bounds and self.C != SLACK_C:
            raise ConfigError(f"slack-mode bound checks require C = {SLACK_C}")
        if not self.B_squared >= 0:
            raise ConfigError("B_squared must be nonnegative")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.mc_samples < 1 or self.verify_instances < 0:
            raise ConfigError("mc_samples must be >= 1 and verify_instances >= 0")

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        try:
            if "mixture" in obj:
                obj["mixture"] = MixtureConfig.from_dict(obj["mixture"])
            if obj.get("kernels") is not None:
                obj["kernels"] = [KernelSpec.from_dict(k) for k in obj["kernels"]]
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(obj)

    def to_dict(self):
        return {
            "mixture": self.mixture.to_dict(),
            "kernels": [k.to_dict() for k in self.kernels],
            "permutation": list(self.permutation),
            "mode": self.mode,
            "C": self.C,
            "B_squared": self.B_squared,
            "tol": self.tol,
            "max_sweeps": self.max_sweeps,
            "mc_samples": self.mc_samples,
            "mc_seed": self.mc_seed,
            "verify_instances": self.verify_instances,
            "verify_seed": self.verify_seed,
            "verify_max_sweeps": self.verify_max_sweeps,
            "check_bounds": self.check_bounds,
            "out_dir": self.out_dir,
        }


def thread_count():
    env = os.environ.get("KSB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"KSB_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _solver(cfg, max_sweeps=None):
    sweeps = cfg.max_sweeps if max_sweeps is None else max_sweeps
    if cfg.mode == "hard":
        return lambda K: solve_dual_hard(K, tol=cfg.tol, max_sweeps=sweeps)
    return lambda K: solve_dual_slack(K, cfg.C, tol=cfg.tol, max_sweeps=sweeps)


def _fmt(v):
    return format(float(v), ".17g")


@dataclass
class ExperimentResult:
    rows: list
    csv_text: str
    svg_text: str
    report: dict


def run_experiment(cfg, data=None, out_dir=None):
    """Prefix-sum experiment over the configured kernels.

    Kernels are reordered by ``cfg.permutation``; for every prefix size ``j``
    the dual is solved on the sum of the first ``j`` labeled matrices.
    ``curve_sum`` and ``curve_max`` are the plotted (un-tripled) curves; the
    report also carries the rigorous bounds with the factor 3 at
    non-powers of two.
    """
    if data is None:
        data = generate_mixture(cfg.mixture)
    specs = [cfg.kernels[p - 1] for p in cfg.permutation]
    mats = [labeled_gram(s, data) for s in specs]
    prefixes = []
    running = None
    for M in mats:
        running = M.copy() if running is None else running + M
        prefixes.append(running)
    solve = _solver(cfg)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        base = list(pool.map(solve, mats))
        prefix_sols = list(pool.map(solve, prefixes))

    qs = [s.quad_form for s in base]
    rows = []
    for j, sol in enumerate(prefix_sols, start=1):
        rows.append({
            "m": j,
            "empirical": sol.quad_form,
            "curve_sum": scale_sum(math.fsum(qs[:j]), j),
            "curve_max": scale_max(cfg.B_squared, j),
        })
    csv_lines = [CSV_HEADER] + [
        f"{r['m']},{_fmt(r['empirical'])},{_fmt(r['curve_sum'])},{_fmt(r['curve_max'])}"
        for r in rows]
    csv_text = "\n".join(csv_lines) + "\n"

    rigorous = []
    for j in range(1, len(rows) + 1):
        b_sum, b_max = many_kernel_bounds(qs[:j])
        rigorous.append({"m": j, "bound_sum": b_sum,
                         "bound_max": many_kernel_bounds([cfg.B_squared] * j)[1]
                         if j > 1 else cfg.B_squared,
                         "bound_max_observed": b_max})
    warnings = [f"kernel {cfg.permutation[t]} ({specs[t].family}): "
                f"q = {q:.6g} exceeds B^2 = {cfg.B_squared:g}"
                for t, q in enumerate(qs) if q > cfg.B_squared]
    for w in warnings:
        log.warning(w)

    emp = [r["empirical"] for r in rows]
    report = {
        "n": data.n,
        "d": data.d,
        "mode": cfg.mode,
        "C": cfg.C if cfg.mode == "slack" else None,
        "permutation": list(cfg.permutation),
        "kernels": [s.to_dict() for s in specs],
        "per_kernel_quad": qs,
        "B_squared": cfg.B_squared,
        "all_q_within_B_squared": not warnings,
        "warnings": warnings,
        "rows": rows,
        "rigorous_bounds": rigorous,
        "dominated_by_plotted_curves": all(
            r["empirical"] <= r["curve_sum"] * (1 + 1e-12) and
            r["empirical"] <= r["curve_max"] * (1 + 1e-12) for r in rows),
        "dominated_by_rigorous_bounds": all(
            e <= rb["bound_sum"] * (1 + 1e-7) + 1e-7 for e, rb in zip(emp, rigorous)),
        "empirical_non_increasing": all(b <= a * (1 + 1e-9) for a, b in zip(emp, emp[1:])),
        "max_kkt_residual": max(s.kkt.max_violation for s in base + prefix_sols),
        "solver_sweeps": [s.iterations for s in base + prefix_sols],
    }
    svg_text = line_plot(
        [r["m"] for r in rows],
        [("empirical", "#1f77b4", emp),
         ("scaled-sum", "#8c564b", [r["curve_sum"] for r in rows]),
         ("scaled-max", "#d62728", [r["curve_max"] for r in rows])],
        title="alpha^T K alpha for prefix sums of kernels",
        xlabel="number of kernels m", ylabel="quadratic form")
    result = ExperimentResult(rows, csv_text, svg_text, report)
    if out_dir is not None:
        write_experiment(result, out_dir)
    return result


def write_experiment(result, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "experiment.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.csv_text)
    with open(out / "experiment.svg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.svg_text)
    with open(out / "experiment-report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.report, fh, indent=2)
        fh.write("\n")


# -- randomized verification -------------------------------------------------

def random_instance(seed, n_range=(5, 40), m_range=(2, 16), m=None):
    """Random separable dataset plus a random list of kernel specs.

    Labels come from a random hyperplane through the origin, with points
    closer than 0.2 to it redrawn, so every kernel used here (rbf, linear,
    cosine, polynomial with positive offset) gives a bounded hard dual.
    """
    rng = Xoshiro256pp(seed)
    n = n_range[0] + rng.randbelow(n_range[1] - n_range[0] + 1)
    if m is None:
        m = m_range[0] + rng.randbelow(m_range[1] - m_range[0] + 1)
    d = 2 + rng.randbelow(5)
    w = rng.normals(d)
    w /= np.linalg.norm(w)
    points = []
    while len(points) < n:
        x = 1.5 * rng.normals(d)
        if abs(float(x @ w)) >= 0.2:
            points.append(x)
    points = np.array(points)
    labels = np.where(points @ w > 0, 1.0, -1.0)
    specs = []
    for _ in range(m):
        family = ("rbf", "linear", "polynomial", "cosine")[rng.randbelow(4)]
        if family == "rbf":
            specs.append(KernelSpec.rbf(0.3 + 3.0 * rng.random()))
        elif family == "polynomial":
            specs.append(KernelSpec.polynomial(1 + rng.randbelow(3), 0.5 + 1.5 * rng.random()))
        elif family == "linear":
            specs.append(KernelSpec.linear())
        else:
            specs.append(KernelSpec.cosine())
    return Dataset(points, labels), specs


def scale_alpha(factor):
    """Corruption hook for :func:`run_verify` that rescales every base ``alpha``."""
    def corrupt(mats, solutions):
        return [solution_from_alpha(M, factor * s.alpha) for M, s in zip(mats, solutions)]
    return corrupt


def _instance_dump(data, specs):
    return {"points": data.points.tolist(), "labels": data.labels.tolist(),
            "kernels": [s.to_dict() for s in specs]}


def run_verify(cfg, instances=None, seed=None, corrupt=None, mc=True):
    """Check the kernel-sum bounds over seeded random instances.

    ``corrupt`` is a test hook: a callable ``corrupt(mats, solutions)``
    returning replacement base solutions before the bounds are checked
    (see :func:`scale_alpha`).
    Returns a JSON-ready report; ``report["passed"]`` is False if any check
    failed, and every failure carries a full instance dump.
    """
    instances = cfg.verify_instances if instances is None else instances
    seed = cfg.verify_seed if seed is None else seed
    # wide rbf bandwidths on small samples are badly conditioned, so the
    # sweep budget here is larger than the solver default
    solve = _solver(cfg, cfg.verify_max_sweeps)
    records = []
    failures = []
    for k in range(instances):
        inst_seed = substream_seed(seed, k)
        data, specs = random_instance(inst_seed)
        mats = [labeled_gram(s, data) for s in specs]
        checks = []
        record = {"instance": k, "seed": inst_seed, "n": data.n, "m": len(specs),
                  "checks": checks}
        solutions = [solve(M) for M in mats]
        if corrupt is not None:
            solutions = corrupt(mats, solutions)
        try:
            rep = verify_sum_bound(mats, mode=cfg.mode, C=cfg.C, tol=cfg.tol,
                                   max_sweeps=cfg.verify_max_sweeps, pairwise=True,
                                   solutions=solutions)
            violation = None
        except BoundViolation as exc:
            rep = None
            violation = str(exc)
            details = exc.details
        if rep is not None:
            details = rep.to_dict()
        checks.append({"name": "sum_form", "value": details["sum_quad"],
                       "bound": details["bound_sum"],
                       "slack": details["bound_sum"] - details["sum_quad"],
                       "holds": not bounds._exceeds(details["sum_quad"], details["bound_sum"])})
        checks.append({"name": "max_form", "value": details["sum_quad"],
                       "bound": details["bound_max"],
                       "slack": details["bound_max"] - details["sum_quad"],
                       "holds": not bounds._exceeds(details["sum_quad"], details["bound_max"])})
        pair_ok = all(p["holds"] for p in details["pair_checks"])
        checks.append({"name": "pairwise_two_kernel", "count": len(details["pair_checks"]),
                       "holds": pair_ok})
        if rep is None and not details["pair_checks"]:
            # the sum check raised before pairs were examined
            checks[-1]["holds"] = None
        record["max_kkt_residual"] = details["max_kkt_residual"]
        record["kkt_within_tol"] = details["max_kkt_residual"] <= cfg.tol
        if mc:
            total = sum_matrices(mats)
            est = estimate_sqrt_form(total, samples=min(cfg.mc_samples, 4000),
                                     seed=substream_seed(inst_seed, 1))
            jensen = math.sqrt(trace(total))
            checks.append({"name": "jensen_sqrt_trace", "value": est.mean,
                           "bound": jensen, "slack": jensen - est.mean,
                           "holds": est.mean <= jensen + 3 * est.std_error})
            chain = subset_chain_check(mats, samples=min(cfg.mc_samples, 4000),
                                       seed=substream_seed(inst_seed, 2))
            checks.append({"name": "subset_chain", "value": chain.estimate,
                           "bound": chain.bound, "slack": chain.bound - chain.estimate,
                           "holds": bool(chain.holds)})
        record["passed"] = (violation is None and record["kkt_within_tol"]
                            and all(c["holds"] is not False for c in checks))
        if not record["passed"]:
            record["violation"] = violation
            record["dump"] = _instance_dump(data, specs)
            failures.append(k)
        records.append(record)
    return {"mode": cfg.mode, "instances": records, "failures": failures,
            "passed": not failures}


# -- closed-form tables ------------------------------------------------------

def run_bounds(B, R, n, m):
    """Rows for kernel counts ``1..m``: baseline BR/sqrt(n), sum and subset bounds."""
    if B < 0 or R < 0 or n < 1 or m < 1:
        raise ConfigError("need B, R >= 0 and n, m >= 1")
    rows = []
    for k in range(1, m + 1):
        baseline = B * R / math.sqrt(n)
        s = rademacher_sum_bound_BR(B, R, n, k)
        sub = subset_bound(B, R, n, k)
        rows.append({"m": k, "baseline": baseline, "sum_bound": s, "subset_bound": sub,
                     "sum_over_baseline": s / baseline if baseline else math.nan,
                     "subset_over_sum": sub / s if s else math.nan})
    return rows


def format_table(rows):
    cols = ["m", "baseline", "sum_bound", "subset_bound", "sum_over_baseline",
            "subset_over_sum"]
    cells = [[str(r["m"])] + [f"{r[c]:.6g}" for c in cols[1:]] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def bounds_csv(rows):
    cols = ["m", "baseline", "sum_bound", "subset_bound", "sum_over_baseline",
            "subset_over_sum"]
    lines = [",".join(cols)]
    lines += [",".join([str(r["m"])] + [_fmt(r[c]) for c in cols[1:]]) for r in rows]
    return "\n".join(lines) + "\n"


# -- Monte-Carlo summary on the experiment data ------------------------------

def run_rademacher(cfg, data=None):
    """Closed-form Rademacher bounds and Monte-Carlo checks on the experiment data."""
    if data is None:
        data = generate_mixture(cfg.mixture)
    mats = [labeled_gram(s, data) for s in cfg.kernels]
    solve = _solver(cfg)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        sols = list(pool.map(solve, mats))
    qs = [s.quad_form for s in sols]
    traces = [trace(M) for M in mats]
    total = sum_matrices(mats)
    m = len(mats)
    r_sq = radius_squared(cfg.kernels, data)
    B = math.sqrt(max(qs))
    R = math.sqrt(r_sq)
    est = estimate_sqrt_form(total, samples=cfg.mc_samples, seed=cfg.mc_seed)
    moments = []
    for p in range(1, 6):
        chk = moment_check(mats[0], p, samples=cfg.mc_samples,
                           seed=substream_seed(cfg.mc_seed, p))
        moments.append({"p": p, "estimate": chk.estimate, "bound": chk.bound,
                        "holds": bool(chk.holds)})
    out = {
        "n": data.n, "m": m, "B": B, "R": R,
        "per_kernel_quad": qs, "traces": traces,
        "rademacher_sum_bound": rademacher_sum_bound(traces, qs, data.n),
        "rademacher_sum_bound_BR": rademacher_sum_bound_BR(B, R, data.n, m),
        "subset_bound": subset_bound(B, R, data.n, m),
        "single_kernel_baseline": B * R / math.sqrt(data.n),
        "jensen": {"estimate": est.mean, "std_error": est.std_error,
                   "sqrt_trace": math.sqrt(trace(total)),
                   "holds": est.mean <= math.sqrt(trace(total)) + 3 * est.std_error},
        "moments_first_kernel": moments,
    }
    if m >= 2:
        chain = subset_chain_check(mats, samples=cfg.mc_samples,
                                   seed=substream_seed(cfg.mc_seed, 99))
        out["subset_chain"] = {"estimate": chain.estimate, "bound": chain.bound,
                               "holds": bool(chain.holds)}
    return out
