"""Acceptance criteria 1 to 9, one test each (criterion 3 split into hard and slack).

Each test appends a PASS/FAIL line that is printed in the terminal summary.
"""

from fractions import Fraction
import math
from pathlib import Path
import time

import numpy as np
import pytest

from kernel_sum_bounds.bounds import (ETA0, many_kernel_bounds, rademacher_sum_bound,
                                      rademacher_sum_bound_BR, subset_bound,
                                      two_kernel_bounds)
from kernel_sum_bounds.experiment import ExperimentConfig, random_instance, run_experiment
from kernel_sum_bounds.kernels import labeled_gram, sum_matrices
from kernel_sum_bounds.prng import substream_seed
from kernel_sum_bounds.qp_solver import brute_force_dual, solve_dual_hard, solve_dual_slack
from kernel_sum_bounds.rademacher_mc import (estimate_sqrt_form, exact_sqrt_form,
                                             moment_check, subset_chain_check)

from conftest import ACCEPTANCE_LINES, random_labeled_pd, random_psd

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "eight-kernels.json"
PAIR_SWEEPS = 200_000


def record(name, ok, detail):
    line = f"criterion {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_l1_equals_quad_form():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        K = random_labeled_pd(rng, int(rng.integers(1, 51)))
        sol = solve_dual_hard(K)
        worst = max(worst, abs(sol.l1 - sol.quad_form) / (1 + sol.l1))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 30
    assert record("1", ok, f"max relative gap {worst:.2e}, {elapsed:.1f}s"), (worst, elapsed)


def test_criterion_2_brute_force_oracle():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        K = random_labeled_pd(rng, int(rng.integers(1, 13)))
        got = solve_dual_hard(K).objective
        ref = brute_force_dual(K).objective
        worst = max(worst, abs(got - ref) / abs(ref))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 60
    assert record("2", ok, f"max relative error {worst:.2e}, {elapsed:.1f}s"), (worst, elapsed)


def _pairs(count=100):
    for k in range(count):
        data, specs = random_instance(substream_seed(303, k), m=2)
        yield [labeled_gram(s, data) for s in specs]


def _pair_excess(solve):
    """Largest ``q_pair - bound`` over the pair suite (both bound forms)."""
    worst = -math.inf
    failures = 0
    for K1, K2 in _pairs():
        q1, q2 = solve(K1).quad_form, solve(K2).quad_form
        q12 = solve(K1 + K2).quad_form
        third, two_thirds = two_kernel_bounds(q1, q2)
        excess = max(q12 - third - 1e-7, q12 - two_thirds - 1e-7)
        worst = max(worst, excess)
        failures += excess > 0
    return worst, failures


def test_criterion_3a_two_kernels_hard():
    worst, failures = _pair_excess(lambda K: solve_dual_hard(K, max_sweeps=PAIR_SWEEPS))
    ok = failures == 0
    assert record("3a (hard)", ok, f"{failures}/100 violations, worst excess {worst:.2e}"), worst


def test_criterion_3b_two_kernels_slack():
    # the same suite with the l2-slack dual at C = 1/2
    worst, failures = _pair_excess(lambda K: solve_dual_slack(K, 0.5, max_sweeps=PAIR_SWEEPS))
    ok = failures == 0
    assert record("3b (slack C=1/2)", ok,
                  f"{failures}/100 violations, worst excess {worst:.2e}"), (failures, worst)


def test_criterion_4_many_kernels():
    worst_ratio = 0.0
    failures = 0
    for m in (2, 3, 4, 5, 8, 16):
        for k in range(20):
            data, specs = random_instance(substream_seed(404 + m, k), m=m)
            mats = [labeled_gram(s, data) for s in specs]
            qs = [solve_dual_hard(M, max_sweeps=PAIR_SWEEPS).quad_form for M in mats]
            q_sum = solve_dual_hard(sum_matrices(mats), max_sweeps=PAIR_SWEEPS).quad_form
            b_sum, b_max = many_kernel_bounds(qs)
            # the factor 3 at non-powers of two is applied inside many_kernel_bounds
            if m & (m - 1):
                assert b_sum == pytest.approx(3 * m ** -math.log2(3) * math.fsum(qs))
            for bound in (b_sum, b_max):
                worst_ratio = max(worst_ratio, q_sum / bound)
                failures += q_sum > bound * (1 + 1e-7)
    ok = failures == 0
    assert record("4", ok, f"{failures} violations, max q_sum/bound {worst_ratio:.4f}"), failures


def test_criterion_5_slack_identities():
    rng = np.random.default_rng(5)
    worst = 0.0
    exact = True
    for k in range(200):
        n = int(rng.integers(1, 41))
        K = random_labeled_pd(rng, n) if k % 4 else random_psd(rng, n, rank=max(1, n // 3))
        C = 0.5 if k % 2 else float(rng.uniform(0.05, 20))
        sol = solve_dual_slack(K, C)
        exact &= bool(np.array_equal(sol.xi, sol.alpha / C))
        gap = abs(sol.l1 - sol.quad_form - C * float(sol.xi @ sol.xi))
        worst = max(worst, gap)
    ok = exact and worst <= 1e-6
    assert record("5", ok, f"xi == alpha/C exactly: {exact}, max identity gap {worst:.2e}"), worst


def test_criterion_6_jensen_step():
    rng = np.random.default_rng(6)
    jensen_ok = True
    worst_z = 0.0
    for k in range(50):
        n = int(rng.integers(1, 15))
        K = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        est = estimate_sqrt_form(K, samples=20000, seed=k)
        jensen_ok &= est.mean <= math.sqrt(np.trace(K)) + 3 * est.std_error
        exact = exact_sqrt_form(K)
        if est.std_error > 0:
            worst_z = max(worst_z, abs(est.mean - exact) / est.std_error)
        else:
            worst_z = max(worst_z, 0.0 if est.mean == pytest.approx(exact) else math.inf)
    ok = jensen_ok and worst_z <= 4
    assert record("6", ok, f"Jensen holds: {jensen_ok}, max |MC - exact|/se {worst_z:.2f}"), \
        worst_z


def test_criterion_7_moment_bound():
    rng = np.random.default_rng(7)
    moments_ok = True
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(1, 21))
        K = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        for p in range(1, 6):
            chk = moment_check(K, p, samples=20000, seed=substream_seed(k, p))
            moments_ok &= bool(chk.holds)
            worst = max(worst, chk.estimate / chk.bound)
    chain_ok = True
    for m in (2, 4, 8):
        mats = [random_psd(rng, 12, rank=int(rng.integers(1, 13))) for _ in range(m)]
        chain_ok &= bool(subset_chain_check(mats, samples=20000, seed=m).holds)
    ok = moments_ok and chain_ok
    assert record("7", ok, f"moments hold: {moments_ok} (max estimate/bound {worst:.3f}, "
                           f"eta0 = {ETA0:.6f}), subset chain holds: {chain_ok}"), worst


def test_criterion_8_experiment_reproduction():
    cfg = ExperimentConfig.load(CONFIG)
    families = [k.family for k in cfg.kernels]
    assert (cfg.mixture.n, cfg.mixture.d, cfg.B_squared) == (300, 50, 320.0)
    assert sorted(families) == sorted(["rbf"] * 5 + ["linear", "polynomial", "cosine"])
    start = time.perf_counter()
    first = run_experiment(cfg)
    second = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    rows = first.rows
    qs = first.report["per_kernel_quad"]
    checks = {
        "8 rows": len(rows) == 8,
        "all q_t <= 320": all(q <= 320 for q in qs),
        "dominated": all(r["empirical"] <= r["curve_sum"] and r["empirical"] <= r["curve_max"]
                         for r in rows),
        "curve_max(8) = 2560/27": rows[-1]["curve_max"] == pytest.approx(
            float(Fraction(2560, 27)), rel=1e-12),
        "non-increasing": all(b[c] <= a[c] for a, b in zip(rows, rows[1:])
                              for c in ("empirical", "curve_sum", "curve_max")),
        "runtime < 120s": elapsed < 120,
        "byte-identical CSV": first.csv_text.encode() == second.csv_text.encode(),
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = (f"max q_t {max(qs):.2f}, curve_max(8) {rows[-1]['curve_max']:.6f}, "
              f"two runs {elapsed:.1f}s" + (f", failed: {failed}" if failed else ""))
    assert record("8", ok, detail), checks


def test_criterion_9_closed_forms():
    worst_br = 0.0
    worst_ratio = 0.0
    for m in (1, 2, 3, 4, 5, 7, 8, 16, 33, 100, 1000):
        for B, R, n in ((1.0, 1.0, 1), (17.888, 1.0, 300), (0.3, 4.5, 10_000)):
            uniform = rademacher_sum_bound([n * R * R] * m, [B * B] * m, n)
            closed = rademacher_sum_bound_BR(B, R, n, m)
            worst_br = max(worst_br, abs(uniform - closed) / closed)
            ratio = subset_bound(B, R, n, m) / closed
            target = math.sqrt(math.e * ETA0 * math.ceil(math.log(m)))
            worst_ratio = max(worst_ratio, abs(ratio - target) / max(target, 1.0))
    ok = worst_br <= 1e-12 and worst_ratio <= 1e-12
    assert record("9", ok, f"max relative errors {worst_br:.1e} and {worst_ratio:.1e}"), \
        (worst_br, worst_ratio)
