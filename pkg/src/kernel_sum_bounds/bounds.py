"""Closed-form bounds for SVMs on sums of kernels, and their empirical check.

``q_t = a_t^T K_t a_t`` is the quadratic form at the optimum of kernel ``t``.
For the optimum on the sum of ``m`` kernels

    q_sum <= f * m^(-log2 3) * sum_t q_t <= f * m^(-log2 3/2) * max_t q_t

with ``f = 1`` when ``m`` is a power of two and ``f = 3`` otherwise.
"""

from dataclasses import dataclass, field
from itertools import combinations
import math

import numpy as np

from .errors import BoundViolation
from .kernels import sum_matrices, trace
from .qp_solver import DEFAULT_TOL, solve_dual_hard, solve_dual_slack

LOG2_3 = math.log2(3.0)
LOG2_3_2 = math.log2(1.5)
ETA0 = 23.0 / 22.0
SLACK_C = 0.5
VIOLATION_RTOL = 1e-7


def is_power_of_two(m):
    return m >= 1 and (m & (m - 1)) == 0


def scale_sum(value, m):
    """``value * m^(-log2 3)``, correctly rounded when ``m`` is a power of two."""
    if is_power_of_two(m):
        return value / 3 ** (m.bit_length() - 1)
    return value * m ** -LOG2_3


def scale_max(value, m):
    """``value * m^(-log2(3/2))``, correctly rounded when ``m`` is a power of two."""
    if is_power_of_two(m):
        k = m.bit_length() - 1
        return value * 2 ** k / 3 ** k
    return value * m ** -LOG2_3_2


def _check_nonneg(values, name="quadratic forms"):
    values = [float(v) for v in values]
    if any(v < 0 or math.isnan(v) for v in values):
        raise ValueError(f"{name} must be nonnegative")
    return values


def two_kernel_bounds(q1, q2):
    """``(1/3 (q1 + q2), 2/3 max(q1, q2))``."""
    q1, q2 = _check_nonneg([q1, q2])
    return (q1 + q2) / 3.0, 2.0 * max(q1, q2) / 3.0


def many_kernel_bounds(qs):
    """Sum-form and max-form bounds on ``q_sum`` for ``m = len(qs)`` kernels.

    A single kernel is a tree of depth zero, so ``m = 1`` returns ``(q, q)``.
    """
    qs = _check_nonneg(qs)
    m = len(qs)
    if m == 0:
        raise ValueError("need at least one quadratic form")
    if m == 1:
        return qs[0], qs[0]
    factor = 1.0 if is_power_of_two(m) else 3.0
    return factor * scale_sum(math.fsum(qs), m), factor * scale_max(max(qs), m)


@dataclass
class BoundReport:
    m: int
    per_kernel_quad: list
    sum_quad: float
    bound_sum: float
    bound_max: float
    B_squared: float
    R_squared: float
    traces: list
    mode: str = "hard"
    max_kkt_residual: float = 0.0
    pair_checks: list = field(default_factory=list)

    @property
    def slack_sum(self):
        return self.bound_sum - self.sum_quad

    @property
    def slack_max(self):
        return self.bound_max - self.sum_quad

    def to_dict(self):
        return {
            "m": self.m,
            "mode": self.mode,
            "per_kernel_quad": list(self.per_kernel_quad),
            "sum_quad": self.sum_quad,
            "bound_sum": self.bound_sum,
            "bound_max": self.bound_max,
            "B_squared": self.B_squared,
            "R_squared": self.R_squared,
            "traces": list(self.traces),
            "max_kkt_residual": self.max_kkt_residual,
            "pair_checks": list(self.pair_checks),
        }


def _solver(mode, C, tol, max_sweeps):
    if mode == "hard":
        return lambda K: solve_dual_hard(K, tol=tol, max_sweeps=max_sweeps)
    if mode == "slack":
        if C != SLACK_C:
            raise ValueError(
                f"bound checks in slack mode are only defined for C = {SLACK_C}")
        return lambda K: solve_dual_slack(K, C, tol=tol, max_sweeps=max_sweeps)
    raise ValueError(f"unknown mode {mode!r}")


def _exceeds(value, bound):
    return value > bound + VIOLATION_RTOL * (1.0 + abs(bound))


def verify_sum_bound(mats, mode="hard", C=SLACK_C, tol=DEFAULT_TOL,
                     max_sweeps=None, pairwise=False, solutions=None,
                     executor=None):
    """Solve every base dual and the dual on their sum; check both bounds.

    With ``pairwise=True`` the two-kernel contraction is also checked for
    every pair of base kernels.  ``solutions`` may supply precomputed base
    solutions (in the same order as ``mats``), which lets callers inject a
    candidate and see it checked.  ``executor`` (a ``concurrent.futures``
    executor) parallelises the base solves; results are reduced in index
    order.

    Raises ``BoundViolation`` if ``q_sum`` exceeds either bound by more than
    ``1e-7 * (1 + bound)``.
    """
    mats = [np.asarray(M, dtype=np.float64) for M in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    n = mats[0].shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise ValueError("all matrices must be n x n with the same n")
    solve = _solver(mode, C, tol, max_sweeps)
    if solutions is None:
        if executor is not None:
            solutions = list(executor.map(solve, mats))
        else:
            solutions = [solve(M) for M in mats]
    qs = [float(s.quad_form) for s in solutions]
    total = sum_matrices(mats)
    sum_sol = solve(total)
    bound_sum, bound_max = many_kernel_bounds(qs)
    report = BoundReport(
        m=len(mats),
        per_kernel_quad=qs,
        sum_quad=float(sum_sol.quad_form),
        bound_sum=bound_sum,
        bound_max=bound_max,
        B_squared=max(qs),
        R_squared=max(float(np.max(np.diag(M))) for M in mats),
        traces=[trace(M) for M in mats],
        mode=mode,
        max_kkt_residual=max(s.kkt.max_violation for s in solutions + [sum_sol]),
    )
    failures = []
    if _exceeds(report.sum_quad, bound_sum):
        failures.append(f"q_sum {report.sum_quad:.10g} > sum-form bound {bound_sum:.10g}")
    if _exceeds(report.sum_quad, bound_max):
        failures.append(f"q_sum {report.sum_quad:.10g} > max-form bound {bound_max:.10g}")
    if pairwise:
        for a, b in combinations(range(len(mats)), 2):
            q_pair = float(solve(mats[a] + mats[b]).quad_form)
            third, two_thirds = two_kernel_bounds(qs[a], qs[b])
            ok = not (_exceeds(q_pair, third) or _exceeds(q_pair, two_thirds))
            report.pair_checks.append(
                {"pair": [a, b], "q_pair": q_pair, "third": third,
                 "two_thirds": two_thirds, "holds": ok})
            if not ok:
                failures.append(
                    f"pair ({a}, {b}): q = {q_pair:.10g} exceeds "
                    f"min(1/3 sum, 2/3 max) = {min(third, two_thirds):.10g}")
    if failures:
        raise BoundViolation("; ".join(failures), details=report.to_dict())
    return report


def rademacher_sum_bound(traces, qs, n):
    """``(1/n) sqrt(3 m^(-log2 3) (sum_t tr K_t) (sum_t q_t))``.

    The factor 3 is kept for every ``m``, as in the closed form.
    """
    traces = _check_nonneg(traces, "traces")
    qs = _check_nonneg(qs)
    if len(traces) != len(qs):
        raise ValueError("traces and qs must have the same length")
    if not qs:
        raise ValueError("need at least one kernel")
    if n < 1:
        raise ValueError("n must be positive")
    m = len(qs)
    return math.sqrt(3.0 * m ** -LOG2_3 * math.fsum(traces) * math.fsum(qs)) / n


def rademacher_sum_bound_BR(B, R, n, m):
    """``(B R / sqrt(n)) sqrt(3 m^(1 - log2(3/2)))``."""
    if B < 0 or R < 0 or n < 1 or m < 1:
        raise ValueError("need B, R >= 0 and n, m >= 1")
    return B * R / math.sqrt(n) * math.sqrt(3.0 * m ** (1.0 - LOG2_3_2))


def subset_bound(B, R, n, m):
    """Bound for choosing any subset of the ``m`` kernels.

    ``B R sqrt(3 e eta0 m^(1 - log2(3/2)) ceil(ln m)) / sqrt(n)`` with
    ``eta0 = 23/22``.  Literally zero at ``m = 1`` since ``ceil(ln 1) = 0``.
    """
    if B < 0 or R < 0 or n < 1 or m < 1:
        raise ValueError("need B, R >= 0 and n, m >= 1")
    p = math.ceil(math.log(m))
    return B * R * math.sqrt(3.0 * math.e * ETA0 * m ** (1.0 - LOG2_3_2) * p) / math.sqrt(n)


def psi_loss(x, gamma):
    """Ramp loss: 1 below zero, linear down to 0 at ``gamma``, then 0."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if x < 0:
        return 1.0
    if x <= gamma:
        return 1.0 - x / gamma
    return 0.0


def risk_epsilon(gamma, delta, n):
    """``(8/gamma + 1) sqrt(ln(4/delta) / (2n))``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    return (8.0 / gamma + 1.0) * math.sqrt(math.log(4.0 / delta) / (2.0 * n))
