"""Dual kernel SVM without bias term.

Hard margin::

    max_a  ||a||_1 - 1/2 a^T K a    s.t.  a >= 0

l2 slack with parameter C (primal penalty C/2 ||xi||^2)::

    max_{a, xi}  ||a||_1 - 1/2 a^T K a - C/2 ||xi||^2    s.t.  0 <= a <= C xi

At the optimum xi = a / C, so the slack problem is the hard problem on
``K + I / C``.  Both are solved by cyclic coordinate ascent; each coordinate
step is the exact closed-form maximiser along that axis.
"""

from dataclasses import dataclass, field
from itertools import combinations
import math

import numba
import numpy as np

from .errors import NoFeasibleSupport, NotConverged, Unbounded

DEFAULT_TOL = 1e-8
DEFAULT_ACTIVE_TOL = 1e-10
DEFAULT_DIAG_TOL = 1e-12
OBJECTIVE_CAP = 1e12
REFRESH_EVERY = 50

_CONVERGED, _ZERO_DIAGONAL, _CAP_EXCEEDED, _EXHAUSTED = range(4)


@dataclass
class KktReport:
    """Optimality residuals expressed through the margins ``(K a)_i``.

    By stationarity ``(K a)_i = y_i w^T phi(x_i)``, so the primal ``w`` is
    never needed.
    """

    max_violation: float
    per_index_margin: np.ndarray
    support_count: int


@dataclass
class DualSolution:
    alpha: np.ndarray
    objective: float
    quad_form: float
    kkt: KktReport
    iterations: int
    xi: np.ndarray | None = None
    C: float | None = None
    history: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def l1(self):
        return float(np.sum(self.alpha))

    @property
    def l1_gap(self):
        """``||a||_1 - a^T K a`` (minus ``C ||xi||^2`` in slack mode); zero at optimum."""
        gap = self.l1 - self.quad_form
        if self.xi is not None:
            gap -= self.C * float(self.xi @ self.xi)
        return gap


def _check_square(K):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix entries must be finite")
    return K


def kkt_residuals(K, alpha, active_tol=DEFAULT_ACTIVE_TOL):
    """Max KKT violation of a candidate ``alpha`` for the hard-margin dual.

    Support indices (``alpha_i > active_tol``) must sit exactly on the margin,
    the rest must satisfy ``(K a)_i >= 1``.
    """
    K = _check_square(K)
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.shape[0] != K.shape[0]:
        raise ValueError(
            f"alpha has length {alpha.shape[0]}, matrix is {K.shape[0]}x{K.shape[0]}")
    margin = K @ alpha
    active = alpha > active_tol
    viol = np.where(active, np.abs(1.0 - margin), np.maximum(0.0, 1.0 - margin))
    # a negative entry is a dual-feasibility violation in its own right
    viol = np.maximum(viol, np.maximum(0.0, -alpha))
    return KktReport(
        max_violation=float(viol.max()),
        per_index_margin=margin,
        support_count=int(active.sum()),
    )


@numba.njit(cache=True, nogil=True)
def _coordinate_ascent(K, alpha, r, max_sweeps, tol, active_tol, diag_tol, cap,
                       history):
    n = K.shape[0]
    for s in range(max_sweeps):
        for i in range(n):
            kii = K[i, i]
            g = 1.0 - r[i]
            if kii <= diag_tol:
                if g > tol:
                    return _ZERO_DIAGONAL, s
                continue
            new = alpha[i] + g / kii
            if new < 0.0:
                new = 0.0
            delta = new - alpha[i]
            if delta != 0.0:
                for k in range(n):
                    r[k] += delta * K[k, i]
                alpha[i] = new
        if (s + 1) % REFRESH_EVERY == 0:
            for k in range(n):
                acc = 0.0
                for j in range(n):
                    acc += K[k, j] * alpha[j]
                r[k] = acc
        l1 = 0.0
        quad = 0.0
        viol = 0.0
        for k in range(n):
            l1 += alpha[k]
            quad += alpha[k] * r[k]
            if alpha[k] > active_tol:
                v = abs(1.0 - r[k])
            else:
                v = max(0.0, 1.0 - r[k])
            if v > viol:
                viol = v
        history[s] = l1 - 0.5 * quad
        if l1 > cap:
            return _CAP_EXCEEDED, s + 1
        if viol <= tol:
            return _CONVERGED, s + 1
    return _EXHAUSTED, max_sweeps


def _finish(K, alpha, sweeps, history, active_tol):
    kkt = kkt_residuals(K, alpha, active_tol)
    quad = float(alpha @ kkt.per_index_margin)
    return DualSolution(
        alpha=alpha,
        objective=float(alpha.sum()) - 0.5 * quad,
        quad_form=quad,
        kkt=kkt,
        iterations=sweeps,
        history=history[:sweeps].copy(),
    )


def solution_from_alpha(K, alpha, active_tol=DEFAULT_ACTIVE_TOL):
    """Wrap an arbitrary candidate ``alpha`` as a hard-mode solution record.

    Nothing is solved: objective, quadratic form and KKT residuals are
    evaluated at the given point, so a bad candidate is visible through
    ``kkt.max_violation``.
    """
    K = _check_square(K)
    alpha = np.array(alpha, dtype=np.float64).ravel()
    return _finish(K, alpha, 0, np.empty(0), active_tol)


def _polish(K, alpha, tol, active_tol):
    """Try to jump to the exact optimum from the current support estimate.

    Small active-set refinement: solve ``K_SS a_S = 1`` on the support
    ``S`` read off ``alpha``, drop indices that come out nonpositive, add
    the most violated off-support index, and repeat (at most ``n`` times).
    A candidate is returned only if it passes the full KKT check, else
    ``None``.
    """
    n = K.shape[0]
    in_s = alpha > active_tol
    for _ in range(n):
        S = np.flatnonzero(in_s)
        if S.size == 0:
            return None
        try:
            a_s = np.linalg.solve(K[np.ix_(S, S)], np.ones(S.size))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(a_s)):
            return None
        if np.any(a_s <= 0):
            in_s[S[a_s <= 0]] = False
            continue
        cand = np.zeros(n)
        cand[S] = a_s
        rep = kkt_residuals(K, cand, active_tol)
        if rep.max_violation <= tol:
            return cand
        short = np.where(in_s, np.inf, rep.per_index_margin)
        worst = int(np.argmin(short))
        if short[worst] >= 1.0 - tol:
            return None
        in_s[worst] = True
    return None


def solve_dual_hard(K, tol=DEFAULT_TOL, max_sweeps=None,
                    active_tol=DEFAULT_ACTIVE_TOL, diag_tol=DEFAULT_DIAG_TOL):
    """Certified optimum of the hard-margin dual by cyclic coordinate ascent.

    Starts from ``alpha = 0`` and sweeps ``i = 0..n-1`` in order, setting
    ``alpha_i <- max(0, alpha_i + (1 - (K alpha)_i) / K_ii)``.  Stops once
    the freshly recomputed KKT violation is at most ``tol``.  Every 50
    sweeps the current support is also tried as an exact linear solve
    (``K_SS a_S = 1``), which is accepted only if it passes the same KKT
    check; this removes the slow linear tail on ill-conditioned matrices.

    Raises ``Unbounded`` when the dual has no finite optimum and
    ``NotConverged`` when ``max_sweeps`` runs out first.
    """
    K = _check_square(K)
    n = K.shape[0]
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_sweeps is None:
        max_sweeps = 100 * n
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be positive")
    alpha = np.zeros(n)
    r = np.zeros(n)
    history = np.empty(max_sweeps)
    done = 0
    while done < max_sweeps:
        # chunks of REFRESH_EVERY sweeps, so each chunk ends on a full resync
        status, sweeps = _coordinate_ascent(
            K, alpha, r, min(REFRESH_EVERY, max_sweeps - done), tol, active_tol,
            diag_tol, OBJECTIVE_CAP, history[done:])
        done += sweeps
        if status == _ZERO_DIAGONAL:
            raise Unbounded(
                "a zero diagonal entry has positive gradient; the objective "
                "increases without limit along that coordinate")
        if status == _CAP_EXCEEDED:
            raise Unbounded(f"||alpha||_1 exceeded {OBJECTIVE_CAP:g}")
        if status == _CONVERGED:
            sol = _finish(K, alpha, done, history, active_tol)
            if sol.kkt.max_violation <= tol:
                return sol
            # incremental residuals drifted; resync and keep sweeping
            r[:] = K @ alpha
            continue
        polished = _polish(K, alpha, tol, active_tol) if sweeps == REFRESH_EVERY else None
        if polished is not None:
            return _finish(K, polished, done, history, active_tol)
    sol = _finish(K, alpha, done, history, active_tol)
    if sol.kkt.max_violation <= tol:
        return sol
    if sol.l1 > 0 and sol.quad_form < 1e-2 * sol.l1:
        # along a recession direction a^T K a stays bounded while ||a||_1 grows
        raise Unbounded(
            f"alpha grows along a direction of (near) zero curvature: "
            f"||alpha||_1 = {sol.l1:.6g}, alpha^T K alpha = {sol.quad_form:.6g}")
    raise NotConverged(
        f"KKT residual {sol.kkt.max_violation:.3e} > tol {tol:.1e} after "
        f"{done} sweeps", residual=sol.kkt.max_violation, sweeps=done)


def solve_dual_slack(K, C, tol=DEFAULT_TOL, max_sweeps=None,
                     active_tol=DEFAULT_ACTIVE_TOL):
    """l2-slack dual, solved as the hard dual on ``K + I / C``.

    ``quad_form`` is reported against the original ``K``; ``objective`` is
    ``||a||_1 - 1/2 a^T K a - C/2 ||xi||^2`` with ``xi = a / C``.
    """
    K = _check_square(K)
    if not (C > 0 and math.isfinite(C)):
        raise ValueError("C must be positive")
    reduced = K + np.eye(K.shape[0]) / C
    sol = solve_dual_hard(reduced, tol=tol, max_sweeps=max_sweeps,
                          active_tol=active_tol)
    alpha = sol.alpha
    xi = alpha / C
    quad = float(alpha @ K @ alpha)
    sol.xi = xi
    sol.C = float(C)
    sol.quad_form = quad
    sol.objective = float(alpha.sum()) - 0.5 * quad - 0.5 * C * float(xi @ xi)
    return sol


def brute_force_dual(K):
    """Exact dual optimum by enumerating every support set (n <= 14).

    For support ``S`` the KKT system is ``K_SS a_S = 1``; a candidate is
    accepted when ``a_S >= -1e-10`` and every off-support margin is at
    least ``1 - 1e-8``.  Singular subsystems are skipped.
    """
    K = _check_square(K)
    n = K.shape[0]
    if n > 14:
        raise ValueError("brute force enumeration is limited to n <= 14")
    best = None
    best_obj = -math.inf
    for size in range(1, n + 1):
        subsets = np.array(list(combinations(range(n), size)), dtype=np.intp)
        blocks = K[subsets[:, :, None], subsets[:, None, :]]
        ones = np.ones((len(subsets), size))
        sols = _batched_solve(blocks, ones)
        for idx, a_s in zip(subsets, sols):
            if a_s is None or np.any(a_s < -1e-10):
                continue
            alpha = np.zeros(n)
            alpha[idx] = np.maximum(a_s, 0.0)
            margin = K @ alpha
            off = np.ones(n, dtype=bool)
            off[idx] = False
            if np.any(margin[off] < 1.0 - 1e-8):
                continue
            obj = float(alpha.sum()) - 0.5 * float(alpha @ margin)
            if obj > best_obj:
                best_obj = obj
                best = alpha
    if best is None:
        raise NoFeasibleSupport(
            "no support set satisfies the KKT conditions; the dual is "
            "unbounded or degenerate")
    kkt = kkt_residuals(K, best)
    quad = float(best @ kkt.per_index_margin)
    return DualSolution(alpha=best, objective=float(best.sum()) - 0.5 * quad,
                        quad_form=quad, kkt=kkt, iterations=0)


def _batched_solve(blocks, rhs):
    """Solve each ``blocks[b] x = rhs[b]``; ``None`` where the block is singular."""
    try:
        xs = np.linalg.solve(blocks, rhs[..., None])[..., 0]
        out = list(xs)
    except np.linalg.LinAlgError:
        out = []
        for A, b in zip(blocks, rhs):
            try:
                out.append(np.linalg.solve(A, b))
            except np.linalg.LinAlgError:
                out.append(None)
    for k, x in enumerate(out):
        if x is None:
            continue
        resid = blocks[k] @ x - rhs[k]
        if not np.all(np.isfinite(x)) or np.max(np.abs(resid)) > 1e-8 * (1 + np.max(np.abs(x))):
            out[k] = None
    return out
