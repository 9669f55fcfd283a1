"""Monte-Carlo estimates of Rademacher-vector expectations.

All estimators draw sign vectors from :class:`~kernel_sum_bounds.prng.Xoshiro256pp`
seeded with the caller's seed, so results are reproducible bit-for-bit.
"""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from .bounds import ETA0
from .kernels import trace
from .prng import Xoshiro256pp, substream_seed

DEFAULT_SAMPLES = 20_000
BATCH = 4096
STAT_SLACK = 3.0


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int


class ChainCheck(NamedTuple):
    estimate: float
    bound: float
    holds: bool


def _sample_values(fn, n, samples, seed):
    """Evaluate ``fn`` on ``samples`` sign vectors, batch by batch.

    Batch ``b`` uses its own sub-seed of ``seed`` so batches are independent
    of how many came before; values are concatenated in batch order.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    out = []
    for b, start in enumerate(range(0, samples, BATCH)):
        count = min(BATCH, samples - start)
        sigma = Xoshiro256pp(substream_seed(seed, b)).signs(count, n)
        out.append(fn(sigma))
    return np.concatenate(out)


def _summarise(values, seed):
    samples = values.shape[0]
    if values.min() == values.max():
        # constant sample: report it exactly instead of after rounding
        return RademacherEstimate(float(values[0]), 0.0, samples, int(seed))
    mean = math.fsum(values) / samples
    if samples > 1:
        dev = values - mean
        se = math.sqrt(math.fsum(dev * dev) / (samples - 1) / samples)
    else:
        se = 0.0
    return RademacherEstimate(mean, se, samples, int(seed))


def _quad_forms(K, sigma):
    return np.einsum("si,ij,sj->s", sigma, K, sigma)


def estimate_sqrt_form(K, samples=DEFAULT_SAMPLES, seed=0):
    """Estimate ``E[sqrt(sigma^T K sigma)]`` over uniform sign vectors."""
    K = np.asarray(K, dtype=np.float64)
    values = _sample_values(
        lambda s: np.sqrt(np.maximum(0.0, _quad_forms(K, s))), K.shape[0], samples, seed)
    return _summarise(values, seed)


def exact_sqrt_form(K):
    """Exact ``E[sqrt(sigma^T K sigma)]`` by enumerating sign vectors (n <= 20).

    ``sigma`` and ``-sigma`` give the same form, so only vectors with
    ``sigma_0 = +1`` are visited.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if n > 20:
        raise ValueError("exact enumeration is limited to n <= 20")
    total = 0.0
    count = 1 << (n - 1)
    chunk = 1 << 14
    for start in range(0, count, chunk):
        codes = np.arange(start, min(count, start + chunk), dtype=np.int64)
        bits = (codes[:, None] >> np.arange(n - 1)) & 1
        sigma = np.ones((codes.shape[0], n))
        sigma[:, 1:] = np.where(bits == 1, 1.0, -1.0)
        total += math.fsum(np.sqrt(np.maximum(0.0, _quad_forms(K, sigma))))
    return total / count


def moment_check(K, p, samples=DEFAULT_SAMPLES, seed=0):
    """Check ``E[(sigma^T K sigma)^p] <= (eta0 p tr K)^p`` with ``eta0 = 23/22``."""
    if p < 1 or int(p) != p:
        raise ValueError("p must be a positive integer")
    K = np.asarray(K, dtype=np.float64)
    values = _sample_values(
        lambda s: np.maximum(0.0, _quad_forms(K, s)) ** p, K.shape[0], samples, seed)
    est = _summarise(values, seed)
    bound = (ETA0 * p * trace(K)) ** p
    return ChainCheck(est.mean, bound, est.mean <= bound + STAT_SLACK * est.std_error)


def subset_chain_check(mats, samples=DEFAULT_SAMPLES, seed=0):
    """Check ``E[(sum_t (sigma^T K_t sigma)^p)^(1/2p)] <= R sqrt(e eta0 p n)``.

    ``p = ceil(ln m)`` and ``R^2`` is the largest diagonal entry over all
    matrices.
    """
    mats = [np.asarray(M, dtype=np.float64) for M in mats]
    m = len(mats)
    if m < 2:
        raise ValueError("need at least two kernels (p = ceil(ln m) >= 1)")
    n = mats[0].shape[0]
    p = math.ceil(math.log(m))

    def inner(sigma):
        acc = np.zeros(sigma.shape[0])
        for M in mats:
            acc += np.maximum(0.0, _quad_forms(M, sigma)) ** p
        return acc ** (1.0 / (2 * p))

    est = _summarise(_sample_values(inner, n, samples, seed), seed)
    r_sq = max(float(np.max(np.diag(M))) for M in mats)
    bound = math.sqrt(max(r_sq, 0.0)) * math.sqrt(math.e * ETA0 * p * n)
    return ChainCheck(est.mean, bound, est.mean <= bound + STAT_SLACK * est.std_error)
