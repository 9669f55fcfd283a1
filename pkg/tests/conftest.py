import numpy as np
import pytest

from kernel_sum_bounds.kernels import Dataset, KernelSpec, labeled_gram

ACCEPTANCE_LINES = []


MAX_CONDITION = 1e6


def random_labeled_pd(rng, n, family=None):
    """Random labeled PD matrix with condition number at most 1e6.

    ``rbf``: labeled rbf Gram matrix on random points with random labels;
    draws whose matrix is numerically singular are redrawn.  ``factor``:
    ``A A^T / n + 0.1 I`` with label sign flips.
    """
    family = family or rng.choice(["rbf", "factor"])
    while True:
        labels = rng.choice([-1.0, 1.0], size=n)
        if family == "rbf":
            d = int(rng.integers(2, 6))
            points = rng.normal(size=(n, d))
            spec = KernelSpec.rbf(float(rng.uniform(0.3, 1.5)))
            K = labeled_gram(spec, Dataset(points, labels))
        else:
            A = rng.normal(size=(n, n + 2))
            K = (A @ A.T / n + 0.1 * np.eye(n)) * np.outer(labels, labels)
        w = np.linalg.eigvalsh(K)
        if w[0] > 0 and w[-1] <= MAX_CONDITION * w[0]:
            return K


def random_psd(rng, n, rank=None):
    rank = rank or n
    A = rng.normal(size=(n, rank))
    return A @ A.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
