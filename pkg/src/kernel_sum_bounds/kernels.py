"""Kernel evaluations, Gram matrices and labeled kernel matrices.

A labeled kernel matrix is the Gram matrix with entry ``(i, j)`` multiplied
by ``y_i * y_j``.  Matrices are plain dense ``float64`` numpy arrays.
"""

from dataclasses import dataclass
import math

import numpy as np

FAMILIES = ("rbf", "linear", "polynomial", "cosine")


@dataclass(frozen=True)
class Dataset:
    """``n`` points in R^d with labels in {-1, +1}."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.float64).ravel()
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise ValueError("points must be a sequence of vectors")
        if points.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        if points.shape[0] != labels.shape[0]:
            raise ValueError(
                f"{points.shape[0]} points but {labels.shape[0]} labels")
        if not np.all(np.isfinite(points)):
            raise ValueError("all coordinates must be finite")
        if not np.all((labels == 1.0) | (labels == -1.0)):
            raise ValueError("labels must be exactly -1 or +1")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of one base kernel.

    ``bandwidth`` is used by rbf only, ``degree``/``offset`` by polynomial
    only; passing a hyperparameter the family does not use is an error.
    """

    family: str
    bandwidth: float | None = None
    degree: int | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        needs_bw = self.family == "rbf"
        needs_poly = self.family == "polynomial"
        if needs_bw != (self.bandwidth is not None):
            raise ValueError(
                f"bandwidth is {'required' if needs_bw else 'not allowed'} "
                f"for {self.family}")
        if needs_poly != (self.degree is not None) or needs_poly != (self.offset is not None):
            raise ValueError(
                f"degree/offset are {'required' if needs_poly else 'not allowed'} "
                f"for {self.family}")
        if needs_bw and not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError("bandwidth must be positive")
        if needs_poly:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("degree must be a positive integer")
            if not (math.isfinite(self.offset) and self.offset >= 0):
                raise ValueError("offset must be nonnegative")

    @classmethod
    def rbf(cls, bandwidth):
        return cls("rbf", bandwidth=float(bandwidth))

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def polynomial(cls, degree=2, offset=1.0):
        return cls("polynomial", degree=int(degree), offset=float(offset))

    @classmethod
    def cosine(cls):
        return cls("cosine")

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        family = obj.pop("family", None)
        if family == "polynomial":
            obj.setdefault("degree", 2)
            obj.setdefault("offset", 1.0)
        unknown = set(obj) - {"bandwidth", "degree", "offset"}
        if unknown:
            raise ValueError(f"unknown kernel fields {sorted(unknown)}")
        return cls(family, **obj)

    def to_dict(self):
        out = {"family": self.family}
        if self.family == "rbf":
            out["bandwidth"] = self.bandwidth
        elif self.family == "polynomial":
            out["degree"] = self.degree
            out["offset"] = self.offset
        return out


def _as_vector(x):
    v = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("kernel inputs must be finite")
    return v


def eval_kernel(spec, x, x2):
    """Evaluate ``k(x, x2)`` for a single pair of vectors."""
    x = _as_vector(x)
    x2 = _as_vector(x2)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    if spec.family == "rbf":
        diff = x - x2
        return math.exp(-float(diff @ diff) / (2.0 * spec.bandwidth ** 2))
    dot = float(x @ x2)
    if spec.family == "linear":
        return dot
    if spec.family == "polynomial":
        return (dot + spec.offset) ** spec.degree
    nx = math.sqrt(float(x @ x))
    nx2 = math.sqrt(float(x2 @ x2))
    if nx == 0.0 or nx2 == 0.0:
        return 0.0
    return min(1.0, max(-1.0, dot / (nx * nx2)))


def _cross_gram(spec, A, B):
    """Kernel values between the rows of ``A`` and ``B`` (vectorised)."""
    if spec.family == "rbf":
        sq = (np.einsum("ij,ij->i", A, A)[:, None]
              + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T)
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * spec.bandwidth ** 2))
    dots = A @ B.T
    if spec.family == "linear":
        return dots
    if spec.family == "polynomial":
        return (dots + spec.offset) ** spec.degree
    na = np.sqrt(np.einsum("ij,ij->i", A, A))
    nb = np.sqrt(np.einsum("ij,ij->i", B, B))
    denom = np.outer(na, nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0.0, dots / np.where(denom > 0.0, denom, 1.0), 0.0)
    return np.clip(out, -1.0, 1.0)


def gram(spec, data):
    """Unlabeled Gram matrix ``K[i, j] = k(x_i, x_j)``, exactly symmetric."""
    X = data.points
    K = _cross_gram(spec, X, X)
    # mirror the upper triangle so symmetry is exact, not up to rounding
    upper = np.triu(K)
    K = upper + np.triu(K, 1).T
    if spec.family == "rbf":
        np.fill_diagonal(K, 1.0)
    elif spec.family == "cosine":
        np.fill_diagonal(K, (np.einsum("ij,ij->i", X, X) > 0.0).astype(float))
    return K


def labeled_gram(spec, data):
    """Labeled kernel matrix ``y_i y_j k(x_i, x_j)``."""
    y = data.labels
    return gram(spec, data) * np.outer(y, y)


def sum_matrices(mats):
    """Elementwise sum of a nonempty sequence of equally sized matrices."""
    mats = [np.asarray(M, dtype=np.float64) for M in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    shape = mats[0].shape
    for M in mats[1:]:
        if M.shape != shape:
            raise ValueError(f"size mismatch: {M.shape} vs {shape}")
    total = mats[0].copy()
    for M in mats[1:]:
        total += M
    return total


def trace(mat):
    return float(np.trace(np.asarray(mat, dtype=np.float64)))


def radius_squared(specs, data):
    """Smallest admissible R^2: the largest k_t(x_i, x_i) over kernels and points."""
    best = -math.inf
    for spec in specs:
        if spec.family == "rbf":
            diag = np.ones(data.n)
        elif spec.family == "cosine":
            diag = (np.einsum("ij,ij->i", data.points, data.points) > 0).astype(float)
        else:
            sq = np.einsum("ij,ij->i", data.points, data.points)
            diag = sq if spec.family == "linear" else (sq + spec.offset) ** spec.degree
        best = max(best, float(diag.max()))
    return best


def predict(data, alpha, specs, x):
    """Decision value ``sum_i alpha_i y_i k_sum(x, x_i)`` of the kernel-sum classifier."""
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.shape[0] != data.n:
        raise ValueError(f"alpha has length {alpha.shape[0]}, expected {data.n}")
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    x = _as_vector(x)
    if x.shape[0] != data.d:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {data.d}")
    k = np.zeros(data.n)
    for spec in specs:
        k += _cross_gram(spec, x[None, :], data.points)[0]
    return float(np.sum(alpha * data.labels * k))
