"""Synthetic two-class data from a mixture of four isotropic Gaussians."""

import csv
from dataclasses import dataclass
import io

import numpy as np

from .errors import ConfigError
from .kernels import Dataset
from .prng import Xoshiro256pp


def corner_means(d, along=6.0, across=2.0, layout="separable"):
    """Four component means in the (e1, e2) plane, padded with zeros.

    ``separable``: the +1 components sit at ``(+along, +-across)`` and the
    -1 components at ``(-along, +-across)``, so the classes are split by the
    sign of the first coordinate.  ``xor``: +1 at ``(a, a)`` and ``(-a, -a)``,
    -1 at the mixed corners, with ``a = across``; not linearly separable.
    """
    if d < 2:
        raise ConfigError("corner layouts need d >= 2")
    means = np.zeros((4, d))
    if layout == "separable":
        means[:, :2] = [[along, across], [along, -across],
                        [-along, across], [-along, -across]]
    elif layout == "xor":
        a = across
        means[:, :2] = [[a, a], [-a, -a], [a, -a], [-a, a]]
    else:
        raise ConfigError(f"unknown layout {layout!r}")
    return means


@dataclass
class MixtureConfig:
    n: int = 300
    d: int = 50
    means: np.ndarray | None = None
    stddev: float = 1.0
    class_of_component: tuple = (1, 1, -1, -1)
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError("d must be a positive integer")
        if not self.stddev > 0:
            raise ConfigError("stddev must be positive")
        if self.means is None:
            self.means = corner_means(self.d)
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.shape != (4, self.d):
            raise ConfigError(
                f"means must be 4 vectors of dimension {self.d}, got {self.means.shape}")
        if not np.all(np.isfinite(self.means)):
            raise ConfigError("means must be finite")
        classes = tuple(int(c) for c in self.class_of_component)
        if len(classes) != 4 or sorted(classes) != [-1, -1, 1, 1]:
            raise ConfigError("exactly two components per class (+1, +1, -1, -1)")
        self.class_of_component = classes

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        layout = obj.pop("layout", None)
        along = obj.pop("along", 6.0)
        across = obj.pop("across", 2.0)
        if layout is not None and "means" in obj:
            raise ConfigError("give either explicit means or a layout, not both")
        if layout is not None:
            obj["means"] = corner_means(obj.get("d", 50), along, across, layout)
        unknown = set(obj) - {"n", "d", "means", "stddev", "class_of_component", "seed"}
        if unknown:
            raise ConfigError(f"unknown mixture fields {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self):
        return {
            "n": self.n, "d": self.d, "means": self.means.tolist(),
            "stddev": self.stddev,
            "class_of_component": list(self.class_of_component),
            "seed": self.seed,
        }


def generate_mixture(cfg):
    """Draw ``cfg.n`` labelled points; deterministic in ``cfg.seed``.

    Per sample: a uniform component index, then ``d`` Box-Muller normals,
    all from one sequential xoshiro256++ stream.
    """
    rng = Xoshiro256pp(cfg.seed)
    points = np.empty((cfg.n, cfg.d))
    labels = np.empty(cfg.n)
    for i in range(cfg.n):
        c = rng.randbelow(4)
        points[i] = cfg.means[c] + cfg.stddev * rng.normals(cfg.d)
        labels[i] = cfg.class_of_component[c]
    return Dataset(points, labels)


def _fmt(v):
    return format(float(v), ".17g")


def dataset_to_csv(data):
    """CSV text with header ``y,x1,...,xd`` and 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.d)])
    for y, x in zip(data.labels, data.points):
        writer.writerow([str(int(y))] + [_fmt(v) for v in x])
    return buf.getvalue()


def write_dataset_csv(data, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(data))


def read_dataset_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "y":
        raise ConfigError(f"{path}: expected header starting with 'y'")
    header = rows[0]
    expected = ["y"] + [f"x{j + 1}" for j in range(len(header) - 1)]
    if header != expected:
        raise ConfigError(f"{path}: malformed header {header}")
    body = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    if body.size == 0:
        raise ConfigError(f"{path}: no samples")
    return Dataset(body[:, 1:], body[:, 0])
