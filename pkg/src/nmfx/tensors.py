"""Dense tensor/matrix value types and the exact reshaping between them.

A feature tensor holds post-ReLU activations of n images with p channels on a
d1 x d2 grid. Flattening turns it into the (p, n*d1*d2) data matrix whose
columns are spatial locations; column c encodes (image i, row r, col cc) via
c = i*d1*d2 + r*d2 + cc. Unflattening a (K, n*d1*d2) weight matrix inverts
that map into a (n, K, d1, d2) heat tensor.
"""

from dataclasses import dataclass

import numpy as np

from nmfx import npyio
from nmfx.errors import NegativeEntryError, ShapeMismatchError, ValidationError


def _as_f64(data, rank, name):
    arr = np.array(data, dtype=np.float64, order="C", copy=True)
    if arr.ndim != rank:
        raise ValidationError(f"{name} must have {rank} axes, got {arr.ndim}")
    if any(s < 1 for s in arr.shape):
        raise ValidationError(f"{name} axes must all be >= 1, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    if (arr < 0).any():
        raise NegativeEntryError(f"{name} contains negative entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureTensor:
    """Nonnegative (n, p, d1, d2) activation tensor. Immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_f64(self.data, 4, "feature tensor"))

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p(self):
        return self.data.shape[1]

    @property
    def grid(self):
        return self.data.shape[2], self.data.shape[3]

    @property
    def dims(self):
        """(n, d1, d2) — what unflattening needs to invert the column map."""
        n, _, d1, d2 = self.data.shape
        return n, d1, d2

    @classmethod
    def load(cls, path):
        return cls(npyio.load_array(path))

    def save(self, path, dtype=None):
        return npyio.save_array(path, self.data, dtype=dtype)


@dataclass(frozen=True)
class DataMatrix:
    """Nonnegative (n1, n2) matrix: rows are channels, columns are locations."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_f64(self.data, 2, "data matrix"))

    @property
    def n1(self):
        return self.data.shape[0]

    @property
    def n2(self):
        return self.data.shape[1]

    @classmethod
    def load(cls, path):
        return cls(npyio.load_array(path))

    def save(self, path, dtype=None):
        return npyio.save_array(path, self.data, dtype=dtype)


def flatten_features(f: FeatureTensor) -> DataMatrix:
    """Flatten (n, p, d1, d2) features into the (p, n*d1*d2) data matrix."""
    n, p, d1, d2 = f.data.shape
    x = f.data.transpose(1, 0, 2, 3).reshape(p, n * d1 * d2)
    return DataMatrix(x)


def unflatten_weights(s, dims) -> np.ndarray:
    """Reshape (K, n*d1*d2) weights into a (n, K, d1, d2) heat tensor.

    Exact inverse of the column index map used by ``flatten_features``.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2:
        raise ShapeMismatchError(f"weights must be 2-axis, got {s.ndim} axes")
    n, d1, d2 = (int(v) for v in dims)
    k = s.shape[0]
    if s.shape[1] != n * d1 * d2:
        raise ShapeMismatchError(
            f"weights have {s.shape[1]} columns, dims {(n, d1, d2)} require {n * d1 * d2}"
        )
    return s.reshape(k, n, d1, d2).transpose(1, 0, 2, 3).copy()
