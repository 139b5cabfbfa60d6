"""Label-supervised NMF: minimize ||X - AS||_F^2 + lambda * ||Y - BS||_F^2.

Y is a binary label matrix over spatial locations: every location of an image
carries that image's class, locations of unlabeled images stay all-zero. The
classifier factor B maps topic weights to classes, so supervision can steer
which locations get grouped into one topic. With lambda = 0 every update
degenerates bitwise to the unsupervised solver.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from nmfx.errors import ShapeMismatchError, ValidationError
from nmfx.nmf import (
    FactorModel,
    NmfConfig,
    _check_finite,
    _update_dictionary,
    _update_s,
    frobenius_sq,
    normalize_columns,
    reconstruction_objective,
)
from nmfx.tensors import DataMatrix

DEFAULT_LAMBDA = 1.0


@dataclass(frozen=True)
class LabelMatrix:
    """Binary (l, n2) class-membership matrix with one name per class row."""

    data: np.ndarray
    label_names: tuple

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ValidationError(f"label matrix must be 2-axis, got {arr.ndim}")
        if not np.isin(arr, (0.0, 1.0)).all():
            raise ValidationError("label matrix entries must be 0 or 1")
        if (arr.sum(axis=0) > 1).any():
            raise ValidationError("a location can carry at most one class")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        names = tuple(str(n) for n in self.label_names)
        if len(names) != arr.shape[0]:
            raise ValidationError(
                f"{len(names)} label names for {arr.shape[0]} class rows"
            )
        object.__setattr__(self, "label_names", names)

    @property
    def l(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class SsnmfConfig(NmfConfig):
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        super().__post_init__()
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")

    def to_dict(self):
        d = super().to_dict()
        d["lambda"] = self.lam
        return d


def build_label_matrix(labels, l, dims, label_names=None) -> LabelMatrix:
    """Expand per-image class indices into the (l, n*d1*d2) location matrix.

    ``labels[i]`` is the class of image i or None for unlabeled; every spatial
    location of a labeled image gets a 1 in its class row, using the same
    column order as feature flattening.
    """
    n, d1, d2 = (int(v) for v in dims)
    labels = list(labels)
    if len(labels) != n:
        raise ShapeMismatchError(f"{len(labels)} labels for {n} images")
    if label_names is None:
        label_names = [f"class{g}" for g in range(l)]
    per_loc = d1 * d2
    y = np.zeros((l, n * per_loc))
    for i, lab in enumerate(labels):
        if lab is None:
            continue
        lab = int(lab)
        if not 0 <= lab < l:
            raise ValidationError(f"image {i}: class index {lab} outside [0, {l})")
        y[lab, i * per_loc : (i + 1) * per_loc] = 1.0
    return LabelMatrix(y, label_names)


def joint_objective(x, y, a, b, s, lam):
    obj = reconstruction_objective(x, a, s)
    if lam > 0.0:
        obj = obj + lam * frobenius_sq(y - b @ s)
    return obj


def ssnmf_init(x: DataMatrix, y: LabelMatrix, cfg: SsnmfConfig):
    """Seeded init; A0 and S0 are drawn exactly as the unsupervised init does,
    so matched seeds stay comparable across the two solvers."""
    if cfg.k > min(x.n1, x.n2):
        warnings.warn(
            f"k={cfg.k} exceeds min(n1, n2)={min(x.n1, x.n2)}; factorization is degenerate",
            stacklevel=2,
        )
    rng = np.random.default_rng(cfg.seed)
    scale = max(float(np.sqrt(x.data.mean() / cfg.k)), cfg.eps)
    a0 = (1.0 - rng.random((x.n1, cfg.k))) * scale
    s0 = (1.0 - rng.random((cfg.k, x.n2))) * scale
    b_scale = max(float(np.sqrt(y.data.mean() / cfg.k)), cfg.eps)
    b0 = (1.0 - rng.random((y.l, cfg.k))) * b_scale
    return a0, b0, s0


def ssnmf_step(x, y, a, b, s, lam, eps):
    """One joint multiplicative step; the shared kernels guarantee the
    lambda = 0 case reproduces the unsupervised step bit for bit."""
    s_new = _update_s(x, a, s, eps, y=y, b=b, lam=lam)
    a_new = _update_dictionary(x, a, s_new, eps)
    b_new = _update_dictionary(y, b, s_new, eps)
    _check_finite(a_new, b_new, s_new)
    return a_new, b_new, s_new


def ssnmf_fit(x: DataMatrix, y: LabelMatrix, cfg: SsnmfConfig) -> FactorModel:
    if y.data.shape[1] != x.n2:
        raise ShapeMismatchError(
            f"label matrix has {y.data.shape[1]} columns, data matrix has {x.n2}"
        )
    if y.l > cfg.k:
        raise ValidationError(
            f"{y.l} classes exceed k={cfg.k} topics; supervised runs need l <= k "
            "(raise --k or merge classes)"
        )
    a, b, s = ssnmf_init(x, y, cfg)
    trace = [joint_objective(x.data, y.data, a, b, s, cfg.lam)]
    iterations = 0
    for _ in range(cfg.max_iters):
        a, b, s = ssnmf_step(x.data, y.data, a, b, s, cfg.lam, cfg.eps)
        iterations += 1
        obj = joint_objective(x.data, y.data, a, b, s, cfg.lam)
        trace.append(obj)
        prev = trace[-2]
        if prev <= 0.0:
            break
        if (prev - obj) / prev < cfg.rel_tol:
            break
    a, s, b = normalize_columns(a, s, b)
    return FactorModel(
        A=a,
        S=s,
        B=b,
        objective_trace=tuple(trace),
        iterations_run=iterations,
        config=cfg.to_dict(),
        label_names=y.label_names,
        mode="ssnmf",
    )
