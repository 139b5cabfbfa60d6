"""Nonnegative least squares projection of held-out data onto frozen topics.

Each column x of the test data is an independent problem
``min_{s >= 0} ||x - A s||_2``, solved by the Lawson-Hanson active-set
method. The returned solution is certified against the KKT conditions
(gradient g = A^T (A s - x)): near-zero gradient on the support, nonnegative
gradient off it, both relative to ||A^T x||_inf.
"""

from dataclasses import dataclass

import numpy as np

from nmfx.errors import IterationBudgetError, ShapeMismatchError, ValidationError
from nmfx.tensors import DataMatrix, FeatureTensor, flatten_features, unflatten_weights

DEFAULT_KKT_TOL = 1e-8
DEFAULT_MAX_ITERS = 500


@dataclass(frozen=True)
class NnlsConfig:
    kkt_tol: float = DEFAULT_KKT_TOL
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise ValidationError(f"kkt_tol must be > 0, got {self.kkt_tol}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")


def _lstsq_on(a, x, passive):
    sol = np.zeros(a.shape[1])
    sub, *_ = np.linalg.lstsq(a[:, passive], x, rcond=None)
    sol[passive] = sub
    return sol


def _certify(a, x, s, tol):
    """Return the worst KKT violation of s for min ||x - As||, s >= 0."""
    grad = a.T @ (a @ s - x)
    support_bad = float(np.abs(grad[s > 0.0]).max(initial=0.0))
    active_bad = float((-grad[s == 0.0]).max(initial=0.0))
    return max(support_bad, active_bad)


def nnls(a, x, cfg: NnlsConfig = NnlsConfig()):
    """Solve min ||x - A s||_2 subject to s >= 0 for one right-hand side."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or x.ndim != 1 or a.shape[0] != x.shape[0]:
        raise ShapeMismatchError(
            f"A {a.shape} and x {x.shape} do not form a least-squares system"
        )
    k = a.shape[1]
    s = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    grad_scale = float(np.abs(a.T @ x).max(initial=0.0))
    tol = cfg.kkt_tol * grad_scale
    if grad_scale == 0.0:
        return s  # zero datum: zero weights are optimal

    w = a.T @ x  # negative gradient at s = 0
    iters = 0
    budget_left = True
    while (~passive).any() and (w[~passive] > tol).any() and budget_left:
        iters += 1
        budget_left = iters < cfg.max_iters
        candidates = np.where(~passive, w, -np.inf)
        passive[int(np.argmax(candidates))] = True
        trial = _lstsq_on(a, x, passive)
        # Back off along the segment s -> trial until nothing on the passive
        # set is nonpositive; coordinates pinned at zero return to active.
        while passive.any() and (trial[passive] <= 0.0).any() and budget_left:
            iters += 1
            budget_left = iters < cfg.max_iters
            blocking = passive & (trial <= 0.0)
            gap = s[blocking] - trial[blocking]
            ratios = np.zeros_like(gap)
            np.divide(s[blocking], gap, out=ratios, where=gap > 0.0)
            alpha = float(ratios.min())
            s = s + alpha * (trial - s)
            passive &= s > 0.0
            s[~passive] = 0.0
            trial = _lstsq_on(a, x, passive) if passive.any() else np.zeros(k)
        s = np.maximum(trial, 0.0)
        passive = s > 0.0
        w = a.T @ (x - a @ s)

    worst = _certify(a, x, s, tol)
    if worst > tol:
        raise IterationBudgetError(
            f"nnls stopped after {iters} of {cfg.max_iters} allowed iterations "
            f"without a KKT certificate; worst violation {worst:.3e} exceeds {tol:.3e}"
        )
    return s


def project(a, x_test: DataMatrix, cfg: NnlsConfig = NnlsConfig()):
    """NNLS-project every column of x_test onto the topic basis A.

    Columns are independent problems; the result does not depend on the order
    they are solved in.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatchError(f"topic matrix must be 2-axis, got {a.ndim}")
    if a.shape[0] != x_test.n1:
        raise ShapeMismatchError(
            f"topic matrix has {a.shape[0]} channels, test data has {x_test.n1}"
        )
    k, m = a.shape[1], x_test.n2
    s_test = np.empty((k, m))
    for c in range(m):
        s_test[:, c] = nnls(a, x_test.data[:, c], cfg)
    return s_test


def project_features(model, f_test: FeatureTensor, cfg: NnlsConfig = NnlsConfig()):
    """flatten -> project -> unflatten composition for a held-out tensor."""
    x_test = flatten_features(f_test)
    s_test = project(model.A, x_test, cfg)
    return unflatten_weights(s_test, f_test.dims)
