"""Frobenius NMF by Lee-Seung multiplicative updates.

Minimizes ||X - AS||_F^2 over A >= 0 (n1 x k topics) and S >= 0 (k x n2
weights). Each half-update multiplies the current factor by a ratio of
nonnegative matrices, so the objective never increases; that monotonicity is
the backbone of the test suite. After convergence every column of A is
rescaled to unit L1 norm (rows of S absorb the inverse), which pins down the
scale ambiguity without changing the product AS.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nmfx import npyio
from nmfx.errors import SolverDivergenceError, ValidationError
from nmfx.tensors import DataMatrix

DEFAULT_MAX_ITERS = 500
DEFAULT_REL_TOL = 1e-6
DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class NmfConfig:
    k: int
    max_iters: int = DEFAULT_MAX_ITERS
    rel_tol: float = DEFAULT_REL_TOL
    seed: int = 0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"topic count k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ValidationError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not self.eps > 0:
            raise ValidationError(f"eps must be > 0, got {self.eps}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")

    def to_dict(self):
        return {
            "k": self.k,
            "max_iters": self.max_iters,
            "rel_tol": self.rel_tol,
            "seed": self.seed,
            "eps": self.eps,
        }


@dataclass(frozen=True)
class FactorModel:
    """Learned factors plus solver metadata.

    B is present only for label-supervised fits. The objective trace starts at
    the initial iterate and is non-increasing (1e-10 relative slack).
    """

    A: np.ndarray
    S: np.ndarray
    B: np.ndarray | None
    objective_trace: tuple
    iterations_run: int
    config: dict
    dims: tuple | None = None
    label_names: tuple | None = None
    mode: str = "nmf"

    @property
    def k(self):
        return self.A.shape[1]

    def save(self, out_dir):
        """Write the model directory layout: A.npy, S.npy, [B.npy], meta.json."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        npyio.save_array(out / "A.npy", self.A, dtype="<f8")
        npyio.save_array(out / "S.npy", self.S, dtype="<f8")
        if self.B is not None:
            npyio.save_array(out / "B.npy", self.B, dtype="<f8")
        meta = {
            "mode": self.mode,
            "config": self.config,
            "objective_trace": list(self.objective_trace),
            "iterations_run": self.iterations_run,
            "dims": list(self.dims) if self.dims is not None else None,
            "label_names": list(self.label_names) if self.label_names else None,
        }
        with open(out / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out

    @classmethod
    def load(cls, model_dir):
        model_dir = Path(model_dir)
        meta_path = model_dir / "meta.json"
        if not meta_path.exists():
            raise ValidationError(f"{model_dir} is not a model directory (no meta.json)")
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        a = npyio.load_array(model_dir / "A.npy")
        s = npyio.load_array(model_dir / "S.npy")
        b_path = model_dir / "B.npy"
        b = npyio.load_array(b_path) if b_path.exists() else None
        return cls(
            A=a,
            S=s,
            B=b,
            objective_trace=tuple(meta["objective_trace"]),
            iterations_run=meta["iterations_run"],
            config=meta["config"],
            dims=tuple(meta["dims"]) if meta.get("dims") else None,
            label_names=tuple(meta["label_names"]) if meta.get("label_names") else None,
            mode=meta.get("mode", "nmf"),
        )


def frobenius_sq(m):
    """Squared Frobenius norm."""
    return float(np.sum(m * m))


def reconstruction_objective(x, a, s):
    return frobenius_sq(x - a @ s)


def _check_finite(*factors):
    for f in factors:
        if not np.isfinite(f).all():
            raise SolverDivergenceError(
                "solver diverged: factor contains NaN/Inf (check eps and input data)"
            )


def _update_s(x, a, s, eps, y=None, b=None, lam=0.0):
    """Multiplicative S update; label terms join only when lam > 0."""
    num = a.T @ x
    den = (a.T @ a) @ s
    if lam > 0.0:
        num = num + lam * (b.T @ y)
        den = den + lam * ((b.T @ b) @ s)
    return s * num / (den + eps)


def _update_dictionary(x, a, s, eps):
    """Multiplicative update of a left factor against fixed weights S."""
    num = x @ s.T
    den = a @ (s @ s.T)
    return a * num / (den + eps)


def nmf_init(x: DataMatrix, cfg: NmfConfig):
    """Seeded strictly-positive init: uniform (0,1] scaled by sqrt(mean(x)/k).

    The scaling matches the magnitude of the initial product A0 @ S0 to the
    data; an eps floor keeps factors positive even for all-zero input.
    """
    if cfg.k > min(x.n1, x.n2):
        warnings.warn(
            f"k={cfg.k} exceeds min(n1, n2)={min(x.n1, x.n2)}; factorization is degenerate",
            stacklevel=2,
        )
    rng = np.random.default_rng(cfg.seed)
    scale = max(float(np.sqrt(x.data.mean() / cfg.k)), cfg.eps)
    a0 = (1.0 - rng.random((x.n1, cfg.k))) * scale
    s0 = (1.0 - rng.random((cfg.k, x.n2))) * scale
    return a0, s0


def nmf_step(x, a, s, eps=DEFAULT_EPS):
    """One Lee-Seung step: S first against the current A, then A against S'."""
    s_new = _update_s(x, a, s, eps)
    a_new = _update_dictionary(x, a, s_new, eps)
    _check_finite(a_new, s_new)
    return a_new, s_new


def normalize_columns(a, s, b=None):
    """Rescale columns of A to unit L1 norm; S rows (and B columns) absorb it.

    Leaves AS and BS unchanged. Zero columns (degenerate fits) stay untouched.
    """
    col_norm = a.sum(axis=0)
    scale = np.where(col_norm > 0, col_norm, 1.0)
    a_out = a / scale
    s_out = s * scale[:, None]
    if b is None:
        return a_out, s_out, None
    return a_out, s_out, b / scale


def _run_updates(x_raw, a, s, eps, max_iters, rel_tol, objective, step):
    trace = [objective(a, s)]
    iterations = 0
    for _ in range(max_iters):
        a, s = step(x_raw, a, s, eps)
        iterations += 1
        obj = objective(a, s)
        trace.append(obj)
        prev = trace[-2]
        if prev <= 0.0:
            break
        if (prev - obj) / prev < rel_tol:
            break
    return a, s, trace, iterations


def nmf_fit(x: DataMatrix, cfg: NmfConfig) -> FactorModel:
    """Iterate multiplicative updates until the relative objective decrease
    drops below rel_tol or max_iters is reached, then finalize scaling."""
    a, s = nmf_init(x, cfg)
    a, s, trace, iterations = _run_updates(
        x.data,
        a,
        s,
        cfg.eps,
        cfg.max_iters,
        cfg.rel_tol,
        lambda a_, s_: reconstruction_objective(x.data, a_, s_),
        nmf_step,
    )
    a, s, _ = normalize_columns(a, s)
    return FactorModel(
        A=a,
        S=s,
        B=None,
        objective_trace=tuple(trace),
        iterations_run=iterations,
        config=cfg.to_dict(),
        mode="nmf",
    )
