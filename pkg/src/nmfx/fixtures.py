"""Planted-topic fixtures: synthetic feature tensors with known ground truth.

Each true topic owns a disjoint block of channels (its signature) and a
seeded rectangle per image (its spatial mask); features are the mask-weighted
sum of signatures plus optional folded-normal noise. Disjoint signatures make
the planted factors identifiable up to permutation and scale, which is what
lets recovered heatmaps be scored against the planted masks.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from nmfx.errors import ShapeMismatchError, ValidationError
from nmfx.tensors import FeatureTensor


@dataclass(frozen=True)
class PlantedSpec:
    """Recipe for one synthetic dataset.

    ``active_topics`` restricts which topics appear in each image (None means
    all of them); ``column_split`` confines topic j to its own vertical band
    so masks of co-active topics never overlap.
    """

    n: int
    p: int
    grid: tuple = (14, 14)
    k_true: int = 3
    sigma: float = 0.0
    seed: int = 0
    rect_sides: tuple = (4, 9)
    signature_norm: float = 10.0
    with_labels: bool = True
    active_topics: tuple | None = None
    column_split: bool = False

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValidationError("need at least one image and one channel")
        if self.k_true < 1 or self.k_true > self.p:
            raise ValidationError(
                f"k_true={self.k_true} needs disjoint channel blocks within p={self.p}"
            )
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        d1, d2 = self.grid
        lo, hi = self.rect_sides
        if not 1 <= lo <= hi:
            raise ValidationError(f"bad rectangle side range {self.rect_sides}")
        if lo > min(d1, d2):
            raise ValidationError("smallest rectangle does not fit the grid")
        if self.active_topics is not None:
            if len(self.active_topics) != self.n:
                raise ValidationError("active_topics must list one tuple per image")
            for topics in self.active_topics:
                if any(not 0 <= t < self.k_true for t in topics):
                    raise ValidationError("active topic index out of range")


def _signatures(spec, rng):
    """One nonnegative p-vector per topic, supports pairwise disjoint."""
    bounds = np.linspace(0, spec.p, spec.k_true + 1).astype(int)
    sigs = np.zeros((spec.k_true, spec.p))
    for j in range(spec.k_true):
        lo, hi = bounds[j], bounds[j + 1]
        block = rng.uniform(0.5, 1.5, hi - lo)
        sigs[j, lo:hi] = block * (spec.signature_norm / block.sum())
    return sigs


def _rectangle(rng, d1, d2, sides, col_band=None):
    lo, hi = sides
    c_lo, c_hi = (0, d2) if col_band is None else col_band
    band = c_hi - c_lo
    h = int(rng.integers(min(lo, d1), min(hi, d1) + 1))
    w = int(rng.integers(min(lo, band), min(hi, band) + 1))
    top = int(rng.integers(0, d1 - h + 1))
    left = c_lo + int(rng.integers(0, band - w + 1))
    return top, left, h, w


def generate(spec: PlantedSpec):
    """Build (features, masks, labels) from a planted spec; seeded-deterministic.

    masks is a boolean (n, k_true, d1, d2) tensor; labels are per-image
    dominant-topic indices (largest mask area, ties to the lowest index) or
    None when the spec is unlabeled.
    """
    rng = np.random.default_rng(spec.seed)
    d1, d2 = spec.grid
    sigs = _signatures(spec, rng)
    masks = np.zeros((spec.n, spec.k_true, d1, d2), dtype=bool)
    for i in range(spec.n):
        active = (
            range(spec.k_true)
            if spec.active_topics is None
            else spec.active_topics[i]
        )
        for j in active:
            band = None
            if spec.column_split:
                width = d2 // spec.k_true
                band = (j * width, (j + 1) * width if j < spec.k_true - 1 else d2)
            top, left, h, w = _rectangle(rng, d1, d2, spec.rect_sides, band)
            masks[i, j, top : top + h, left : left + w] = True

    features = np.einsum("ijrc,jp->iprc", masks.astype(np.float64), sigs)
    if spec.sigma > 0:
        features += spec.sigma * np.abs(
            rng.standard_normal((spec.n, spec.p, d1, d2))
        )
    labels = None
    if spec.with_labels:
        areas = masks.reshape(spec.n, spec.k_true, -1).sum(axis=2)
        labels = [int(np.argmax(areas[i])) for i in range(spec.n)]
    return FeatureTensor(features), masks, labels


def two_group_spec(n=24, p=32, grid=(14, 14), seed=0, sigma=0.0, signature_norm=2.0):
    """Visually-mixed two-group fixture: both planted visual factors appear in
    every image, so the image halves declared by :func:`group_labels` are
    indistinguishable to an unsupervised rank-2 fit (its topics track the
    visual factors and spread across both groups). Only supervision can pull
    topics toward the group split. The small signature norm keeps the
    reconstruction term from drowning the label term at lambda = 1.
    """
    if n % 2:
        raise ValidationError("two-group fixture needs an even image count")
    return PlantedSpec(
        n=n,
        p=p,
        grid=grid,
        k_true=2,
        sigma=sigma,
        seed=seed,
        rect_sides=(3, 6),
        signature_norm=signature_norm,
        column_split=True,
    )


def separable_two_group_spec(n=24, p=32, grid=(14, 14), seed=0, signature_norm=10.0):
    """Separable counterpart: group-g images contain only topic g, so labels
    and visual factors coincide."""
    if n % 2:
        raise ValidationError("two-group fixture needs an even image count")
    half = n // 2
    active = tuple([(0,)] * half + [(1,)] * half)
    return PlantedSpec(
        n=n,
        p=p,
        grid=grid,
        k_true=2,
        seed=seed,
        rect_sides=(3, 6),
        signature_norm=signature_norm,
        active_topics=active,
    )


def group_labels(spec: PlantedSpec):
    """Group index per image for the two-group fixtures: first half 0, rest 1."""
    half = spec.n // 2
    return [0] * half + [1] * (spec.n - half)


def _topic_axis(masks):
    if masks.ndim == 4:
        return 1
    if masks.ndim == 3:
        return 0
    raise ShapeMismatchError(f"masks must be 3- or 4-axis, got {masks.ndim}")


def iou(pred, true):
    """Mean intersection-over-union under the best topic-to-truth matching.

    Pairwise IoU is pooled over all images and pixels; the Hungarian
    assignment maximizes total IoU before averaging. A pair that is empty on
    both sides counts as a perfect 1.0.
    """
    pred = np.asarray(pred, dtype=bool)
    true = np.asarray(true, dtype=bool)
    if pred.shape != true.shape:
        raise ShapeMismatchError(f"mask shapes differ: {pred.shape} vs {true.shape}")
    axis = _topic_axis(pred)
    k = pred.shape[axis]
    pred = np.moveaxis(pred, axis, 0).reshape(k, -1)
    true = np.moveaxis(true, axis, 0).reshape(k, -1)
    inter = (pred[:, None, :] & true[None, :, :]).sum(axis=2).astype(np.float64)
    union = (pred[:, None, :] | true[None, :, :]).sum(axis=2).astype(np.float64)
    scores = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 1.0)
    rows, cols = linear_sum_assignment(scores, maximize=True)
    return float(scores[rows, cols].mean())


def label_mass_shares(s, labels, dims, l):
    """Fraction of each topic's weight mass that falls on each label's columns.

    Returns a (k, l) matrix; row j sums to at most 1 (unlabeled images'
    columns contribute to the denominator only).
    """
    s = np.asarray(s, dtype=np.float64)
    n, d1, d2 = (int(v) for v in dims)
    per_image = d1 * d2
    if s.shape[1] != n * per_image:
        raise ShapeMismatchError(
            f"weights have {s.shape[1]} columns, dims {(n, d1, d2)} require {n * per_image}"
        )
    totals = s.sum(axis=1)
    shares = np.zeros((s.shape[0], l))
    for g in range(l):
        cols = np.zeros(s.shape[1], dtype=bool)
        for i, lab in enumerate(labels):
            if lab == g:
                cols[i * per_image : (i + 1) * per_image] = True
        mass = s[:, cols].sum(axis=1)
        shares[:, g] = np.where(totals > 0, mass / np.where(totals > 0, totals, 1.0), 0.0)
    return shares
