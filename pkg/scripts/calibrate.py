"""Ad-hoc calibration runs backing the tolerances frozen in the test suite.

Each section prints the observed statistic across seeds so the thresholds in
tests/ can be checked against fresh data after solver changes.
"""

import time

import numpy as np

from nmfx import (
    DataMatrix,
    NmfConfig,
    PlantedSpec,
    SsnmfConfig,
    binarize_heat,
    build_label_matrix,
    flatten_features,
    generate,
    iou,
    label_mass_shares,
    nmf_fit,
    normalize_heat,
    ssnmf_fit,
    two_group_spec,
    unflatten_weights,
)
from nmfx.fixtures import group_labels


def rel_error(x, model):
    return float(
        np.linalg.norm(x.data - model.A @ model.S) / np.linalg.norm(x.data)
    )


def planted_matrix(rng, n1, n2, k, sparsity=0.0):
    a = rng.uniform(0.0, 1.0, (n1, k))
    s = rng.uniform(0.0, 1.0, (k, n2))
    if sparsity > 0:
        a *= rng.random((n1, k)) > sparsity
        s *= rng.random((k, n2)) > sparsity
        a += 1e-3  # keep columns nonzero
    return DataMatrix(a @ s)


def section_rank4():
    for sparsity in (0.0, 0.5, 0.7):
        print(f"== planted rank-4 recovery (64x500, k=4, 500 iters, sparsity {sparsity}) ==")
        errs = []
        for seed in range(10):
            rng = np.random.default_rng(1000 + seed)
            x = planted_matrix(rng, 64, 500, 4, sparsity)
            model = nmf_fit(x, NmfConfig(k=4, max_iters=500, rel_tol=0.0, seed=seed))
            errs.append(rel_error(x, model))
        print(f"  rel errors: min={min(errs):.2e} max={max(errs):.2e}")


def section_exact_rank():
    print("== exact-rank sigma=0 fixtures (disjoint masks), K* in {1,2,4} ==")
    for k in (1, 2, 4):
        worst = 0.0
        for seed in range(5):
            spec = PlantedSpec(
                n=8, p=32, grid=(12, 12), k_true=k, sigma=0.0, seed=seed,
                rect_sides=(3, 5), column_split=True,
            )
            f, _, _ = generate(spec)
            x = flatten_features(f)
            model = nmf_fit(x, NmfConfig(k=k, max_iters=500, rel_tol=0.0, seed=seed))
            worst = max(worst, rel_error(x, model))
        print(f"  K*={k}: worst rel error {worst:.2e}")


def section_mask_iou():
    print("== planted-mask recovery (K*=3, sigma=0.01, n=40, p=64, 14x14) ==")
    t0 = time.time()
    scores = []
    for seed in range(10):
        spec = PlantedSpec(n=40, p=64, grid=(14, 14), k_true=3, sigma=0.01, seed=seed)
        f, masks, _ = generate(spec)
        x = flatten_features(f)
        model = nmf_fit(x, NmfConfig(k=3, max_iters=500, rel_tol=1e-7, seed=seed))
        heat = unflatten_weights(model.S, f.dims)
        pred = binarize_heat(normalize_heat(heat), 0.5)
        scores.append(iou(pred, masks))
    print(
        f"  IoU: min={min(scores):.3f} mean={np.mean(scores):.3f} "
        f"({time.time() - t0:.1f}s total)"
    )


def section_ssnmf_planted():
    print("== ssnmf planted (l=k=2, n1=16, n2=200, lambda=1) ==")
    ratios = []
    for seed in range(10):
        rng = np.random.default_rng(2000 + seed)
        a_true = rng.uniform(0.2, 1.0, (16, 2))
        topics = rng.integers(0, 2, 200)
        mags = rng.uniform(0.5, 1.5, 200)
        s_true = np.zeros((2, 200))
        s_true[topics, np.arange(200)] = 1.0
        x = DataMatrix(a_true @ s_true)
        y = build_label_matrix(topics.tolist(), 2, (200, 1, 1))
        cfg = SsnmfConfig(k=2, max_iters=500, rel_tol=0.0, seed=seed, lam=1.0)
        model = ssnmf_fit(x, y, cfg)
        ratios.append(model.objective_trace[-1] / np.linalg.norm(x.data) ** 2)
    print(f"  joint objective / ||X||_F^2: max={max(ratios):.2e}")


def section_two_group():
    print("== two-group supervision steering ==")
    spec = two_group_spec(seed=5)
    f, _, _ = generate(spec)
    x = flatten_features(f)
    groups = group_labels(spec)
    dims = f.dims
    for seed in range(12):
        m_u = nmf_fit(x, NmfConfig(k=2, max_iters=400, rel_tol=1e-9, seed=seed))
        su = label_mass_shares(m_u.S, groups, dims, 2).max(axis=1)
        y = build_label_matrix(groups, 2, dims)
        m_s = ssnmf_fit(
            x, y, SsnmfConfig(k=2, max_iters=400, rel_tol=1e-9, seed=seed, lam=1.0)
        )
        ss = label_mass_shares(m_s.S, groups, dims, 2)
        picks = ss.argmax(axis=1)
        print(
            f"  seed {seed}: unsup shares {np.round(su, 3)} | "
            f"sup shares {np.round(ss.max(axis=1), 3)} picks {picks}"
        )


def section_b_argmax():
    print("== lambda=1e6 on separable data: B argmax assigns distinct labels ==")
    from nmfx.fixtures import separable_two_group_spec

    for seed in range(5):
        spec = separable_two_group_spec(seed=3)
        f, _, _ = generate(spec)
        x = flatten_features(f)
        groups = group_labels(spec)
        y = build_label_matrix(groups, 2, f.dims)
        m = ssnmf_fit(
            x, y, SsnmfConfig(k=2, max_iters=400, rel_tol=0.0, seed=seed, lam=1e6)
        )
        picks = m.B.argmax(axis=0)
        print(f"  seed {seed}: topic->label {picks.tolist()}")


def section_rank1_identity():
    print("== rank-1 NMF of I_2: grid-search oracle vs solver ==")
    best = np.inf
    for theta in np.linspace(0, np.pi / 2, 20001):
        u = np.array([np.cos(theta), np.sin(theta)])
        x = np.eye(2)
        coeffs = np.maximum(u @ x, 0.0) / (u @ u)
        best = min(best, float(np.sum((x - np.outer(u, coeffs)) ** 2)))
    print(f"  oracle minimum objective: {best:.8f}")
    x = DataMatrix(np.eye(2) + 0.0)
    model = nmf_fit(x, NmfConfig(k=1, max_iters=2000, rel_tol=0.0, seed=0))
    print(f"  solver converged objective: {model.objective_trace[-1]:.8f}")


if __name__ == "__main__":
    section_rank1_identity()
    section_rank4()
    section_exact_rank()
    section_mask_iou()
    section_ssnmf_planted()
    section_two_group()
    section_b_argmax()
