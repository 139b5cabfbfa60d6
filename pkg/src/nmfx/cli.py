"""Command-line front end: validate -> factorize -> project -> render.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O failure.
NMFX_THREADS caps BLAS parallelism (default 1, which keeps every artifact
byte-reproducible for a fixed seed).
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import nmfx  # noqa: F401  (sets thread caps before numpy loads)
import numpy as np

from nmfx import npyio
from nmfx.errors import NmfxError, SolverError, ValidationError
from nmfx.fixtures import PlantedSpec, generate
from nmfx.heatmap import (
    load_image,
    normalize_heat,
    render_overlay,
    save_gray_png,
    topic_palette,
    upsample,
)
from nmfx.manifest import DatasetManifest, ManifestEntry
from nmfx.nmf import FactorModel, NmfConfig, nmf_fit
from nmfx.nnls import NnlsConfig, project
from nmfx.ssnmf import DEFAULT_LAMBDA, SsnmfConfig, build_label_matrix, ssnmf_fit
from nmfx.tensors import FeatureTensor, flatten_features, unflatten_weights

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _fail(message):
    print(f"nmfx: error: {message}", file=sys.stderr)


def cmd_factorize(args):
    features = FeatureTensor.load(args.features)
    n, p, d1, d2 = features.data.shape

    manifest = None
    if args.manifest:
        manifest = DatasetManifest.load(Path(args.manifest))
        if manifest.dims != (n, p, d1, d2):
            raise ValidationError(
                f"manifest dims {manifest.dims} disagree with features {(n, p, d1, d2)}"
            )
    labels_present = manifest is not None and manifest.has_labels()

    lam = args.lam
    if lam is None:
        lam = DEFAULT_LAMBDA if labels_present else 0.0
    if lam > 0 and not labels_present:
        raise ValidationError("--lambda > 0 needs a manifest with labels")

    k = args.k
    if k is None:
        if labels_present:
            k = len(manifest.label_names)
        else:
            raise ValidationError("--k is required when no labels are available")

    x = flatten_features(features)
    if lam > 0:
        cfg = SsnmfConfig(
            k=k, max_iters=args.max_iters, rel_tol=args.tol, seed=args.seed, lam=lam
        )
        y = build_label_matrix(
            manifest.row_labels(),
            len(manifest.label_names),
            (n, d1, d2),
            label_names=manifest.label_names,
        )
        model = ssnmf_fit(x, y, cfg)
    else:
        cfg = NmfConfig(k=k, max_iters=args.max_iters, rel_tol=args.tol, seed=args.seed)
        model = nmf_fit(x, cfg)

    label_names = manifest.label_names if labels_present else None
    model = dataclasses.replace(model, dims=(n, d1, d2), label_names=label_names)
    model.save(args.out)
    print(f"wrote model to {args.out} (mode={model.mode}, k={k})")
    return EXIT_OK


def cmd_project(args):
    model = FactorModel.load(args.model)
    features = FeatureTensor.load(args.features)
    n, p, d1, d2 = features.data.shape
    x_test = flatten_features(features)
    s_test = project(model.A, x_test, NnlsConfig(kkt_tol=args.kkt_tol))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    npyio.save_array(out / "S_test.npy", s_test, dtype="<f8")
    heat = unflatten_weights(s_test, (n, d1, d2))
    npyio.save_array(out / "heat.npy", heat, dtype="<f8")
    print(f"wrote S_test.npy and heat.npy to {out}")
    return EXIT_OK


def _resolve_heat(source):
    """A render source is a model directory or a 4-axis heat .npy file."""
    source = Path(source)
    if source.is_dir():
        model = FactorModel.load(source)
        if model.dims is None:
            raise ValidationError(f"model {source} lacks dims metadata; cannot reshape S")
        return unflatten_weights(model.S, model.dims)
    heat = npyio.load_array(source)
    if heat.ndim != 4:
        raise ValidationError(f"heat file must be 4-axis (n, K, d1, d2), got {heat.shape}")
    return heat


def cmd_render(args):
    heat = _resolve_heat(args.source)
    manifest = DatasetManifest.load(Path(args.manifest))
    n, k = heat.shape[:2]
    if manifest.n_images != n:
        raise ValidationError(
            f"manifest lists {manifest.n_images} feature rows, heat tensor has {n}"
        )
    paths = manifest.row_image_paths()
    missing = sorted({str(p) for p in paths if not p.exists()})
    if missing:
        _fail("missing image files: " + ", ".join(missing))
        return EXIT_IO

    width, height = manifest.image_size
    heat = normalize_heat(heat)
    heat = upsample(heat, height, width)
    colors = topic_palette(k)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = manifest.row_image_ids()
    count = 0
    for r in range(n):
        base = load_image(paths[r], size=(width, height))
        overlay = render_overlay(
            base,
            heat[r],
            colors=colors,
            alpha_scale=args.alpha,
            image_id=ids[r],
            model_id=str(args.source),
        )
        overlay.save_png(out_dir / f"{ids[r]}_overlay.png")
        count += 1
        for j in range(k):
            save_gray_png(out_dir / f"{ids[r]}_topic{j}.png", heat[r, j])
            count += 1
    print(f"wrote {count} PNGs to {out_dir}")
    return EXIT_OK


def cmd_fixture(args):
    spec = PlantedSpec(
        n=args.n,
        p=args.p,
        grid=(args.d1, args.d2),
        k_true=args.topics,
        sigma=args.sigma,
        seed=args.seed,
        with_labels=not args.unlabeled,
    )
    features, masks, labels = generate(spec)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)

    npyio.save_array(out / "features.npy", features.data, dtype=args.dtype)
    npyio.save_array(out / "masks.npy", masks.astype(np.float64), dtype=args.dtype)

    width, height = args.image_size
    # Base images: grayscale rendering of the combined planted masks.
    combined = masks.astype(np.float64).sum(axis=1, keepdims=True)
    combined = normalize_heat(combined)
    combined = upsample(combined, height, width)
    label_names = [f"topic{j}" for j in range(spec.k_true)] if labels else []
    entries = []
    for i in range(spec.n):
        name = f"images/img{i:03d}.png"
        save_gray_png(out / name, 0.2 + 0.6 * combined[i, 0])
        entries.append(
            ManifestEntry(
                image=name,
                rows=(i, i + 1),
                label=f"topic{labels[i]}" if labels else None,
            )
        )
    manifest = DatasetManifest(
        feature_file="features.npy",
        dims=features.data.shape,
        image_size=(width, height),
        label_names=tuple(label_names),
        entries=tuple(entries),
        base_dir=out,
    )
    manifest.save(out / "manifest.json")
    print(f"wrote fixture ({spec.n} images, {spec.k_true} topics) to {out}")
    return EXIT_OK


def _validate_npy(path):
    with open(path, "rb") as fh:
        header = npyio.read_header(fh)
    data = npyio.load_array(path)
    if not np.isfinite(data).all():
        raise ValidationError(f"{path}: contains non-finite entries")
    if (data < 0).any():
        raise ValidationError(f"{path}: contains negative entries")
    return f"{path}: ok ({header.descr}, shape {header.shape})"


def _validate_manifest(path):
    manifest = DatasetManifest.load(path)
    manifest.check_against_feature_file()
    for p in manifest.row_image_paths():
        if not p.exists():
            raise ValidationError(f"{path}: referenced image missing: {p}")
    return f"{path}: ok ({manifest.n_images} images, {len(manifest.label_names)} labels)"


def _validate_model(path):
    model = FactorModel.load(path)
    k = model.config.get("k")
    if model.A.shape[1] != k or model.S.shape[0] != k:
        raise ValidationError(f"{path}: factor shapes disagree with configured k={k}")
    if model.dims is not None:
        n, d1, d2 = model.dims
        if model.S.shape[1] != n * d1 * d2:
            raise ValidationError(
                f"{path}: S has {model.S.shape[1]} columns, dims {model.dims} require {n * d1 * d2}"
            )
    if (model.A < 0).any() or (model.S < 0).any():
        raise ValidationError(f"{path}: factors contain negative entries")
    if model.B is not None and model.B.shape[1] != k:
        raise ValidationError(f"{path}: B shape {model.B.shape} disagrees with k={k}")
    return f"{path}: ok (mode={model.mode}, k={k})"


def _validate_one(path):
    path = Path(path)
    if path.is_dir():
        return _validate_model(path)
    if path.suffix == ".json":
        return _validate_manifest(path)
    return _validate_npy(path)


def cmd_validate(args):
    for path in args.paths:
        print(_validate_one(path))
    return EXIT_OK


def cmd_info(args):
    for raw in args.paths:
        path = Path(raw)
        if path.is_dir():
            model = FactorModel.load(path)
            final = model.objective_trace[-1] if model.objective_trace else float("nan")
            print(
                f"{path}: model mode={model.mode} k={model.k} "
                f"A{model.A.shape} S{model.S.shape} "
                f"iterations={model.iterations_run} final_objective={final:.6g}"
            )
        elif path.suffix == ".json":
            manifest = DatasetManifest.load(path)
            print(
                f"{path}: manifest images={manifest.n_images} dims={manifest.dims} "
                f"image_size={manifest.image_size} labels={list(manifest.label_names)}"
            )
        else:
            with open(path, "rb") as fh:
                header = npyio.read_header(fh)
            print(f"{path}: npy dtype={header.descr} shape={header.shape}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nmfx",
        description="Explain feature activations with K inspectable spatial topics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="fit NMF/SSNMF topics on a feature file")
    p.add_argument("features", help="feature tensor (.npy, shape n x p x d1 x d2)")
    p.add_argument("--manifest", help="dataset manifest (enables labels)")
    p.add_argument("--k", type=int, default=None, help="topic count (default: label count)")
    p.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=None,
        help="label term weight; > 0 selects the supervised objective (default 1.0 with labels)",
    )
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6, help="relative objective-decrease stop")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("project", help="NNLS-project held-out features onto a model")
    p.add_argument("model", help="model directory")
    p.add_argument("features", help="held-out feature tensor (.npy)")
    p.add_argument("--kkt-tol", type=float, default=1e-8)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("render", help="render per-topic overlays at image resolution")
    p.add_argument("source", help="model directory or heat tensor (.npy)")
    p.add_argument("manifest", help="dataset manifest with image paths")
    p.add_argument("--alpha", type=float, default=0.6, help="overlay opacity scale")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("fixture", help="generate a planted synthetic dataset")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--p", type=int, default=64)
    p.add_argument("--d1", type=int, default=14)
    p.add_argument("--d2", type=int, default=14)
    p.add_argument("--topics", type=int, default=3, help="number of planted topics")
    p.add_argument("--sigma", type=float, default=0.01, help="noise level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, nargs=2, default=(224, 224), metavar=("W", "H"))
    p.add_argument("--dtype", choices=["<f4", "<f8"], default="<f4")
    p.add_argument("--unlabeled", action="store_true", help="omit labels from the manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("validate", help="check array files, manifests, and model dirs")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="print a summary of files and model directories")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_info)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        _fail(str(exc))
        return EXIT_SOLVER
    except NmfxError as exc:
        _fail(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
