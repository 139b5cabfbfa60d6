"""Run a CNN backbone over an image directory and export activations.

Tap points are fixed per backbone: for VGG-16 the output of the ReLU that
follows the last convolution (feature-stack index 29), for EfficientNet-B3
the output of the top feature activation. Images are resized to the
backbone's native resolution and normalized with its published statistics.
The export is an NPY v1.0 float tensor of shape (n, p, d1, d2) plus a JSON
manifest; both match the formats the nmfx CLI validates and consumes.
"""

import csv
import json
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

BACKBONES = {
    "vgg16": {"input_size": (224, 224), "channels": 512, "grid": (14, 14)},
    "efficientnet-b3": {"input_size": (300, 300), "channels": 1536, "grid": (10, 10)},
}

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tiff", ".webp"}


@dataclass(frozen=True)
class ExtractorConfig:
    backbone: str = "vgg16"
    weights: str = "pretrained"  # "pretrained", "none", or a state-dict path
    dtype: str = "<f4"
    batch_size: int = 8

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(
                f"unknown backbone {self.backbone!r}; expected one of {sorted(BACKBONES)}"
            )
        if self.dtype not in ("<f4", "<f8"):
            raise ValueError(f"export dtype must be '<f4' or '<f8', got {self.dtype!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def input_size(self):
        return BACKBONES[self.backbone]["input_size"]


def _build_tap(config: ExtractorConfig):
    """Return a module mapping a normalized batch to the tapped activation."""
    import torchvision.models as models

    torch.manual_seed(0)  # "none" weights stay reproducible
    if config.backbone == "vgg16":
        weights = models.VGG16_Weights.IMAGENET1K_V1 if config.weights == "pretrained" else None
        net = models.vgg16(weights=weights)
        if config.weights not in ("pretrained", "none"):
            state = torch.load(config.weights, map_location="cpu", weights_only=True)
            net.load_state_dict(state)
        tap = net.features[:30]  # through the ReLU after the last conv
        clamp = False
    else:
        weights = (
            models.EfficientNet_B3_Weights.IMAGENET1K_V1
            if config.weights == "pretrained"
            else None
        )
        net = models.efficientnet_b3(weights=weights)
        if config.weights not in ("pretrained", "none"):
            state = torch.load(config.weights, map_location="cpu", weights_only=True)
            net.load_state_dict(state)
        tap = net.features
        clamp = True  # the top activation can dip slightly negative
    tap.eval()
    return tap, clamp


def _load_batch(paths, size):
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    batch = []
    for path in paths:
        with Image.open(path) as img:
            img = img.convert("RGB").resize(size, resample=Image.BILINEAR)
            arr = torch.from_numpy(
                np.asarray(img, dtype=np.float32).transpose(2, 0, 1) / 255.0
            )
        batch.append((arr - mean) / std)
    return torch.stack(batch)


def _list_images(image_dir):
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory not found: {image_dir}")
    paths = sorted(
        (p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )
    if not paths:
        raise ValueError(f"no images found in {image_dir}")
    return paths


def _read_labels(labels_csv):
    """filename,label rows; returns (filename -> label) map."""
    mapping = {}
    with open(labels_csv, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "filename":
                continue
            if len(row) < 2:
                continue
            mapping[row[0].strip()] = row[1].strip()
    return mapping


def extract(image_dir, out_dir, config: ExtractorConfig = ExtractorConfig(), labels_csv=None):
    """Export features.npy + manifest.json for every decodable image.

    Undecodable files are skipped with a warning and recorded in the
    manifest's ``skipped`` list; raises if nothing decodable remains.
    """
    torch.set_num_threads(1)
    paths = _list_images(image_dir)
    label_map = _read_labels(labels_csv) if labels_csv else {}

    decodable, skipped = [], []
    for path in paths:
        try:
            with Image.open(path) as img:
                img.verify()
            decodable.append(path)
        except Exception as exc:  # undecodable image
            warnings.warn(f"skipping undecodable image {path.name}: {exc}", stacklevel=2)
            skipped.append(path.name)
    if not decodable:
        raise ValueError(f"no decodable images in {image_dir}")

    tap, clamp = _build_tap(config)
    size = config.input_size
    chunks = []
    with torch.no_grad():
        for start in range(0, len(decodable), config.batch_size):
            batch = _load_batch(decodable[start : start + config.batch_size], size)
            out = tap(batch)
            if clamp:
                out = torch.clamp(out, min=0.0)
            chunks.append(out.numpy())
    features = np.concatenate(chunks, axis=0)
    features = features.astype(np.float32 if config.dtype == "<f4" else np.float64)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    np.save(out_dir / "features.npy", features)

    label_names = sorted({label_map[p.name] for p in decodable if p.name in label_map})
    entries = []
    for row, path in enumerate(decodable):
        entries.append(
            {
                "image": _relative_posix(path, out_dir),
                "rows": [row, row + 1],
                "label": label_map.get(path.name),
            }
        )
    manifest = {
        "feature_file": "features.npy",
        "dims": list(features.shape),
        "image_size": list(size),
        "label_names": label_names,
        "entries": entries,
        "skipped": skipped,
        "extractor": {
            "backbone": config.backbone,
            "weights": config.weights,
            "input_size": list(size),
        },
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return features.shape, out_dir


def _relative_posix(path, base):
    """Forward-slash path of ``path`` relative to ``base`` (walking up if needed)."""
    path = Path(path).resolve()
    base = Path(base).resolve()
    try:
        return path.relative_to(base).as_posix()
    except ValueError:
        import os

        return Path(os.path.relpath(path, base)).as_posix()
