"""Per-topic heatmaps at image resolution and colored overlay rendering.

Weight tensors are normalized per image (all K maps of an image share one
divisor, so relative topic strength survives), bilinearly upsampled to the
input resolution, and composited over the source image: each pixel takes the
color of its strongest topic at an opacity proportional to that topic's heat.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from nmfx.errors import NegativeEntryError, ShapeMismatchError, ValidationError

# Fixed high-contrast palette; topic j gets entry j mod len.
PALETTE = (
    (255, 225, 25),   # yellow
    (230, 25, 75),    # red
    (60, 180, 75),    # green
    (0, 130, 200),    # blue
    (245, 130, 48),   # orange
    (145, 30, 180),   # purple
    (70, 240, 240),   # cyan
    (240, 50, 230),   # magenta
    (210, 245, 60),   # lime
    (250, 190, 212),  # pink
    (0, 128, 128),    # teal
    (170, 110, 40),   # brown
)


def topic_palette(k):
    """Deterministic list of k RGB triples."""
    return [PALETTE[j % len(PALETTE)] for j in range(k)]


@dataclass(frozen=True)
class HeatmapStack:
    """Normalized (n, K, H, W) maps in [0, 1] plus rendering metadata."""

    maps: np.ndarray
    topic_colors: tuple
    source_grid: tuple
    normalization: str = "per-image-max"

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim != 4:
            raise ValidationError(f"heat stack must be 4-axis, got {maps.ndim}")
        if maps.min(initial=0.0) < 0.0 or maps.max(initial=0.0) > 1.0:
            raise ValidationError("heat stack values must lie in [0, 1]")
        d1, d2 = self.source_grid
        if maps.shape[2] < d1 or maps.shape[3] < d2:
            raise ValidationError("upsampling never shrinks below the source grid")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(
            self, "topic_colors", tuple(tuple(c) for c in self.topic_colors)
        )


@dataclass(frozen=True)
class OverlayImage:
    """RGBA raster with float alpha in [0, 1] and provenance tags."""

    rgba: np.ndarray
    image_id: str = ""
    model_id: str = ""

    def __post_init__(self):
        rgba = np.asarray(self.rgba, dtype=np.float64)
        if rgba.ndim != 3 or rgba.shape[2] != 4:
            raise ValidationError("overlay raster must be (H, W, 4)")
        alpha = rgba[:, :, 3]
        if alpha.min(initial=0.0) < 0.0 or alpha.max(initial=0.0) > 1.0:
            raise ValidationError("alpha channel must lie in [0, 1]")
        object.__setattr__(self, "rgba", rgba)

    def to_uint8(self):
        return np.clip(np.rint(self.rgba * 255.0), 0, 255).astype(np.uint8)

    def save_png(self, path):
        img = Image.fromarray(self.to_uint8(), mode="RGBA")
        img.save(path, format="PNG")
        return path


def normalize_heat(heat):
    """Scale each image's K maps jointly into [0, 1] by that image's maximum.

    All-zero images stay zero. Idempotent.
    """
    heat = np.asarray(heat, dtype=np.float64)
    if heat.ndim != 4:
        raise ShapeMismatchError(f"heat tensor must be 4-axis, got {heat.ndim}")
    if (heat < 0).any():
        raise NegativeEntryError("heat tensor contains negative entries")
    peak = heat.max(axis=(1, 2, 3), keepdims=True)
    divisor = np.where(peak > 0.0, peak, 1.0)
    return heat / divisor


def binarize_heat(heat, threshold=0.5):
    """Threshold normalized heat into boolean masks."""
    return np.asarray(heat) >= threshold


def _axis_weights(src, dst):
    """Half-pixel-center bilinear sampling weights for one axis."""
    coords = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    coords = np.clip(coords, 0.0, src - 1.0)
    lo = np.floor(coords).astype(int)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    return lo, hi, frac


def upsample(heat, out_rows, out_cols):
    """Bilinear upsampling of (n, K, d1, d2) maps to (n, K, out_rows, out_cols).

    Corner alignment is off (half-pixel centers): constant maps stay constant
    and outputs never leave the [min, max] range of their source map.
    """
    heat = np.asarray(heat, dtype=np.float64)
    if heat.ndim != 4:
        raise ShapeMismatchError(f"heat tensor must be 4-axis, got {heat.ndim}")
    n, k, d1, d2 = heat.shape
    out_rows, out_cols = int(out_rows), int(out_cols)
    if out_rows < d1 or out_cols < d2:
        raise ShapeMismatchError(
            f"target ({out_rows}, {out_cols}) is smaller than source ({d1}, {d2})"
        )
    r_lo, r_hi, r_frac = _axis_weights(d1, out_rows)
    c_lo, c_hi, c_frac = _axis_weights(d2, out_cols)
    rows = heat[:, :, r_lo, :] * (1.0 - r_frac)[None, None, :, None]
    rows += heat[:, :, r_hi, :] * r_frac[None, None, :, None]
    out = rows[:, :, :, c_lo] * (1.0 - c_frac)[None, None, None, :]
    out += rows[:, :, :, c_hi] * c_frac[None, None, None, :]
    return out


def render_overlay(image, heat, colors=None, alpha_scale=0.6, image_id="", model_id=""):
    """Composite the argmax-topic color over a base image.

    ``image`` is an (H, W, 3) or (H, W) array in [0, 1] (or uint8); ``heat``
    is the normalized (K, H, W) slice for that image. Per pixel the strongest
    topic's color is blended in with alpha = alpha_scale * heat.
    """
    base = np.asarray(image)
    if base.dtype == np.uint8:
        base = base.astype(np.float64) / 255.0
    else:
        base = base.astype(np.float64)
    if base.ndim == 2:
        base = np.repeat(base[:, :, None], 3, axis=2)
    if base.ndim != 3 or base.shape[2] not in (3, 4):
        raise ShapeMismatchError(f"base image must be (H, W[, 3|4]), got {base.shape}")
    base = base[:, :, :3]
    heat = np.asarray(heat, dtype=np.float64)
    if heat.ndim != 3:
        raise ShapeMismatchError(f"heat slice must be (K, H, W), got {heat.shape}")
    if heat.shape[1:] != base.shape[:2]:
        raise ShapeMismatchError(
            f"heat grid {heat.shape[1:]} does not match image {base.shape[:2]}"
        )
    k = heat.shape[0]
    if colors is None:
        colors = topic_palette(k)
    colors = np.asarray(colors, dtype=np.float64) / 255.0
    if colors.shape != (k, 3):
        raise ShapeMismatchError(f"expected {k} RGB triples, got {colors.shape}")

    winner = heat.argmax(axis=0)
    strength = np.take_along_axis(heat, winner[None, :, :], axis=0)[0]
    alpha = np.clip(alpha_scale * strength, 0.0, 1.0)[:, :, None]
    tint = colors[winner]
    rgb = (1.0 - alpha) * base + alpha * tint
    rgba = np.concatenate([rgb, np.ones_like(rgb[:, :, :1])], axis=2)
    return OverlayImage(rgba, image_id=image_id, model_id=model_id)


def load_image(path, size=None):
    """Load an image as float RGB in [0, 1]; ``size`` is (width, height)."""
    with Image.open(path) as img:
        img = img.convert("RGB")
        if size is not None and img.size != tuple(size):
            img = img.resize(tuple(size), resample=Image.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0


def save_gray_png(path, values):
    """Write a [0, 1] float map as an 8-bit grayscale PNG."""
    arr = np.clip(np.rint(np.asarray(values) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
    return path
