"""Dataset manifest: JSON sidecar tying a feature file to images and labels.

Paths are UTF-8 forward-slash strings relative to the manifest's directory.
Every entry owns a half-open feature row-range; the ranges partition [0, n).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from nmfx import npyio
from nmfx.errors import ValidationError


@dataclass(frozen=True)
class ManifestEntry:
    image: str
    rows: tuple
    label: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    feature_file: str
    dims: tuple  # (n, p, d1, d2)
    image_size: tuple  # (width, height)
    label_names: tuple
    entries: tuple
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        object.__setattr__(self, "image_size", tuple(int(v) for v in self.image_size))
        object.__setattr__(self, "label_names", tuple(self.label_names))
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "base_dir", Path(self.base_dir))
        self._check()

    def _check(self):
        if len(self.dims) != 4 or any(v < 1 for v in self.dims):
            raise ValidationError(f"dims must be four positive ints, got {self.dims}")
        if len(self.image_size) != 2 or any(v < 1 for v in self.image_size):
            raise ValidationError(f"image_size must be (width, height), got {self.image_size}")
        if len(set(self.label_names)) != len(self.label_names):
            raise ValidationError("label names must be unique")
        n = self.dims[0]
        seen = []
        for e in self.entries:
            lo, hi = e.rows
            if not 0 <= lo < hi <= n:
                raise ValidationError(
                    f"entry {e.image!r}: row range {e.rows} outside [0, {n})"
                )
            if e.label is not None and e.label not in self.label_names:
                raise ValidationError(
                    f"entry {e.image!r}: class {e.label!r} not in label list {list(self.label_names)}"
                )
            seen.extend(range(lo, hi))
        if sorted(seen) != list(range(n)):
            raise ValidationError(
                f"entry row ranges must partition [0, {n}) exactly; covered {sorted(set(seen))}"
            )

    @property
    def n_images(self):
        return self.dims[0]

    def image_path(self, entry: ManifestEntry) -> Path:
        return self.base_dir / Path(entry.image)

    def row_labels(self):
        """Per-feature-row class index (None where unlabeled)."""
        index = {name: g for g, name in enumerate(self.label_names)}
        labels = [None] * self.n_images
        for e in self.entries:
            if e.label is None:
                continue
            for r in range(*e.rows):
                labels[r] = index[e.label]
        return labels

    def row_image_ids(self):
        """Stable identifier per feature row, derived from image filenames."""
        ids = [None] * self.n_images
        for e in self.entries:
            stem = Path(e.image).stem
            lo, hi = e.rows
            for offset, r in enumerate(range(lo, hi)):
                ids[r] = stem if hi - lo == 1 else f"{stem}_{offset}"
        return ids

    def row_image_paths(self):
        paths = [None] * self.n_images
        for e in self.entries:
            for r in range(*e.rows):
                paths[r] = self.image_path(e)
        return paths

    def has_labels(self):
        return bool(self.label_names) and any(e.label is not None for e in self.entries)

    def check_against_feature_file(self):
        """Cross-check dims with the referenced feature file's header."""
        path = self.base_dir / Path(self.feature_file)
        with open(path, "rb") as fh:
            header = npyio.read_header(fh)
        if header.shape != self.dims:
            raise ValidationError(
                f"manifest dims {self.dims} disagree with feature header shape {header.shape}"
            )

    def to_dict(self):
        return {
            "feature_file": self.feature_file,
            "dims": list(self.dims),
            "image_size": list(self.image_size),
            "label_names": list(self.label_names),
            "entries": [
                {"image": e.image, "rows": list(e.rows), "label": e.label}
                for e in self.entries
            ],
        }

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"manifest is not valid JSON: {exc}") from exc
        required = {"feature_file", "dims", "image_size", "label_names", "entries"}
        missing = required - set(raw)
        if missing:
            raise ValidationError(f"manifest is missing keys: {sorted(missing)}")
        entries = []
        for item in raw["entries"]:
            if "image" not in item or "rows" not in item:
                raise ValidationError(f"manifest entry needs image and rows: {item}")
            entries.append(
                ManifestEntry(
                    image=item["image"],
                    rows=tuple(item["rows"]),
                    label=item.get("label"),
                )
            )
        return cls(
            feature_file=raw["feature_file"],
            dims=tuple(raw["dims"]),
            image_size=tuple(raw["image_size"]),
            label_names=tuple(raw["label_names"]),
            entries=tuple(entries),
            base_dir=path.parent,
        )
