import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def nmfx_cli(*args):
    """Invoke the primary toolkit's CLI; the extractor talks to it only
    through this surface and the files it exchanges."""
    return subprocess.run(
        [sys.executable, "-m", "nmfx.cli", *[str(a) for a in args]],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def weights_mode():
    """Pretrained weights need a download; fall back to seeded random weights
    when the hub cache is absent so the suite runs offline."""
    cache = Path.home() / ".cache" / "torch" / "hub" / "checkpoints"
    if cache.exists() and any(cache.glob("vgg16-*.pth")):
        return "pretrained"
    return "none"


def make_images(directory, count, size=(224, 224), seed=0):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        arr = rng.integers(0, 256, (size[1], size[0], 3), dtype=np.uint8)
        path = directory / f"img{i:03d}.png"
        Image.fromarray(arr, mode="RGB").save(path)
        paths.append(path)
    return paths
