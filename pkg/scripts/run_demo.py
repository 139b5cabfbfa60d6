"""End-to-end demo on a planted fixture: generate data, factorize with and
without supervision, project, and render overlays.

Usage: python scripts/run_demo.py [OUT_DIR]
"""

import sys
from pathlib import Path

from nmfx import cli


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
    fix = out / "fixture"
    steps = [
        [
            "fixture", "--n", "12", "--p", "64", "--d1", "14", "--d2", "14",
            "--topics", "3", "--sigma", "0.02", "--seed", "0",
            "--image-size", "224", "224", "--out", str(fix),
        ],
        [
            "factorize", str(fix / "features.npy"), "--k", "3",
            "--seed", "0", "--out", str(out / "model_nmf"),
        ],
        [
            "factorize", str(fix / "features.npy"),
            "--manifest", str(fix / "manifest.json"),
            "--seed", "0", "--out", str(out / "model_ssnmf"),
        ],
        [
            "project", str(out / "model_nmf"), str(fix / "features.npy"),
            "--out", str(out / "projection"),
        ],
        [
            "render", str(out / "model_nmf"), str(fix / "manifest.json"),
            "--out-dir", str(out / "overlays_nmf"),
        ],
        [
            "render", str(out / "model_ssnmf"), str(fix / "manifest.json"),
            "--out-dir", str(out / "overlays_ssnmf"),
        ],
        ["info", str(out / "model_nmf"), str(out / "model_ssnmf")],
    ]
    for argv in steps:
        print(f"$ nmfx {' '.join(argv)}")
        code = cli.main(argv)
        if code != 0:
            return code
    print(f"\ndemo artifacts under {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
