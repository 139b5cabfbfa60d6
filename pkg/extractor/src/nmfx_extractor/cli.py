"""CLI for the feature exporter: nmfx-extract --backbone vgg16 --images DIR --out DIR."""

import argparse
import sys

from nmfx_extractor.extract import BACKBONES, ExtractorConfig, extract


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nmfx-extract",
        description="Export CNN backbone activations as nmfx feature + manifest files.",
    )
    parser.add_argument("--backbone", choices=sorted(BACKBONES), default="vgg16")
    parser.add_argument("--images", required=True, help="directory of input images")
    parser.add_argument("--labels", default=None, help="optional filename,label CSV")
    parser.add_argument(
        "--weights",
        default="pretrained",
        help="'pretrained' (default), 'none' (seeded random), or a state-dict path",
    )
    parser.add_argument("--dtype", choices=["<f4", "<f8"], default="<f4")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(
        backbone=args.backbone,
        weights=args.weights,
        dtype=args.dtype,
        batch_size=args.batch_size,
    )
    try:
        shape, out_dir = extract(args.images, args.out, config, labels_csv=args.labels)
    except (FileNotFoundError, ValueError) as exc:
        print(f"nmfx-extract: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote features {shape} and manifest.json to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
