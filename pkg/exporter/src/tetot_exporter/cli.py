"""Command line front end: ``tetot-exporter export`` and ``corrupt``."""

from __future__ import annotations

import argparse
import json
import sys

from .corruptions import apply_corruption, corruption_names, severity_help
from .export import export_embeddings
from .spec import SUPPORTED_ARCHS, ExporterError, ExportSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tetot-exporter",
        description="Export model embeddings and corrupted datasets "
                    "in the formats the tetot toolkit reads.",
        epilog=severity_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser(
        "export",
        help="embed an image folder into a .emb/.lbl/.hed triple",
        epilog=severity_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    exp.add_argument("--arch", required=True, choices=SUPPORTED_ARCHS)
    exp.add_argument("--checkpoint", required=True,
                     help="path to a saved exporter checkpoint")
    exp.add_argument("--data-dir", required=True,
                     help="image folder with one subdirectory per class")
    exp.add_argument("--out-stem", required=True,
                     help="output path without extension; .emb/.lbl/.hed are added")
    exp.add_argument("--batch-size", type=int, default=32)
    exp.add_argument("--device", default="cpu")
    exp.add_argument("--corruption", choices=corruption_names(),
                     help="perturb images in memory before embedding")
    exp.add_argument("--severity", type=int,
                     help="corruption strength, 1 (mild) to 5 (harsh)")
    exp.add_argument("--seed", type=int, default=0,
                     help="seed for corruption noise")
    exp.add_argument("--image-size", type=int, default=224,
                     help="square resize applied before inference")

    cor = sub.add_parser(
        "corrupt",
        help="write a corrupted copy of an image-folder dataset",
        epilog=severity_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    cor.add_argument("--data-dir", required=True)
    cor.add_argument("--out-dir", required=True)
    cor.add_argument("--corruption", required=True, choices=corruption_names())
    cor.add_argument("--severity", type=int, required=True)
    cor.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            spec = ExportSpec(
                arch=args.arch,
                checkpoint=args.checkpoint,
                data_dir=args.data_dir,
                out_stem=args.out_stem,
                batch_size=args.batch_size,
                device=args.device,
                corruption=args.corruption,
                severity=args.severity,
                seed=args.seed,
                image_size=args.image_size,
            )
            summary = export_embeddings(spec)
        else:
            summary = apply_corruption(args.data_dir, args.out_dir,
                                       args.corruption, args.severity,
                                       seed=args.seed)
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    json.dump(summary, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
