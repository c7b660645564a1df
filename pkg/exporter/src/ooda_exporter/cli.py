"""Export command: pretrained classifier + dataset -> .ooda activation dump."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import ExportError, ExportJob, export_activations


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ooda-export",
        description=(
            "Run a pretrained image classifier over a dataset and write "
            "logits plus penultimate features in the .ooda interchange format."
        ),
    )
    parser.add_argument(
        "--model", required=True,
        help="hub:<repo>:<entry> (e.g. hub:chenyaofo/pytorch-cifar-models:cifar10_resnet20) "
             "or a path to a scripted/pickled torch module",
    )
    parser.add_argument(
        "--dataset", required=True,
        help="cifar10 | svhn | noise | folder:<path> (folder images are resized to 32x32)",
    )
    parser.add_argument("--split", default="test", help="dataset split (cifar10/svhn)")
    parser.add_argument("--limit", type=int, default=None, help="sample count cap")
    parser.add_argument("--out", required=True, help="output .ooda file")
    parser.add_argument("--device", default="cpu", help="device hint (cpu or cuda)")
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--role", choices=["inlier", "outlier"], default=None,
                        help="label handling override; default: cifar10 inlier, others outlier")
    parser.add_argument("--data-root", default="datasets", help="dataset download/cache dir")
    parser.add_argument("--seed", type=int, default=0, help="noise dataset seed")
    parser.add_argument("--no-normalize", action="store_true",
                        help="skip CIFAR-stat channel normalization")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = None
    try:
        job = ExportJob(
            model=args.model,
            dataset=args.dataset,
            out=Path(args.out),
            split=args.split,
            limit=args.limit,
            device=args.device,
            batch_size=args.batch_size,
            normalize=not args.no_normalize,
            role=args.role,
            data_root=Path(args.data_root),
            seed=args.seed,
        )
        path = export_activations(job)
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
