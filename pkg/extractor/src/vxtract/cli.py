"""Command line: `vxtract extract ...` and `vxtract reencode ...`."""

import argparse
import sys

from .errors import ExtractorError
from .extract import ExtractionJob, run_job
from .reencode import CRF_LEVELS, reencode_crf


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vxtract")
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="video -> .vemb embeddings")
    ex.add_argument("--video", required=True)
    ex.add_argument("--out", required=True)
    ex.add_argument("--plan", choices=("test", "train"), default="test")
    ex.add_argument("--augment", action="store_true")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--backbone", default="pooled-rp")

    re_ = sub.add_parser("reencode", help="re-encode as H.264 at a CRF level")
    re_.add_argument("--video", required=True)
    re_.add_argument("--out", required=True)
    re_.add_argument("--crf", type=int, required=True, choices=CRF_LEVELS)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            out = run_job(ExtractionJob(args.video, args.out, plan=args.plan,
                                        augment=args.augment, seed=args.seed,
                                        backbone=args.backbone))
        else:
            out = reencode_crf(args.video, args.out, args.crf)
    except ExtractorError as exc:
        print(f"vxtract: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
