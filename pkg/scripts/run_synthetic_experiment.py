#!/usr/bin/env python3
"""End-to-end desk-scale experiment: build the synthetic cluster dataset,
train the head with the standard hyperparameters, evaluate the test split,
and print the metric table. Everything runs through the CLI surface.
"""

import argparse
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from make_synthetic_dataset import build  # noqa: E402
from vipera.cli import main as vipera_main  # noqa: E402


def run(workdir, sources, epochs, seed):
    manifest = build(workdir, sources, 4, 8, 0.5, 1.0, 64, seed)
    checkpoint = os.path.join(workdir, "head.vphd")
    report = os.path.join(workdir, "report.json")
    rc = vipera_main(["train", "--manifest", manifest, "--seed", str(seed),
                      "--set", f"max_epochs={epochs}", "--set", "head_t=2",
                      "--set", "head_e=4", "--out", checkpoint])
    if rc:
        return rc
    return vipera_main(["eval", "--manifest", manifest, "--model", checkpoint,
                        "--out", report])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default=None, help="defaults to a temp directory")
    ap.add_argument("--sources", type=int, default=40)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.workdir:
        os.makedirs(args.workdir, exist_ok=True)
        sys.exit(run(args.workdir, args.sources, args.epochs, args.seed))
    with tempfile.TemporaryDirectory() as d:
        sys.exit(run(d, args.sources, args.epochs, args.seed))


if __name__ == "__main__":
    main()
