#!/usr/bin/env python3
"""Build a desk-scale synthetic dataset: a split manifest plus mode-B .vemb
files drawn from two Gaussian embedding clusters (real around +u, fake around
-u). The output is directly consumable by `vipera train / eval / fewshot`.
"""

import argparse
import os

import numpy as np

from vipera.sampler import plan_windows
from vipera.sources import SyntheticClusterSource
from vipera.store import EmbeddingFile, ManifestEntry, save_manifest, split_manifest, write_vemb


def build(out_dir, n_sources, t_v, e_in, center, noise, n_frames, seed):
    os.makedirs(os.path.join(out_dir, "emb"), exist_ok=True)
    entries = []
    for i in range(n_sources):
        rid = f"real{i:04d}"
        entries.append(ManifestEntry(video_id=rid, label="real", n_frames=n_frames))
        for g in ("TF", "DC"):
            entries.append(ManifestEntry(video_id=f"{g}_{i:04d}", label="fake",
                                         n_frames=n_frames, generator=g,
                                         source_video_id=rid))
    entries = split_manifest(entries, seed=seed)
    source = SyntheticClusterSource(np.full((t_v, e_in), center), noise=noise, seed=seed)
    final = []
    for e in entries:
        plan = plan_windows(e.n_frames, 8, 8)
        windows = tuple((s, source.window(e, s, 8)) for s in sorted(set(plan.starts)))
        path = os.path.join(out_dir, "emb", f"{e.video_id}.vemb")
        write_vemb(path, EmbeddingFile(mode="B", d0=t_v, d1=e_in, j=8, windows=windows))
        final.append(ManifestEntry(**{**e.__dict__, "embedding_path": path}))
    manifest = os.path.join(out_dir, "manifest.json")
    save_manifest(manifest, final)
    return manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--sources", type=int, default=40)
    ap.add_argument("--tv", type=int, default=4)
    ap.add_argument("--embed-dim", type=int, default=8)
    ap.add_argument("--center", type=float, default=0.5)
    ap.add_argument("--noise", type=float, default=1.0)
    ap.add_argument("--frames", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    manifest = build(args.out, args.sources, args.tv, args.embed_dim,
                     args.center, args.noise, args.frames, args.seed)
    print(f"manifest: {manifest}")


if __name__ == "__main__":
    main()
