"""Command-line surface.

Commands: train, infer, eval, split, fewshot, mock-extract, report.
Configuration is a flat key=value text file; any key can be overridden on the
command line with --set key=value. Unknown keys are rejected. The VIPERA_LOG
environment variable sets the logging level.

Exit codes: 0 success, 1 computation failure, 2 usage/config error.
Failures print a one-line JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import backbone as bb
from .errors import ConfigError, DatasetError, ViperaError
from .head import HeadConfig
from .metrics import (
    evaluate_entries,
    fewshot_run,
    grouped_report,
    render_report,
)
from .sampler import plan_windows, aggregate
from .head import head_forward
from .sources import VembSource
from .store import (
    EmbeddingFile,
    load_checkpoint,
    load_manifest,
    read_vemb,
    save_checkpoint,
    save_manifest,
    split_manifest,
    write_vemb,
)
from .trainer import TrainConfig, fit, format_log

log = logging.getLogger("vipera.cli")

# flat config schema: key -> (section, field, parser)
_BOOL = lambda s: s.lower() in ("1", "true", "yes", "on")
CONFIG_SCHEMA = {
    "mf": ("backbone", "m_f", int),
    "df": ("backbone", "d_f", int),
    "tv": ("backbone", "t_v", int),
    "dv": ("backbone", "d_v", int),
    "embed_dim": ("backbone", "e", int),
    "j_max": ("backbone", "j_max", int),
    "backbone_seed": ("backbone", "seed", int),
    "head_t": ("head", "t", int),
    "head_e": ("head", "e_red", int),
    "centroids": ("head", "c", int),
    "squared_distance": ("head", "squared_distance", _BOOL),
    "lr0": ("train", "lr0", float),
    "lr_decay_factor": ("train", "lr_decay_factor", float),
    "plateau_epochs": ("train", "plateau_epochs", int),
    "lr_min": ("train", "lr_min", float),
    "max_epochs": ("train", "max_epochs", int),
    "b_train": ("train", "b_train", int),
    "j": ("train", "j", int),
    "seed": ("train", "seed", int),
    "improvement_epsilon": ("train", "improvement_epsilon", float),
    "eval_b": ("eval", "b", int),
}


@dataclass
class RunConfig:
    backbone: dict = field(default_factory=dict)
    head: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    def backbone_config(self) -> bb.BackboneConfig:
        return bb.BackboneConfig(**self.backbone)

    def head_config(self, t_v: int, e_in: int) -> HeadConfig:
        return HeadConfig(t_v=t_v, e_in=e_in, **self.head)

    def train_config(self) -> TrainConfig:
        kwargs = dict(self.train)
        kwargs.setdefault("c", self.head.get("c", 1))
        return TrainConfig(**kwargs)

    @property
    def eval_b(self) -> int:
        return self.eval.get("b", 8)


def parse_config_pairs(pairs) -> RunConfig:
    cfg = RunConfig()
    for key, raw in pairs:
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        section, fname, parser = CONFIG_SCHEMA[key]
        try:
            value = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        getattr(cfg, section)[fname] = value
    return cfg


def load_config(path: str | None, overrides=()) -> RunConfig:
    pairs = []
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
                key, _, raw = line.partition("=")
                pairs.append((key.strip(), raw.strip()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        pairs.append((key.strip(), raw.strip()))
    return parse_config_pairs(pairs)


def _require_file(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _head_dims_from_data(entries, cfg: RunConfig):
    """Head input dims come from the data: mode-B headers, or backbone config."""
    for e in entries:
        if e.embedding_path and os.path.exists(e.embedding_path):
            emb = read_vemb(e.embedding_path)
            if emb.mode == "B":
                return emb.d0, emb.d1
            break
    bcfg = cfg.backbone_config()
    return bcfg.t_v, bcfg.e


def _make_source(entries, cfg: RunConfig) -> VembSource:
    needs_backbone = False
    for e in entries:
        if e.embedding_path and os.path.exists(e.embedding_path):
            if read_vemb(e.embedding_path).mode == "A":
                needs_backbone = True
            break
    if needs_backbone:
        bcfg = cfg.backbone_config()
        return VembSource(weights=bb.make_frozen_weights(bcfg), cfg=bcfg)
    return VembSource()


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.set or [])
    if args.seed is not None:
        cfg.train["seed"] = args.seed
    entries = load_manifest(_require_file(args.manifest, "manifest"))
    train = [e for e in entries if e.split == "train"]
    val = [e for e in entries if e.split == "val"]
    if not train or not val:
        raise DatasetError("manifest needs non-empty train and val splits")
    t_v, e_in = _head_dims_from_data(train, cfg)
    head_cfg = cfg.head_config(t_v, e_in)
    source = _make_source(train, cfg)
    result = fit(train, val, source, head_cfg, cfg.train_config())
    save_checkpoint(args.out, result.best_params, head_cfg)
    with open(args.out + ".log", "w", encoding="utf-8") as fh:
        fh.write(format_log(result.log))
    print(f"checkpoint written: {args.out} ({len(result.log)} epochs, "
          f"best val loss {result.best_val:.6f})")
    return 0


def cmd_infer(args) -> int:
    params, head_cfg, _ = load_checkpoint(_require_file(args.model, "model"))
    emb_path = _require_file(args.vemb, "embedding file")
    emb = read_vemb(emb_path)
    cfg = load_config(args.config, args.set or [])
    if emb.mode == "B":
        windows = [w[1] for w in emb.windows]
    else:
        bcfg = cfg.backbone_config()
        source_windows = plan_windows(len(emb.windows), cfg.eval_b, 8)
        weights = bb.make_frozen_weights(bcfg)
        n = len(emb.windows)
        windows = []
        for start in source_windows.starts:
            feats = [emb.windows[min(k, n - 1)][1] for k in range(start, start + 8)]
            windows.append(bb.embed_features(feats, weights, bcfg))
    scores = [head_forward(w, params, head_cfg)[0] for w in windows]
    verdict = aggregate(scores)
    print(f"{verdict.phi:.6f} {verdict.decision}")
    return 0


def _eval_records(args, split_name: str):
    cfg = load_config(args.config, args.set or [])
    params, head_cfg, _ = load_checkpoint(_require_file(args.model, "model"))
    entries = load_manifest(_require_file(args.manifest, "manifest"))
    chosen = [e for e in entries if e.split == split_name]
    if not chosen:
        raise DatasetError(f"split {split_name!r} is empty")
    source = _make_source(chosen, cfg)
    return evaluate_entries(chosen, source, params, head_cfg, b=cfg.eval_b, j=8)


def cmd_eval(args) -> int:
    records = _eval_records(args, args.split_name)
    report = grouped_report(records)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(render_report(report))
    print(f"report written: {args.out}")
    return 0


def cmd_split(args) -> int:
    entries = load_manifest(_require_file(args.manifest, "manifest"))
    save_manifest(args.out, split_manifest(entries, args.seed))
    print(f"split manifest written: {args.out}")
    return 0


def cmd_fewshot(args) -> int:
    cfg = load_config(args.config, args.set or [])
    entries = load_manifest(_require_file(args.manifest, "manifest"))
    m_list = [m if m == "all" else int(m) for m in args.M.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    train = [e for e in entries if e.split == "train"]
    t_v, e_in = _head_dims_from_data(train, cfg)
    head_cfg = cfg.head_config(t_v, e_in)
    source = _make_source(train, cfg)
    generators = tuple(args.generators.split(","))
    cells = fewshot_run(entries, source, head_cfg, cfg.train_config(),
                        m_list=m_list, seeds=seeds, generators=generators,
                        eval_b=cfg.eval_b)
    doc = [{
        "M": c.m, "seeds": c.seeds,
        "mean_accuracy": c.mean_accuracy, "std_accuracy": c.std_accuracy,
        "mean_auc": c.mean_auc,
        "reports": [r.to_json_dict() for r in c.reports],
    } for c in cells]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in cells:
        print(f"M={c.m}: accuracy {c.mean_accuracy:.4f} +- {c.std_accuracy:.4f}")
    print(f"few-shot report written: {args.out}")
    return 0


def cmd_mock_extract(args) -> int:
    from PIL import Image

    cfg = load_config(args.config, args.set or [])
    if args.seed is not None:
        cfg.backbone["seed"] = args.seed
    bcfg = cfg.backbone_config()
    frame_dir = _require_file(args.frames, "frame directory")
    names = sorted(n for n in os.listdir(frame_dir) if n.lower().endswith(".png"))
    if not names:
        raise DatasetError(f"no PNG frames in {frame_dir}")
    frames = []
    for n in names:
        img = Image.open(os.path.join(frame_dir, n)).convert("RGB")
        if img.size != (bb.FRAME_SIZE, bb.FRAME_SIZE):
            img = img.resize((bb.FRAME_SIZE, bb.FRAME_SIZE), Image.BILINEAR)
        frames.append(np.asarray(img, dtype=np.uint8))
    weights = bb.make_frozen_weights(bcfg)
    plan = plan_windows(len(frames), args.windows, args.j)
    emb_windows = []
    for start, idx in zip(plan.starts, plan.frame_indices):
        mat = bb.embed_batch([frames[i] for i in idx], weights, bcfg)
        emb_windows.append((start, mat))
    write_vemb(args.out, EmbeddingFile(mode="B", d0=bcfg.t_v, d1=bcfg.e,
                                       j=args.j, windows=tuple(emb_windows)))
    print(f"embeddings written: {args.out} ({len(emb_windows)} windows)")
    return 0


def cmd_report(args) -> int:
    with open(_require_file(args.report, "report"), encoding="utf-8") as fh:
        doc = json.load(fh)

    def fmt(x):
        return "   -  " if x is None else f"{x:6.3f}"

    rows = [("overall", doc["overall"])]
    rows += [(f"{c['generator']}/crf={c['crf']}", c["metrics"]) for c in doc["cells"]]
    print(f"{'group':<24} {'tpr':>6} {'tnr':>6} {'acc':>6} {'auc':>6}")
    for name, m in rows:
        print(f"{name:<24} {fmt(m['tpr'])} {fmt(m['tnr'])} {fmt(m['accuracy'])} {fmt(m['auc'])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vipera",
                                description="diffusion-video detection engine")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", default=None, help="flat key=value config file")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="override a config key")

    sp = sub.add_parser("train", help="train the head from a manifest")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True, help="checkpoint output path (.vphd)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("infer", help="score one embedding file")
    common(sp)
    sp.add_argument("vemb")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("eval", help="evaluate a split and write a report")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--split-name", default="test")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("split", help="assign 70/10/20 source-level splits")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("fewshot", help="few-shot protocol over M and seeds")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--M", default="10,100,all")
    sp.add_argument("--seeds", default="0,1,2,3,4")
    sp.add_argument("--generators", default="TF,DC")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fewshot)

    sp = sub.add_parser("mock-extract", help="toy-backbone embeddings from PNG frames")
    common(sp)
    sp.add_argument("--frames", required=True, help="directory of PNG frames")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--windows", type=int, default=8)
    sp.add_argument("--j", type=int, default=8)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_mock_extract)

    sp = sub.add_parser("report", help="render a JSON report as a table")
    sp.add_argument("--report", required=True)
    sp.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    level = os.environ.get("VIPERA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except ViperaError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
