"""Evaluation protocol: single-class rates, rank-based AUC, per-group
breakdowns, and the few-shot harness.

Metrics undefined for a record set (no fakes -> no TPR, single class -> no
AUC) are reported as None, never as a sentinel number.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, EmptyInputError, UndefinedMetricError
from .sampler import plan_windows, aggregate
from .head import head_forward
from .store import ManifestEntry, select_training_subset
from .trainer import TrainConfig, fit

THRESHOLD = 0.5


@dataclass(frozen=True)
class EvalRecord:
    video_id: str
    label: str                 # "real" | "fake"
    phi: float
    generator: str = "other"
    crf: int | None = None

    @property
    def decision(self) -> str:
        # tie at exactly 0.5 resolves to real
        return "fake" if self.phi > THRESHOLD else "real"


@dataclass(frozen=True)
class GroupMetrics:
    tpr: float | None
    tnr: float | None
    accuracy: float
    auc: float | None
    n_fake: int
    n_real: int


@dataclass
class MetricsReport:
    overall: GroupMetrics
    cells: dict = field(default_factory=dict)   # (generator, crf) -> GroupMetrics

    def to_json_dict(self) -> dict:
        def gm(g: GroupMetrics) -> dict:
            return {"tpr": g.tpr, "tnr": g.tnr, "accuracy": g.accuracy, "auc": g.auc}

        cells = []
        for (gen, crf) in sorted(self.cells, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
            g = self.cells[(gen, crf)]
            cells.append({
                "generator": gen,
                "crf": "none" if crf is None else crf,
                "metrics": gm(g),
                "counts": {"fake": g.n_fake, "real": g.n_real},
            })
        return {
            "overall": dict(gm(self.overall),
                            counts={"fake": self.overall.n_fake, "real": self.overall.n_real}),
            "cells": cells,
        }


def rates(records: list[EvalRecord]) -> tuple[float | None, float | None, float]:
    """(tpr, tnr, accuracy) at the fixed 0.5 threshold; absent-class rates are None."""
    if not records:
        raise EmptyInputError("rates requires at least one record")
    tp = sum(1 for r in records if r.label == "fake" and r.decision == "fake")
    fn = sum(1 for r in records if r.label == "fake" and r.decision == "real")
    tn = sum(1 for r in records if r.label == "real" and r.decision == "real")
    fp = sum(1 for r in records if r.label == "real" and r.decision == "fake")
    tpr = tp / (tp + fn) if (tp + fn) else None
    tnr = tn / (tn + fp) if (tn + fp) else None
    accuracy = (tp + tn) / len(records)
    return tpr, tnr, accuracy


def auc(records: list[EvalRecord]) -> float:
    """Mann-Whitney AUC: P(random fake outranks random real), ties credit 0.5.

    Computed via midranks; equals brute-force pair counting exactly.
    """
    fakes = [r.phi for r in records if r.label == "fake"]
    reals = [r.phi for r in records if r.label == "real"]
    if not fakes or not reals:
        raise UndefinedMetricError("AUC is undefined for single-class input")
    scores = np.asarray(fakes + reals, dtype=np.float64)
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        k = i
        while k + 1 < len(scores) and scores[order[k + 1]] == scores[order[i]]:
            k += 1
        ranks[order[i:k + 1]] = 0.5 * (i + k) + 1.0  # midrank, 1-based
        i = k + 1
    n_f, n_r = len(fakes), len(reals)
    u = ranks[:n_f].sum() - n_f * (n_f + 1) / 2.0
    return float(u / (n_f * n_r))


def _group_metrics(records: list[EvalRecord]) -> GroupMetrics:
    tpr, tnr, accuracy = rates(records)
    try:
        a = auc(records)
    except UndefinedMetricError:
        a = None
    return GroupMetrics(
        tpr=tpr, tnr=tnr, accuracy=accuracy, auc=a,
        n_fake=sum(1 for r in records if r.label == "fake"),
        n_real=sum(1 for r in records if r.label == "real"),
    )


def grouped_report(records: list[EvalRecord]) -> MetricsReport:
    """Overall metrics plus one cell per (generator, crf) present in the data."""
    if not records:
        raise EmptyInputError("grouped_report requires at least one record")
    report = MetricsReport(overall=_group_metrics(records))
    groups: dict = {}
    for r in records:
        groups.setdefault((r.generator, r.crf), []).append(r)
    for key, recs in groups.items():
        report.cells[key] = _group_metrics(recs)
    return report


def render_report(report: MetricsReport) -> str:
    """Plain-text table for terminals."""
    def fmt(x):
        return "   -  " if x is None else f"{x:6.3f}"

    lines = [f"{'group':<24} {'tpr':>6} {'tnr':>6} {'acc':>6} {'auc':>6} {'n':>6}"]
    g = report.overall
    lines.append(f"{'overall':<24} {fmt(g.tpr)} {fmt(g.tnr)} {fmt(g.accuracy)} "
                 f"{fmt(g.auc)} {g.n_fake + g.n_real:>6}")
    for (gen, crf) in sorted(report.cells, key=lambda k: (k[0], -1 if k[1] is None else k[1])):
        c = report.cells[(gen, crf)]
        name = f"{gen}/crf={'none' if crf is None else crf}"
        lines.append(f"{name:<24} {fmt(c.tpr)} {fmt(c.tnr)} {fmt(c.accuracy)} "
                     f"{fmt(c.auc)} {c.n_fake + c.n_real:>6}")
    return "\n".join(lines)


def score_video(entry: ManifestEntry, source, params, head_cfg,
                b: int = 8, j: int = 8):
    """Deterministic per-video verdict: B uniform windows, sigmoid-of-sum aggregation."""
    plan = plan_windows(entry.n_frames, b, j)
    scores = [head_forward(source.window(entry, s, j), params, head_cfg)[0]
              for s in plan.starts]
    return aggregate(scores)


def evaluate_entries(entries, source, params, head_cfg, b: int = 8, j: int = 8):
    records = []
    for e in entries:
        verdict = score_video(e, source, params, head_cfg, b=b, j=j)
        records.append(EvalRecord(video_id=e.video_id, label=e.label,
                                  phi=verdict.phi, generator=e.generator, crf=e.crf))
    return records


@dataclass
class FewshotCell:
    m: object                      # int or "all"
    seeds: list[int]
    reports: list[MetricsReport]
    mean_accuracy: float
    std_accuracy: float
    mean_auc: float | None


def fewshot_run(entries: list[ManifestEntry], source, head_cfg,
                train_cfg: TrainConfig, m_list=(10, 100, "all"),
                seeds=(0, 1, 2, 3, 4), generators=("TF", "DC"),
                eval_b: int = 8) -> list[FewshotCell]:
    """Train on M real + M-per-generator fake videos, evaluate on the test
    split, repeated over seeds; reports mean and sample standard deviation."""
    val = [e for e in entries if e.split == "val"]
    test = [e for e in entries if e.split == "test"]
    if not test:
        raise DatasetError("fewshot_run requires a test split")
    cells = []
    for m in m_list:
        reports = []
        for seed in seeds:
            subset = select_training_subset(entries, generators=generators, m=m, seed=seed)
            cfg = TrainConfig(**{**train_cfg.__dict__, "seed": seed})
            result = fit(subset, val, source, head_cfg, cfg)
            records = evaluate_entries(test, source, result.best_params, head_cfg,
                                       b=eval_b, j=train_cfg.j)
            reports.append(grouped_report(records))
        accs = [r.overall.accuracy for r in reports]
        aucs = [r.overall.auc for r in reports if r.overall.auc is not None]
        cells.append(FewshotCell(
            m=m, seeds=list(seeds), reports=reports,
            mean_accuracy=float(statistics.mean(accs)),
            std_accuracy=float(statistics.stdev(accs)) if len(accs) > 1 else 0.0,
            mean_auc=float(statistics.mean(aucs)) if aucs else None,
        ))
    return cells
