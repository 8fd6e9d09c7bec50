"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The training criteria use the deterministic two-cluster embedding
task from conftest.
"""

import math

import numpy as np
import pytest

from vipera import backbone as bb
from vipera.head import HeadConfig, head_backward, head_forward, init_head, prototype_score
from vipera.metrics import EvalRecord, auc, evaluate_entries, fewshot_run, grouped_report
from vipera.sampler import aggregate, plan_windows
from vipera.sources import BackboneSource
from vipera.store import (
    EmbeddingFile,
    ManifestEntry,
    read_vemb,
    save_checkpoint,
    split_manifest,
    write_vemb,
)
from vipera.trainer import TrainConfig, fit, lr_schedule_update
from tests.conftest import T_V, E_IN, cluster_task, head_cfg
from tests.test_head import finite_difference_grads, random_instance
from tests.test_metrics import brute_force_auc, recs
from tests.test_store import synthetic_manifest


def _report(name):
    print(f"ACCEPTANCE {name}: PASS")


@pytest.fixture(scope="module")
def e2e_fit():
    """Shared end-to-end training run with the standard hyperparameters."""
    entries, source, u = cluster_task(n_sources=40, noise=1.0, center=0.5)
    splits = {s: [e for e in entries if e.split == s] for s in ("train", "val", "test")}
    cfg = TrainConfig(seed=0)  # lr 1e-4, plateau /10 after 5, min 1e-7, 200 epochs
    result = fit(splits["train"], splits["val"], source, head_cfg(), cfg)
    return entries, source, u, splits, cfg, result


def test_prototype_identities():
    assert prototype_score([0.7], [0.7], [math.e]) == pytest.approx(1.0, abs=1e-12)
    assert prototype_score([1.0, 1.0], [1.0, 1.0], [math.e, math.e]) == pytest.approx(2.0)
    assert prototype_score([2.0], [0.0], [math.sqrt(math.e)]) == pytest.approx(0.86788, abs=1e-5)
    assert prototype_score([-2.0], [0.0], [math.sqrt(math.e)]) == pytest.approx(0.13212, abs=1e-5)
    _report("prototype identities")


def test_gradient_suite():
    cfg = HeadConfig(t_v=3, e_in=4, t=2, e_red=3)
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 20:
        params, v = random_instance(rng, cfg)
        p64 = params.astype(np.float64)
        _, act = head_forward(v, p64, cfg)
        if abs(float(np.sum(act.omega - p64.centroids))) < 1e-6:
            continue
        analytic = head_backward(act, p64, cfg, 1.0)
        for name, g_fd in finite_difference_grads(v, params, cfg, step=1e-3).items():
            g_an = getattr(analytic, name)
            rel = np.linalg.norm(g_an - g_fd) / max(np.linalg.norm(g_fd), 1e-12)
            assert rel < 1e-4, f"{name}: rel error {rel}"
        checked += 1
    _report("gradient suite")


def test_aggregation_decision():
    assert aggregate([0.0] * 8).phi == 0.5
    assert aggregate([math.log(3)] + [0.0] * 7).phi == pytest.approx(0.75, abs=1e-12)
    rng = np.random.default_rng(3)
    disagreements = 0
    for _ in range(10_000):
        scores = rng.normal(scale=2.0, size=rng.integers(1, 12)).tolist()
        v = aggregate(scores)
        if (v.decision == "fake") != (math.fsum(scores) > 0):
            disagreements += 1
    assert disagreements == 0
    _report("aggregation/decision")


def test_auc_oracle_equivalence():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n_f = int(rng.integers(1, 100))
        n_r = int(rng.integers(1, 200 - n_f + 1))
        fakes = np.round(rng.uniform(size=n_f), 2)  # rounding injects ties
        reals = np.round(rng.uniform(size=n_r), 2)
        records = recs(fakes=fakes, reals=reals)
        assert auc(records) == pytest.approx(brute_force_auc(records), abs=1e-12)
        transformed = recs(fakes=np.exp(3 * fakes), reals=np.exp(3 * reals))
        assert auc(transformed) == auc(records)
    _report("AUC oracle equivalence")


def test_window_planner():
    assert plan_windows(64, 8, 8).starts == (0, 8, 16, 24, 32, 40, 48, 56)
    assert plan_windows(71, 8, 8).starts == (0, 9, 18, 27, 36, 45, 54, 63)
    assert plan_windows(8, 8, 8).starts == (0,) * 8
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n, b, j = int(rng.integers(1, 400)), int(rng.integers(1, 16)), int(rng.integers(1, 16))
        plan = plan_windows(n, b, j)
        for start, idx in zip(plan.starts, plan.frame_indices):
            assert len(idx) == j and all(0 <= i < n for i in idx)
            if n >= j:
                assert idx == tuple(range(start, start + j))
    _report("window planner")


def test_training_end_to_end(e2e_fit):
    entries, source, u, splits, cfg, result = e2e_fit

    # the clusters must be easy for an independent nearest-centroid oracle
    oracle_hits = total = 0
    for e in splits["test"]:
        for start in plan_windows(e.n_frames, 8, 8).starts:
            x = source.window(e, start, 8).astype(np.float64)
            predicted = "real" if np.linalg.norm(x - u) < np.linalg.norm(x + u) else "fake"
            oracle_hits += predicted == e.label
            total += 1
    assert oracle_hits / total >= 0.99

    records = evaluate_entries(splits["test"], source, result.best_params, head_cfg())
    report = grouped_report(records)
    assert report.overall.accuracy >= 0.95
    assert report.overall.auc >= 0.99
    assert np.all(result.final_params.sigma > 1.0)  # also enforced every step

    # bitwise-determinism: a second identical run yields identical checkpoint bytes
    rerun = fit(splits["train"], splits["val"], source, head_cfg(), cfg)
    import os
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        p1, p2 = os.path.join(d, "a.vphd"), os.path.join(d, "b.vphd")
        save_checkpoint(p1, result.best_params, head_cfg())
        save_checkpoint(p2, rerun.best_params, head_cfg())
        assert open(p1, "rb").read() == open(p2, "rb").read()
    _report("training end-to-end on the synthetic oracle")


def test_fewshot_trend():
    entries, source, _ = cluster_task(n_sources=150, noise=1.0, center=0.5)
    cfg = TrainConfig(max_epochs=40, seed=0)  # convergence horizon; trend criterion
    cells = fewshot_run(entries, source, head_cfg(), cfg,
                        m_list=(10, 100, "all"), seeds=(0, 1, 2, 3, 4))
    accs = [c.mean_accuracy for c in cells]
    pooled = max(float(np.sqrt(np.mean([c.std_accuracy ** 2 for c in cells]))), 1e-12)
    assert accs[1] >= accs[0] - pooled
    assert accs[2] >= accs[1] - pooled
    _report(f"few-shot trend (accuracies {[round(a, 3) for a in accs]})")


def test_schedule():
    cfg = TrainConfig()
    lr, counter = 1e-4, 0
    for _ in range(5):
        lr, counter = lr_schedule_update(0.5, 0.6, counter, lr, cfg)
    assert lr == pytest.approx(1e-5) and counter == 0
    lr, counter = 1e-7, 4
    lr, _ = lr_schedule_update(0.5, 0.6, counter, lr, cfg)
    assert lr == 1e-7
    lr, counter = lr_schedule_update(0.5, 0.4, 3, 1e-4, cfg)
    assert (lr, counter) == (1e-4, 0)
    _report("lr schedule")


def test_persistence(tmp_path):
    rng = np.random.default_rng(6)
    for i in range(100):
        d0, d1 = int(rng.integers(1, 10)), int(rng.integers(1, 10))
        windows = tuple(
            (int(rng.integers(0, 500)), rng.normal(size=(d0, d1)).astype(np.float32))
            for _ in range(int(rng.integers(1, 8)))
        )
        mode = "A" if i % 2 else "B"
        path = tmp_path / f"f{i}.vemb"
        write_vemb(path, EmbeddingFile(mode=mode, d0=d0, d1=d1, j=8, windows=windows))
        data = path.read_bytes()
        write_vemb(path, read_vemb(path))
        assert path.read_bytes() == data

    for i in range(100):
        cfg = HeadConfig(t_v=int(rng.integers(1, 8)), e_in=int(rng.integers(1, 8)),
                         t=int(rng.integers(1, 5)), e_red=int(rng.integers(1, 5)),
                         c=int(rng.integers(1, 3)))
        params = init_head(cfg, i)
        path = tmp_path / f"c{i}.vphd"
        save_checkpoint(path, params, cfg)
        data = path.read_bytes()
        from vipera.store import load_checkpoint
        back, cfg2, _ = load_checkpoint(path)
        save_checkpoint(path, back, cfg2)
        assert path.read_bytes() == data

    entries = split_manifest(synthetic_manifest(503), seed=12)
    reals = [e for e in entries if e.label == "real"]
    counts = {s: sum(1 for e in reals if e.split == s) for s in ("train", "val", "test")}
    assert counts == {"train": 352, "val": 50, "test": 101}
    by_id = {e.video_id: e for e in entries}
    assert all(e.split == by_id[e.source_video_id].split
               for e in entries if e.source_video_id)
    _report("persistence round-trips and 70/10/20 split")


def test_backbone_contracts():
    cfg = bb.BackboneConfig(m_f=4, d_f=8, t_v=3, d_v=6, e=E_IN, seed=0)
    weights = bb.make_frozen_weights(cfg)
    rng = np.random.default_rng(7)
    frames = [rng.integers(0, 256, (224, 224, 3), dtype=np.uint8) for _ in range(8)]
    for j in (1, 2, 8):
        assert bb.embed_batch(frames[:j], weights, cfg).shape == (cfg.t_v, cfg.e)
    fwd = bb.embed_batch(frames, weights, cfg)
    rev = bb.embed_batch(frames[::-1], weights, cfg)
    assert np.linalg.norm(fwd - rev) > 0

    # a full training run leaves every frozen array bitwise unchanged
    snapshot = {k: v.tobytes() for k, v in weights.arrays().items()}
    frames_by_video = {}
    entries = []
    for i in range(4):
        for label in ("real", "fake"):
            vid = f"{label}{i}"
            frames_by_video[vid] = [rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
                                    for _ in range(12)]
            entries.append(ManifestEntry(video_id=vid, label=label, n_frames=12,
                                         generator="TF" if label == "fake" else "real",
                                         split="train" if i < 3 else "val"))
    source = BackboneSource(frames_by_video, weights, cfg)
    hcfg = HeadConfig(t_v=cfg.t_v, e_in=cfg.e, t=2, e_red=2)
    fit([e for e in entries if e.split == "train"],
        [e for e in entries if e.split == "val"],
        source, hcfg, TrainConfig(max_epochs=2, seed=0))
    assert {k: v.tobytes() for k, v in weights.arrays().items()} == snapshot
    _report("backbone contracts")
