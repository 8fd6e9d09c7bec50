"""Training loop for the prototype head.

One optimizer step per example: an example is a video with B_train randomly
placed windows whose predictions form the BCE mini-batch. Real videos appear
twice per epoch to balance the fakes. The learning rate decays by 10x after
5 epochs without validation-loss improvement, clamped at lr_min. Everything
is deterministic in (manifest, config, seed).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConstraintError, DatasetError, ShapeError
from .head import (
    PARAM_FIELDS,
    HeadConfig,
    HeadParams,
    head_backward,
    head_forward,
    init_head,
    zero_grads,
)
from .numcore import sigmoid
from .sampler import WindowPlan, plan_training_windows, plan_windows
from .store import ManifestEntry

log = logging.getLogger("vipera.trainer")

BCE_EPS = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-4
    lr_decay_factor: float = 0.1
    plateau_epochs: int = 5
    lr_min: float = 1e-7
    max_epochs: int = 200
    b_train: int = 5
    j: int = 8
    c: int = 1
    seed: int = 0
    improvement_epsilon: float = 1e-5
    fake_label: int = 1

    def __post_init__(self):
        if self.lr_min > self.lr0:
            raise ConfigError("TrainConfig: lr_min must not exceed lr0")
        for f in ("plateau_epochs", "b_train", "j", "c"):
            if getattr(self, f) < 1:
                raise ConfigError(f"TrainConfig.{f} must be >= 1")


@dataclass
class AdamState:
    step: int
    moments: dict          # name -> (m, v) float64 arrays
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: HeadParams) -> "AdamState":
        moments = {
            f: (np.zeros(getattr(params, f).shape), np.zeros(getattr(params, f).shape))
            for f in PARAM_FIELDS
        }
        return cls(step=0, moments=moments)


@dataclass(frozen=True)
class TrainingExample:
    video_id: str
    label: int             # 1 = fake
    plan: WindowPlan
    entry: ManifestEntry


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class FitResult:
    best_params: HeadParams
    final_params: HeadParams
    head_cfg: HeadConfig
    log: list[EpochRecord] = field(default_factory=list)
    best_val: float = float("inf")


def bce_loss(y_hat, y) -> float:
    """Mean binary cross-entropy with predictions clamped to [eps, 1-eps]."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape or y_hat.size == 0:
        raise ShapeError(f"bce_loss: shapes {y_hat.shape} vs {y.shape}")
    p = np.clip(y_hat, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def adam_step(params: HeadParams, grads, state: AdamState, lr: float) -> None:
    """Standard bias-corrected Adam update, in place.

    Moments accumulate in float64; parameters are stored back as float32.
    """
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name in PARAM_FIELDS:
        g = np.asarray(getattr(grads, name), dtype=np.float64)
        p = getattr(params, name)
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient shape {g.shape} != param {p.shape} ({name})")
        m, v = state.moments[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        setattr(params, name, (p.astype(np.float64) - update).astype(np.float32))


def lr_schedule_update(best_val: float, current_val: float, epochs_since_improve: int,
                       lr: float, cfg: TrainConfig) -> tuple[float, int]:
    """Plateau schedule: counter resets on improvement; at 5 stale epochs the
    rate drops by the decay factor, clamped at lr_min."""
    if current_val < best_val - cfg.improvement_epsilon:
        return lr, 0
    epochs_since_improve += 1
    if epochs_since_improve >= cfg.plateau_epochs:
        return max(lr * cfg.lr_decay_factor, cfg.lr_min), 0
    return lr, epochs_since_improve


def build_epoch(entries: list[ManifestEntry], cfg: TrainConfig,
                rng: np.random.Generator) -> list[TrainingExample]:
    """Balanced, shuffled epoch: each fake once, each real twice."""
    reals = [e for e in entries if e.label == "real"]
    fakes = [e for e in entries if e.label == "fake"]
    if not reals or not fakes:
        raise DatasetError("build_epoch requires both real and fake training videos")
    pool = fakes + reals + reals
    order = rng.permutation(len(pool))
    out = []
    for i in order:
        e = pool[i]
        label = cfg.fake_label if e.label == "fake" else 1 - cfg.fake_label
        plan = plan_training_windows(e.n_frames, cfg.b_train, cfg.j, rng)
        out.append(TrainingExample(video_id=e.video_id, label=label, plan=plan, entry=e))
    return out


def _example_forward(example_windows, label, params, head_cfg):
    """Forward B windows; returns (loss, per-window (activation, dL/ds))."""
    acts, scores = [], []
    for v in example_windows:
        s, act = head_forward(v, params, head_cfg)
        acts.append(act)
        scores.append(s)
    y_hat = np.array([sigmoid(s) for s in scores])
    y = np.full(len(scores), float(label))
    loss = bce_loss(y_hat, y)
    dls = (y_hat - y) / len(scores)   # d(mean BCE)/d(score), sigmoid folded in
    return loss, list(zip(acts, dls))


def _check_sigma(params: HeadParams) -> None:
    if not np.all(params.sigma > 1.0):
        raise ConstraintError("optimizer step violated log sigma > 0")


def validation_loss(entries, source, params, head_cfg, cfg: TrainConfig) -> float:
    """Mean per-example BCE with deterministic uniform-spacing windows."""
    if not entries:
        raise DatasetError("validation split is empty")
    losses = []
    for e in entries:
        plan = plan_windows(e.n_frames, cfg.b_train, cfg.j)
        windows = [source.window(e, s, cfg.j) for s in plan.starts]
        label = cfg.fake_label if e.label == "fake" else 1 - cfg.fake_label
        loss, _ = _example_forward(windows, label, params, head_cfg)
        losses.append(loss)
    return float(np.mean(losses))


def fit(train_entries, val_entries, source, head_cfg: HeadConfig,
        cfg: TrainConfig) -> FitResult:
    """Full training run; returns best-validation and final parameters plus
    the per-epoch log."""
    rng = np.random.default_rng(cfg.seed)
    params = init_head(head_cfg, cfg.seed)
    result = FitResult(best_params=params.copy(), final_params=params,
                       head_cfg=head_cfg)
    if cfg.max_epochs == 0:
        return result
    state = AdamState.for_params(params)
    lr = cfg.lr0
    best_val = float("inf")
    stale = 0
    for epoch in range(cfg.max_epochs):
        examples = build_epoch(train_entries, cfg, rng)
        epoch_losses = []
        for ex in examples:
            windows = [source.window(ex.entry, s, cfg.j) for s in ex.plan.starts]
            loss, backprops = _example_forward(windows, ex.label, params, head_cfg)
            epoch_losses.append(loss)
            grads = zero_grads(head_cfg)
            for act, dl_ds in backprops:
                grads.add_(head_backward(act, params, head_cfg, dl_ds))
            adam_step(params, grads, state, lr)
            _check_sigma(params)
        val = validation_loss(val_entries, source, params, head_cfg, cfg)
        result.log.append(EpochRecord(epoch=epoch, train_loss=float(np.mean(epoch_losses)),
                                      val_loss=val, lr=lr))
        improved = val < best_val - cfg.improvement_epsilon
        lr, stale = lr_schedule_update(best_val, val, stale, lr, cfg)
        if improved:
            best_val = val
            result.best_params = params.copy()
            result.best_val = best_val
        log.debug("epoch %d train=%.6f val=%.6f lr=%.3e", epoch,
                  result.log[-1].train_loss, val, lr)
    result.final_params = params
    return result


def format_log(records: list[EpochRecord]) -> str:
    """Line-delimited log: epoch, train_loss, val_loss, lr."""
    lines = [
        f"{r.epoch} {r.train_loss:.8e} {r.val_loss:.8e} {r.lr:.8e}"
        for r in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")
