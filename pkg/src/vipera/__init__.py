"""vipera: detection engine for diffusion-generated videos.

Frozen temporally-aware embeddings are scored window-by-window by a trainable
learned-prototype head; per-window scores aggregate into a video-level fake
probability.
"""

from .backbone import BackboneConfig, FrozenWeights, embed_batch, make_frozen_weights
from .errors import ViperaError
from .head import HeadConfig, HeadParams, head_forward, init_head, prototype_score
from .metrics import EvalRecord, auc, grouped_report, rates
from .sampler import VideoVerdict, aggregate, plan_training_windows, plan_windows
from .store import (
    EmbeddingFile,
    ManifestEntry,
    load_checkpoint,
    load_manifest,
    read_vemb,
    save_checkpoint,
    save_manifest,
    split_manifest,
    write_vemb,
)
from .trainer import TrainConfig, bce_loss, fit

__version__ = "0.1.0"

__all__ = [
    "BackboneConfig", "FrozenWeights", "embed_batch", "make_frozen_weights",
    "ViperaError",
    "HeadConfig", "HeadParams", "head_forward", "init_head", "prototype_score",
    "EvalRecord", "auc", "grouped_report", "rates",
    "VideoVerdict", "aggregate", "plan_training_windows", "plan_windows",
    "EmbeddingFile", "ManifestEntry", "load_checkpoint", "load_manifest",
    "read_vemb", "save_checkpoint", "save_manifest", "split_manifest", "write_vemb",
    "TrainConfig", "bce_loss", "fit",
    "__version__",
]
