"""Embedding sources: how the trainer and evaluator obtain a (t_v, e)
projected embedding for a requested window of a video.

Three providers cover the supported data paths:
  * SyntheticClusterSource - deterministic Gaussian clusters for desk-scale
    experiments and tests (real videos around +u, fakes around -u).
  * VembSource - per-video .vemb files; mode B serves stored windows (nearest
    start when the requested one is absent), mode A recomputes the frozen
    pipeline from per-frame features.
  * BackboneSource - in-memory pixel frames through the toy frozen backbone.
"""

from __future__ import annotations

import zlib
from functools import lru_cache

import numpy as np

from . import backbone as bb
from .errors import ConfigError, DatasetError
from .store import ManifestEntry, read_vemb


def _stable_id_hash(video_id: str) -> int:
    return zlib.crc32(video_id.encode("utf-8"))


class SyntheticClusterSource:
    """Real windows ~ N(+u, noise^2 I), fake windows ~ N(-u, noise^2 I).

    Deterministic in (seed, video_id, window start): repeated requests for
    the same window return identical embeddings.
    """

    def __init__(self, u: np.ndarray, noise: float, seed: int = 0):
        self.u = np.asarray(u, dtype=np.float64)
        self.noise = float(noise)
        self.seed = int(seed)

    @property
    def shape(self):
        return self.u.shape

    def window(self, entry: ManifestEntry, start: int, j: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, _stable_id_hash(entry.video_id), int(start)])
        center = -self.u if entry.label == "fake" else self.u
        emb = center + self.noise * rng.standard_normal(self.u.shape)
        return emb.astype(np.float32)


class VembSource:
    """Serves windows from the .vemb file referenced by each manifest entry.

    Mode B files hold precomputed projected windows; a requested start maps to
    the stored window with the nearest start (exact at test time, since both
    sides use the same uniform-spacing formula). Mode A files hold per-frame
    features and need the frozen backbone weights to finish the pipeline.
    """

    def __init__(self, weights: bb.FrozenWeights | None = None,
                 cfg: bb.BackboneConfig | None = None, cache_size: int = 64):
        self._weights = weights
        self._cfg = cfg
        self._load = lru_cache(maxsize=cache_size)(read_vemb)

    def _file(self, entry: ManifestEntry):
        if not entry.embedding_path:
            raise DatasetError(f"entry {entry.video_id} carries no embedding_path")
        return self._load(entry.embedding_path)

    def window(self, entry: ManifestEntry, start: int, j: int) -> np.ndarray:
        emb = self._file(entry)
        if emb.mode == "B":
            starts = np.array([w[0] for w in emb.windows])
            idx = int(np.argmin(np.abs(starts - start)))
            return emb.windows[idx][1]
        if self._weights is None or self._cfg is None:
            raise ConfigError("mode-A embeddings require frozen backbone weights")
        if emb.d1 != self._cfg.d_f or emb.d0 != self._cfg.m_f:
            raise ConfigError(
                f"mode-A dims ({emb.d0}, {emb.d1}) do not match backbone config "
                f"({self._cfg.m_f}, {self._cfg.d_f})"
            )
        n = len(emb.windows)
        feats = []
        for k in range(start, start + j):
            feats.append(emb.windows[min(k, n - 1)][1])
        return bb.embed_features(feats, self._weights, self._cfg)

    def stored_windows(self, entry: ManifestEntry):
        """Mode-B only: the windows exactly as extracted."""
        emb = self._file(entry)
        if emb.mode != "B":
            raise ConfigError("stored_windows applies to mode-B files only")
        return [w[1] for w in emb.windows]


class BackboneSource:
    """Pixel frames (one list per video id) through the toy frozen backbone."""

    def __init__(self, frames_by_video: dict, weights: bb.FrozenWeights,
                 cfg: bb.BackboneConfig):
        self.frames_by_video = frames_by_video
        self.weights = weights
        self.cfg = cfg

    def window(self, entry: ManifestEntry, start: int, j: int) -> np.ndarray:
        frames = self.frames_by_video[entry.video_id]
        n = len(frames)
        chosen = [frames[min(k, n - 1)] for k in range(start, start + j)]
        return bb.embed_batch(chosen, self.weights, self.cfg)
