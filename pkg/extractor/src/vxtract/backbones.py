"""Pluggable frozen backbones: frames in, one (t_v, e) embedding per window.

A backbone is selected by identifier string; its output dimensions are
self-described so the .vemb header can be written without out-of-band
knowledge. The default is a deterministic pooled-random-projection stand-in
with a fixed-query attention pool: cheap, frozen by construction, and
sensitive to frame order through a sinusoidal position signal.
"""

import zlib

import numpy as np

from .errors import JobError


class PooledProjectionBackbone:
    """Grid-pool each frame, add positions, attention-pool to t_v tokens."""

    grid = 8  # per-channel 8x8 mean pooling -> 192 features per frame

    def __init__(self, t_v: int = 8, e: int = 64, seed: int = 7):
        self.t_v = t_v
        self.e = e
        d = 3 * self.grid * self.grid
        rng = np.random.default_rng(seed)
        self.query = rng.normal(size=(t_v, d)) / np.sqrt(d)
        self.proj = rng.normal(size=(d, e)) / np.sqrt(d)
        idx = np.arange(512)[:, None]
        freq = (10_000.0 ** (-np.arange(0, d, 2) / d))[None, :]
        pos = np.zeros((512, d))
        pos[:, 0::2] = np.sin(idx * freq)
        pos[:, 1::2] = np.cos(idx * freq)
        self.pos = pos

    def _pool(self, frame: np.ndarray) -> np.ndarray:
        h, w = frame.shape[:2]
        g = self.grid
        ys = np.linspace(0, h, g + 1, dtype=int)
        xs = np.linspace(0, w, g + 1, dtype=int)
        cells = [frame[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean(axis=(0, 1))
                 for i in range(g) for j in range(g)]
        return np.concatenate(cells) / 255.0

    def embed_window(self, frames: list[np.ndarray]) -> np.ndarray:
        feats = np.stack([self._pool(f) for f in frames])
        feats = feats + self.pos[: len(frames)]
        logits = self.query @ feats.T / np.sqrt(feats.shape[1])
        logits -= logits.max(axis=1, keepdims=True)
        attn = np.exp(logits)
        attn /= attn.sum(axis=1, keepdims=True)
        return ((attn @ feats) @ self.proj).astype(np.float32)


_REGISTRY = {
    "pooled-rp": lambda: PooledProjectionBackbone(),
    "pooled-rp-small": lambda: PooledProjectionBackbone(t_v=4, e=16),
}


def register(name: str, factory) -> None:
    _REGISTRY[name] = factory


def load_backbone(identifier: str):
    try:
        factory = _REGISTRY[identifier]
    except KeyError:
        raise JobError(
            f"unknown backbone {identifier!r}; available: {sorted(_REGISTRY)}"
        ) from None
    backbone = factory()
    for attr in ("t_v", "e", "embed_window"):
        if not hasattr(backbone, attr):
            raise JobError(f"backbone {identifier!r} lacks {attr}")
    return backbone


def backbone_fingerprint(identifier: str) -> int:
    """Stable id recorded alongside outputs; crc of the identifier."""
    return zlib.crc32(identifier.encode())
