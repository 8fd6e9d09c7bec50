"""Frozen spatio-temporal embedding pipeline at toy scale.

Frame encoder -> sinusoidal positional encoding -> single-head cross-attention
pooling to a fixed number of visual tokens -> linear projection. All weights
are derived deterministically from a seed and never updated by training.

The frame encoder is a stand-in for a real pretrained backbone: each frame is
pooled over non-overlapping regions, the pooled vectors are pushed through a
fixed seeded random projection, and each token is normalized to unit length
(zero-norm tokens stay zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import CapacityError, ConfigError, ShapeError
from .numcore import matmul, softmax_rows

FRAME_SIZE = 224
_POOL_SUBDIV = 2  # per-region sub-blocks per axis; pooled vector is 2*2*3 long
POOL_DIM = _POOL_SUBDIV * _POOL_SUBDIV * 3


@dataclass(frozen=True)
class BackboneConfig:
    m_f: int = 16     # tokens per frame
    d_f: int = 64     # frame-feature width
    t_v: int = 8      # pooled visual tokens
    d_v: int = 64     # visual-token width
    e: int = 128      # projected width
    j_max: int = 64   # positional-table capacity
    seed: int = 0

    def __post_init__(self):
        for f in ("m_f", "d_f", "t_v", "d_v", "e", "j_max"):
            if getattr(self, f) < 1:
                raise ConfigError(f"BackboneConfig.{f} must be >= 1")


@dataclass(frozen=True)
class FrozenWeights:
    """Seeded, immutable weights; the positional table is parameter-free."""

    enc_proj: np.ndarray    # POOL_DIM x d_f
    query: np.ndarray       # t_v x d_f
    value_map: np.ndarray   # d_f x d_v
    w_v: np.ndarray         # d_v x e
    pos_table: np.ndarray   # j_max x d_f

    def arrays(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def sinusoidal_table(j_max: int, d_f: int) -> np.ndarray:
    """Standard sin/cos encoding over frame index."""
    pos = np.arange(j_max, dtype=np.float64)[:, None]
    dim = np.arange(d_f, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(dim / 2.0) / d_f)
    table = np.where(dim % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(np.float32)


def make_frozen_weights(cfg: BackboneConfig) -> FrozenWeights:
    rng = np.random.default_rng(cfg.seed)

    def gauss(rows, cols):
        scale = 1.0 / math.sqrt(rows)
        return (rng.standard_normal((rows, cols)) * scale).astype(np.float32)

    return FrozenWeights(
        enc_proj=gauss(POOL_DIM, cfg.d_f),
        query=gauss(cfg.t_v, cfg.d_f),
        value_map=gauss(cfg.d_f, cfg.d_v),
        w_v=gauss(cfg.d_v, cfg.e),
        pos_table=sinusoidal_table(cfg.j_max, cfg.d_f),
    )


def _region_slices(n: int, parts: int):
    bounds = np.linspace(0, n, parts + 1).round().astype(int)
    return [slice(bounds[i], bounds[i + 1]) for i in range(parts)]


def _pool_regions(frame: np.ndarray, m_f: int) -> np.ndarray:
    """Pool a 224x224x3 frame into m_f region descriptors of length POOL_DIM.

    Regions form a g x g grid when m_f is a perfect square, otherwise m_f
    vertical strips. Each region is averaged over a 2x2 sub-block grid per
    channel; pixel values are scaled to [0, 1].
    """
    g = math.isqrt(m_f)
    if g * g == m_f:
        row_parts, col_parts = g, g
    else:
        row_parts, col_parts = 1, m_f
    img = frame.astype(np.float64) / 255.0
    out = np.empty((m_f, POOL_DIM), dtype=np.float64)
    idx = 0
    for rs in _region_slices(FRAME_SIZE, row_parts):
        for cs in _region_slices(FRAME_SIZE, col_parts):
            region = img[rs, cs]
            feats = []
            for sr in _region_slices(region.shape[0], _POOL_SUBDIV):
                for sc in _region_slices(region.shape[1], _POOL_SUBDIV):
                    block = region[sr, sc]
                    if block.size == 0:
                        feats.extend([0.0, 0.0, 0.0])
                    else:
                        feats.extend(block.reshape(-1, 3).mean(axis=0))
            out[idx] = feats
            idx += 1
    return out


def encode_frame(frame: np.ndarray, weights: FrozenWeights, cfg: BackboneConfig) -> np.ndarray:
    """Encode one 224x224x3 uint8 frame into an m_f x d_f token matrix."""
    frame = np.asarray(frame)
    if frame.shape != (FRAME_SIZE, FRAME_SIZE, 3):
        raise ShapeError(
            f"encode_frame expects a {FRAME_SIZE}x{FRAME_SIZE}x3 frame, got {frame.shape}"
        )
    pooled = _pool_regions(frame, cfg.m_f)
    tokens = pooled @ weights.enc_proj.astype(np.float64)
    norms = np.linalg.norm(tokens, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)  # zero-norm tokens stay zero
    return (tokens / safe).astype(np.float32)


def add_positional(frames: list[np.ndarray], pos_table: np.ndarray) -> list[np.ndarray]:
    """F' = F + P: add the frame-index encoding to every token of that frame."""
    if len(frames) > pos_table.shape[0]:
        raise CapacityError(
            f"{len(frames)} frames exceed the positional table capacity {pos_table.shape[0]}"
        )
    out = []
    for j, f in enumerate(frames):
        if f.shape[1] != pos_table.shape[1]:
            raise ShapeError(
                f"frame features width {f.shape[1]} != positional width {pos_table.shape[1]}"
            )
        out.append((f.astype(np.float64) + pos_table[j].astype(np.float64)).astype(np.float32))
    return out


def attention_rows(fprime: list[np.ndarray], weights: FrozenWeights, cfg: BackboneConfig) -> np.ndarray:
    """Cross-attention map: t_v rows over all J*m_f flattened tokens."""
    k = np.vstack(fprime)
    logits = matmul(weights.query, k.T) / math.sqrt(cfg.d_f)
    return softmax_rows(logits)


def qformer(fprime: list[np.ndarray], weights: FrozenWeights, cfg: BackboneConfig) -> np.ndarray:
    """Pool a variable number of frame tokens into a fixed (t_v, d_v) matrix."""
    k = np.vstack(fprime)
    a = attention_rows(fprime, weights, cfg)
    return matmul(matmul(a, k), weights.value_map)


def project(v: np.ndarray, weights: FrozenWeights) -> np.ndarray:
    """Linear projection of pooled tokens into the (t_v, e) embedding space."""
    return matmul(v, weights.w_v)


def embed_batch(frames: list[np.ndarray], weights: FrozenWeights, cfg: BackboneConfig) -> np.ndarray:
    """Full pipeline: encode -> positional -> cross-attention pool -> project."""
    feats = [encode_frame(f, weights, cfg) for f in frames]
    fprime = add_positional(feats, weights.pos_table)
    return project(qformer(fprime, weights, cfg), weights)


def embed_features(feats: list[np.ndarray], weights: FrozenWeights, cfg: BackboneConfig) -> np.ndarray:
    """Pipeline from precomputed per-frame features (mode-A interchange files)."""
    fprime = add_positional(feats, weights.pos_table)
    return project(qformer(fprime, weights, cfg), weights)
