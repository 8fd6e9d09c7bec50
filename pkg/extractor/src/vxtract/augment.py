"""Pixel-domain training augmentations.

Per video: with probability 0.3 exactly one of Gaussian blur (kernel 15,
sigma uniform in (0, 3)) or JPEG re-compression (quality uniform in
[65, 95]), picked with equal odds; with 0.2 a temporal blur (uniform kernel
of 3 over consecutive frames); each flip axis with 0.5; with 0.2 a random
resized crop to 300x300 (scale [0.9, 1.1], aspect ratio [0.75, 1.33]) whose
rectangle is shared by every frame of the video.
"""

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import JobError


@dataclass(frozen=True)
class AugmentationPolicy:
    p_blur_or_jpeg: float = 0.3
    p_temporal_blur: float = 0.2
    p_flip: float = 0.5          # per axis
    p_crop: float = 0.2
    crop_size: int = 300
    crop_scale: tuple[float, float] = (0.9, 1.1)
    crop_ratio: tuple[float, float] = (0.75, 1.33)

    def __post_init__(self):
        for name in ("p_blur_or_jpeg", "p_temporal_blur", "p_flip", "p_crop"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise JobError(f"{name}={p} is not a probability")


@dataclass(frozen=True)
class AugmentationDraw:
    """One video's sampled decisions; applying it twice is deterministic."""

    blur_sigma: float | None      # set iff Gaussian blur drawn
    jpeg_quality: int | None      # set iff JPEG drawn (exclusive with blur)
    temporal_blur: bool
    vflip: bool
    hflip: bool
    crop_rect: tuple[int, int, int, int] | None  # (top, left, height, width)


def _sample_crop(rng, height, width, policy):
    area = height * width
    log_ratio = np.log(policy.crop_ratio)
    for _ in range(10):
        target = area * rng.uniform(*policy.crop_scale)
        ratio = float(np.exp(rng.uniform(*log_ratio)))
        w = round(np.sqrt(target * ratio))
        h = round(np.sqrt(target / ratio))
        if 0 < w <= width and 0 < h <= height:
            top = int(rng.integers(0, height - h + 1))
            left = int(rng.integers(0, width - w + 1))
            return top, left, h, w
    side = min(height, width)
    return (height - side) // 2, (width - side) // 2, side, side


def plan_augmentation(policy: AugmentationPolicy, rng: np.random.Generator,
                      frame_shape: tuple[int, int]) -> AugmentationDraw:
    """Sample every per-video decision up front (one rng consumption order)."""
    blur_sigma = jpeg_quality = None
    if rng.uniform() < policy.p_blur_or_jpeg:
        if rng.uniform() < 0.5:
            blur_sigma = float(rng.uniform(0.0, 3.0))
        else:
            jpeg_quality = int(rng.integers(65, 96))
    temporal = bool(rng.uniform() < policy.p_temporal_blur)
    vflip = bool(rng.uniform() < policy.p_flip)
    hflip = bool(rng.uniform() < policy.p_flip)
    crop = None
    if rng.uniform() < policy.p_crop:
        crop = _sample_crop(rng, frame_shape[0], frame_shape[1], policy)
    return AugmentationDraw(blur_sigma, jpeg_quality, temporal, vflip, hflip, crop)


def apply_augmentation(frames: list[np.ndarray], draw: AugmentationDraw,
                       policy: AugmentationPolicy = AugmentationPolicy()) -> list[np.ndarray]:
    """Apply a draw to every frame of one video (RGB uint8 in, same out)."""
    out = [np.asarray(f) for f in frames]
    if draw.blur_sigma is not None:
        out = [cv2.GaussianBlur(f, (15, 15), draw.blur_sigma) for f in out]
    elif draw.jpeg_quality is not None:
        flag = [int(cv2.IMWRITE_JPEG_QUALITY), draw.jpeg_quality]
        out = [cv2.imdecode(cv2.imencode(".jpg", f, flag)[1], cv2.IMREAD_COLOR)
               for f in out]
    if draw.temporal_blur:
        stack = np.stack(out).astype(np.float64)
        padded = np.concatenate([stack[:1], stack, stack[-1:]])
        out = [np.round((padded[i] + padded[i + 1] + padded[i + 2]) / 3.0)
               .astype(np.uint8) for i in range(len(out))]
    if draw.vflip:
        out = [f[::-1].copy() for f in out]
    if draw.hflip:
        out = [f[:, ::-1].copy() for f in out]
    if draw.crop_rect is not None:
        top, left, h, w = draw.crop_rect
        size = (policy.crop_size, policy.crop_size)
        out = [cv2.resize(f[top:top + h, left:left + w], size,
                          interpolation=cv2.INTER_LINEAR) for f in out]
    return out


def augment_video(frames, policy: AugmentationPolicy, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    draw = plan_augmentation(policy, rng, frames[0].shape[:2])
    return apply_augmentation(frames, draw, policy)
