"""Extraction jobs: decode a video, preprocess, embed windows, write .vemb."""

from dataclasses import dataclass

import cv2
import numpy as np

from .augment import AugmentationPolicy, augment_video
from .backbones import load_backbone
from .errors import JobError
from .plan import frame_indices, uniform_starts, train_starts
from .vemb import write_mode_b

RESIZE = 224
N_WINDOWS = 8
WINDOW_LEN = 8


@dataclass(frozen=True)
class ExtractionJob:
    video_path: str
    out_path: str
    plan: str = "test"            # "test": uniform starts; "train": random
    augment: bool = False
    seed: int = 0
    backbone: str = "pooled-rp"

    def __post_init__(self):
        if self.plan not in ("test", "train"):
            raise JobError(f"plan must be 'test' or 'train', got {self.plan!r}")


def decode_video(path: str) -> list[np.ndarray]:
    """All frames as RGB uint8 arrays."""
    cap = cv2.VideoCapture(path)
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise JobError(f"cannot decode any frames from {path}")
    return frames


def run_job(job: ExtractionJob) -> str:
    frames = decode_video(job.video_path)
    if job.augment:
        frames = augment_video(frames, AugmentationPolicy(), job.seed)
    frames = [cv2.resize(f, (RESIZE, RESIZE), interpolation=cv2.INTER_LINEAR)
              for f in frames]
    n = len(frames)
    if job.plan == "test":
        starts = uniform_starts(n, N_WINDOWS, WINDOW_LEN)
    else:
        starts = train_starts(n, N_WINDOWS, WINDOW_LEN,
                              np.random.default_rng(job.seed))
    backbone = load_backbone(job.backbone)
    windows = []
    for start in starts:
        window = [frames[i] for i in frame_indices(start, WINDOW_LEN, n)]
        windows.append((start, backbone.embed_window(window)))
    write_mode_b(job.out_path, WINDOW_LEN, windows)
    return job.out_path
