"""Window planning, mirroring the engine's sampler semantics.

Test-time: B windows of J consecutive frames with uniformly spaced starts,
start_b = round(b * (n - J) / (B - 1)). Train-time: starts drawn uniformly
from [0, n - J]. Clips shorter than J repeat their last frame.
"""

import math

import numpy as np


def uniform_starts(n_frames: int, b: int, j: int) -> tuple[int, ...]:
    if b == 1 or n_frames <= j:
        return (0,) * b
    span = n_frames - j
    return tuple(max(0, int(math.floor(i * span / (b - 1) + 0.5))) for i in range(b))


def train_starts(n_frames: int, b: int, j: int, rng: np.random.Generator) -> tuple[int, ...]:
    hi = max(0, n_frames - j)
    return tuple(int(rng.integers(0, hi + 1)) for _ in range(b))


def frame_indices(start: int, j: int, n_frames: int) -> tuple[int, ...]:
    return tuple(min(start + k, n_frames - 1) for k in range(j))
