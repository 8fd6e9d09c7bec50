"""Frame-window planning and video-level score aggregation.

Test-time windows are deterministically uniform-spaced, time-continuous runs
of J frames; training windows are drawn uniformly at random. A video shorter
than J frames yields a single run padded by repeating its last frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ShapeError
from .numcore import sigmoid


@dataclass(frozen=True)
class WindowPlan:
    b: int
    j: int
    starts: tuple[int, ...]
    frame_indices: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class VideoVerdict:
    scores: tuple[float, ...]
    phi: float
    decision: str  # "real" | "fake"


def _window_indices(start: int, j: int, n_frames: int) -> tuple[int, ...]:
    if n_frames >= start + j:
        return tuple(range(start, start + j))
    # pad by repeating the last available frame
    avail = list(range(start, n_frames))
    return tuple(avail + [n_frames - 1] * (j - len(avail)))


def plan_windows(n_frames: int, b: int, j: int) -> WindowPlan:
    """Deterministic plan: B uniformly spaced starts over the valid range."""
    if n_frames < 1:
        raise EmptyInputError("cannot plan windows for an empty video")
    if n_frames < j:
        starts = tuple(0 for _ in range(b))
    elif b == 1:
        starts = (0,)
    else:
        span = n_frames - j
        starts = tuple(
            max(0, int(math.floor(bi * span / (b - 1) + 0.5))) for bi in range(b)
        )
    indices = tuple(_window_indices(s, j, n_frames) for s in starts)
    return WindowPlan(b=b, j=j, starts=starts, frame_indices=indices)


def plan_training_windows(n_frames: int, b: int = 5, j: int = 8,
                          rng: np.random.Generator | None = None) -> WindowPlan:
    """Random plan: B starts uniform over [0, max(0, n_frames - j)]."""
    if n_frames < 1:
        raise EmptyInputError("cannot plan windows for an empty video")
    if rng is None:
        rng = np.random.default_rng()
    hi = max(0, n_frames - j)
    starts = tuple(sorted(int(s) for s in rng.integers(0, hi + 1, size=b)))
    indices = tuple(_window_indices(s, j, n_frames) for s in starts)
    return WindowPlan(b=b, j=j, starts=starts, frame_indices=indices)


def aggregate(scores) -> VideoVerdict:
    """phi = sigmoid(sum of per-window scores); fake iff the sum is positive.

    The tie (sum exactly 0, phi exactly 0.5) resolves to real, so the
    decision is computed from the sum directly and agrees with phi > 0.5.
    """
    scores = tuple(float(s) for s in scores)
    if not scores:
        raise EmptyInputError("aggregate requires at least one window score")
    total = math.fsum(scores)  # exactly rounded, so the sign is exact
    if not math.isfinite(total):
        raise ShapeError("aggregate requires finite scores")
    phi = sigmoid(total)
    return VideoVerdict(scores=scores, phi=phi, decision="fake" if total > 0 else "real")
