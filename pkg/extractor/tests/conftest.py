import cv2
import numpy as np
import pytest


def make_clip(path, n_frames=64, size=(160, 120), seed=0):
    """Write a small decodable mp4 (mp4v) with moving structured content."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, (size[1], size[0], 3), dtype=np.uint8)
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), 10, size)
    assert writer.isOpened()
    for i in range(n_frames):
        frame = np.roll(base, shift=3 * i, axis=1).copy()
        cv2.putText(frame, str(i), (10, 60), cv2.FONT_HERSHEY_SIMPLEX, 1,
                    (255, 255, 255), 2)
        writer.write(frame)
    writer.release()
    return str(path)


@pytest.fixture(scope="session")
def clip64(tmp_path_factory):
    return make_clip(tmp_path_factory.mktemp("clips") / "clip64.mp4", 64)
