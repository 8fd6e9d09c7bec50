"""Stand-alone writer for the engine's mode-B .vemb interchange format.

Layout (little-endian):
    magic "VEMB" | version u16 = 1 | mode u8 = 'B'
    d0 u32 | d1 u32 | window_count u32 | j u32
    per window: start u32 | d0*d1 float32, row-major

Written from the published byte layout, deliberately without importing the
engine package: the file format is the interop contract.
"""

import struct

import numpy as np

_HEADER = struct.Struct("<4sHBIIII")
MAGIC = b"VEMB"
VERSION = 1


def write_mode_b(path, j: int, windows) -> None:
    """windows: iterable of (start, (d0, d1) float32 array), all same shape."""
    windows = [(int(s), np.ascontiguousarray(m, dtype="<f4")) for s, m in windows]
    if not windows:
        raise ValueError("a .vemb file needs at least one window")
    d0, d1 = windows[0][1].shape
    parts = [_HEADER.pack(MAGIC, VERSION, ord("B"), d0, d1, len(windows), j)]
    for start, mat in windows:
        if mat.shape != (d0, d1):
            raise ValueError(f"inconsistent window shapes: {mat.shape} vs {(d0, d1)}")
        if not np.isfinite(mat).all():
            raise ValueError("non-finite embedding values")
        parts.append(struct.pack("<I", start))
        parts.append(mat.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))
