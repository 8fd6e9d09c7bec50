"""Dense float32 matrix helpers shared by the whole engine.

Values are stored as float32 (the interchange precision of the embedding
files); matmul and row reductions accumulate in float64 so that gradient
checks against a 64-bit shadow stay tight.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

# Tightest representable open interval (0, 1) for clamped probabilities.
_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with float64 accumulation.

    The result dtype follows numpy promotion of the operands (float32 in,
    float32 out; any float64 operand promotes the result).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    out_dtype = np.result_type(a.dtype, b.dtype, np.float32)
    prod = a.astype(np.float64, copy=False) @ b.astype(np.float64, copy=False)
    return prod.astype(out_dtype, copy=False)


def sigmoid(x):
    """Numerically stable logistic function, output clamped to open (0, 1).

    Branch-free form: exp(-|x|) never overflows, so inputs of any magnitude
    are safe.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    out = np.clip(out, _OPEN_LO, _OPEN_HI)
    if out.ndim == 0:
        return float(out)
    return out


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction stabilization."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"softmax_rows expects a 2-D matrix, got shape {m.shape}")
    out_dtype = np.result_type(m.dtype, np.float32)
    shifted = m.astype(np.float64, copy=False) - m.max(axis=1, keepdims=True).astype(np.float64)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)
    return out.astype(out_dtype, copy=False)


def require_finite(name: str, a: np.ndarray) -> None:
    if not np.isfinite(a).all():
        raise ShapeError(f"{name} contains non-finite values")
