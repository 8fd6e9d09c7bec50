"""Trainable classification head: three linear maps plus a learned-prototype score.

Forward path for an embedding V of shape (t_v, e_in):

    H1 = W1^T V          (t, e_in)
    H2 = H1 W2           (t, e_red)
    h  = flatten(H2)     (t * e_red,)
    omega = W3^T h       (c,)
    s  = prototype_score(omega, centroids, sigma)

The spread sigma is parametrized as exp(softplus(rho)) so log(sigma) > 0 holds
by construction after every optimizer step. Internals compute in float64; the
stored parameters are float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConstraintError, ShapeError

PARAM_FIELDS = ("w1", "w2", "w3", "centroids", "rho")


@dataclass(frozen=True)
class HeadConfig:
    t_v: int            # input token count
    e_in: int           # input width
    t: int = 4          # intermediate token count
    e_red: int = 8      # reduced width
    c: int = 1          # prototype / output dimension
    squared_distance: bool = False

    def __post_init__(self):
        for f in ("t_v", "e_in", "t", "e_red", "c"):
            if getattr(self, f) < 1:
                raise ConfigError(f"HeadConfig.{f} must be >= 1")


@dataclass
class HeadParams:
    w1: np.ndarray          # t_v x t
    w2: np.ndarray          # e_in x e_red
    w3: np.ndarray          # (t * e_red) x c
    centroids: np.ndarray   # (c,)
    rho: np.ndarray         # (c,), sigma = exp(softplus(rho))

    def copy(self) -> "HeadParams":
        return HeadParams(*(getattr(self, f).copy() for f in PARAM_FIELDS))

    def astype(self, dtype) -> "HeadParams":
        return HeadParams(*(getattr(self, f).astype(dtype) for f in PARAM_FIELDS))

    @property
    def sigma(self) -> np.ndarray:
        return sigma_from_rho(self.rho)


@dataclass
class HeadActivation:
    """Intermediates cached between forward and backward (float64)."""

    v: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h: np.ndarray
    omega: np.ndarray
    score: float


@dataclass
class HeadGrads:
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    centroids: np.ndarray
    rho: np.ndarray

    def add_(self, other: "HeadGrads") -> None:
        for f in PARAM_FIELDS:
            getattr(self, f).__iadd__(getattr(other, f))


def softplus(x):
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def sigma_from_rho(rho) -> np.ndarray:
    return np.exp(softplus(rho))


def init_head(cfg: HeadConfig, seed: int) -> HeadParams:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero centroids, sigma = e."""
    rng = np.random.default_rng(seed)

    def glorot(rows, cols):
        lim = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-lim, lim, size=(rows, cols)).astype(np.float32)

    rho0 = math.log(math.e - 1.0)  # softplus(rho0) = 1, so sigma = e
    return HeadParams(
        w1=glorot(cfg.t_v, cfg.t),
        w2=glorot(cfg.e_in, cfg.e_red),
        w3=glorot(cfg.t * cfg.e_red, cfg.c),
        centroids=np.zeros(cfg.c, dtype=np.float32),
        rho=np.full(cfg.c, rho0, dtype=np.float32),
    )


def _component_terms(d, sigma, c_dim, squared):
    dist = d * d if squared else np.abs(d)
    return np.sign(d) * dist / (2.0 * sigma * sigma) + c_dim * np.log(sigma)


def prototype_score(omega, centroids, sigma, squared_distance: bool = False) -> float:
    """Signed prototype distance score.

    C = 1: sign(omega - c) * |omega - c| / (2 sigma^2) + log sigma, with
    sign(0) = 0. For C > 1 the score is the minimum of the per-component
    terms, each carrying the C * log(sigma_k) offset.
    """
    omega = np.asarray(omega, dtype=np.float64).reshape(-1)
    centroids = np.asarray(centroids, dtype=np.float64).reshape(-1)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    if not (omega.shape == centroids.shape == sigma.shape):
        raise ShapeError(
            f"prototype_score: mismatched shapes omega {omega.shape}, "
            f"c {centroids.shape}, sigma {sigma.shape}"
        )
    if np.any(sigma <= 1.0):
        raise ConstraintError("prototype spreads must satisfy log sigma > 0 (sigma > 1)")
    terms = _component_terms(omega - centroids, sigma, omega.size, squared_distance)
    return float(terms.min())


def head_forward(v: np.ndarray, params: HeadParams, cfg: HeadConfig) -> tuple[float, HeadActivation]:
    v = np.asarray(v)
    if v.shape != (cfg.t_v, cfg.e_in):
        raise ConfigError(
            f"head_forward: embedding shape {v.shape} does not match config "
            f"({cfg.t_v}, {cfg.e_in})"
        )
    if params.w1.shape != (cfg.t_v, cfg.t) or params.w2.shape != (cfg.e_in, cfg.e_red) \
            or params.w3.shape != (cfg.t * cfg.e_red, cfg.c):
        raise ConfigError("head_forward: parameter shapes do not match config")
    v64 = v.astype(np.float64)
    w1 = params.w1.astype(np.float64)
    w2 = params.w2.astype(np.float64)
    w3 = params.w3.astype(np.float64)
    h1 = w1.T @ v64
    h2 = h1 @ w2
    h = h2.reshape(-1)
    omega = w3.T @ h
    s = prototype_score(omega, params.centroids, params.sigma, cfg.squared_distance)
    return s, HeadActivation(v=v64, h1=h1, h2=h2, h=h, omega=omega, score=s)


def head_backward(act: HeadActivation, params: HeadParams, cfg: HeadConfig,
                  dl_ds: float) -> HeadGrads:
    """Analytic gradients of a scalar loss through the head.

    Gradient flows through the arg-min prototype component only; at the
    non-differentiable point omega_k = c_k the distance-term subgradient
    is taken as 0.
    """
    t, e_red, c_dim = cfg.t, cfg.e_red, cfg.c
    if act.h.shape[0] != t * e_red or act.omega.shape[0] != c_dim:
        raise ShapeError("head_backward: activation does not match config shapes")
    d = act.omega - params.centroids.astype(np.float64)
    sigma = params.sigma
    terms = _component_terms(d, sigma, c_dim, cfg.squared_distance)
    k = int(np.argmin(terms))
    dk, sk = d[k], sigma[k]

    d_omega = np.zeros(c_dim)
    d_cent = np.zeros(c_dim)
    d_sigma = np.zeros(c_dim)
    if dk != 0.0:
        slope = abs(dk) / (sk * sk) if cfg.squared_distance else 1.0 / (2.0 * sk * sk)
        d_omega[k] = slope
        d_cent[k] = -slope
        dist = dk * abs(dk) if cfg.squared_distance else dk
        d_sigma[k] = -dist / (sk ** 3) + c_dim / sk
    else:
        d_sigma[k] = c_dim / sk
    # sigma = exp(softplus(rho)): d sigma / d rho = sigma * logistic(rho)
    rho64 = params.rho.astype(np.float64)
    d_rho = d_sigma * sigma * (1.0 / (1.0 + np.exp(-rho64)))

    dh = params.w3.astype(np.float64) @ d_omega
    dh2 = dh.reshape(t, e_red)
    dw3 = np.outer(act.h, d_omega)
    dw2 = act.h1.T @ dh2
    dh1 = dh2 @ params.w2.astype(np.float64).T
    dw1 = act.v @ dh1.T
    return HeadGrads(
        w1=dw1 * dl_ds,
        w2=dw2 * dl_ds,
        w3=dw3 * dl_ds,
        centroids=d_cent * dl_ds,
        rho=d_rho * dl_ds,
    )


def zero_grads(cfg: HeadConfig) -> HeadGrads:
    return HeadGrads(
        w1=np.zeros((cfg.t_v, cfg.t)),
        w2=np.zeros((cfg.e_in, cfg.e_red)),
        w3=np.zeros((cfg.t * cfg.e_red, cfg.c)),
        centroids=np.zeros(cfg.c),
        rho=np.zeros(cfg.c),
    )
