import math

import numpy as np
import pytest

from vipera.errors import ConfigError, ConstraintError
from vipera.head import (
    HeadConfig,
    HeadParams,
    head_backward,
    head_forward,
    init_head,
    prototype_score,
    sigma_from_rho,
    softplus,
)

RHO_SIGMA_E = math.log(math.e - 1.0)  # softplus -> 1, sigma -> e


def zero_params(cfg: HeadConfig) -> HeadParams:
    return HeadParams(
        w1=np.zeros((cfg.t_v, cfg.t), np.float32),
        w2=np.zeros((cfg.e_in, cfg.e_red), np.float32),
        w3=np.zeros((cfg.t * cfg.e_red, cfg.c), np.float32),
        centroids=np.zeros(cfg.c, np.float32),
        rho=np.full(cfg.c, RHO_SIGMA_E, np.float32),
    )


# ---------------------------------------------------------------------------
# prototype score


def test_score_centered_equals_c_log_sigma():
    assert prototype_score([0.0], [0.0], [math.e]) == pytest.approx(1.0, abs=1e-12)
    # C = 2, both components centered: min over k of C * log sigma_k
    assert prototype_score([1.0, 1.0], [1.0, 1.0], [math.e, math.e ** 2]) == pytest.approx(2.0)


def test_score_direct_evaluation():
    s = prototype_score([2.0], [0.0], [math.sqrt(math.e)])
    assert s == pytest.approx(2.0 / (2.0 * math.e) + 0.5, abs=1e-12)
    assert s == pytest.approx(0.86788, abs=1e-5)
    s = prototype_score([-2.0], [0.0], [math.sqrt(math.e)])
    assert s == pytest.approx(0.13212, abs=1e-5)


def test_score_rejects_small_sigma():
    with pytest.raises(ConstraintError):
        prototype_score([0.0], [0.0], [1.0])
    with pytest.raises(ConstraintError):
        prototype_score([0.0], [0.0], [0.5])


def test_score_monotone_in_omega():
    omegas = np.linspace(-5, 5, 101)
    scores = [prototype_score([w], [0.3], [2.0]) for w in omegas]
    assert all(b >= a for a, b in zip(scores, scores[1:]))


def test_score_scale_relation():
    # doubling sigma divides the distance term by 4 and adds C*log 2
    w, c, sig = 1.7, 0.2, 1.5
    base_dist = (w - c) / (2 * sig ** 2)
    s1 = prototype_score([w], [c], [sig])
    s2 = prototype_score([w], [c], [2 * sig])
    assert s2 - s1 == pytest.approx(-0.75 * base_dist + math.log(2), abs=1e-12)


def test_squared_distance_variant():
    s = prototype_score([2.0], [0.0], [math.sqrt(math.e)], squared_distance=True)
    assert s == pytest.approx(4.0 / (2.0 * math.e) + 0.5, abs=1e-12)


# ---------------------------------------------------------------------------
# forward


def test_forward_zero_weights():
    cfg = HeadConfig(t_v=4, e_in=6, t=2, e_red=3)
    s, act = head_forward(np.ones((4, 6), np.float32), zero_params(cfg), cfg)
    assert act.omega.tolist() == [0.0]
    assert s == pytest.approx(1.0)


def test_forward_zero_input():
    cfg = HeadConfig(t_v=4, e_in=6, t=2, e_red=3)
    params = init_head(cfg, 3)
    _, act = head_forward(np.zeros((4, 6), np.float32), params, cfg)
    assert act.omega.tolist() == [0.0]


def test_forward_hand_chain():
    cfg = HeadConfig(t_v=2, e_in=2, t=2, e_red=2)
    params = zero_params(cfg)
    params.w1 = np.array([[1, 0], [0, 2]], np.float32)
    params.w2 = np.array([[1, 1], [0, 1]], np.float32)
    params.w3 = np.arange(1, 5, dtype=np.float32).reshape(4, 1)
    v = np.array([[1, 2], [3, 4]], np.float32)
    # H1 = W1^T V = [[1,2],[6,8]]; H2 = H1 W2 = [[1,3],[6,14]]
    # h = [1,3,6,14]; omega = 1+6+18+56 = 81
    s, act = head_forward(v, params, cfg)
    assert act.h.tolist() == [1, 3, 6, 14]
    assert act.omega[0] == pytest.approx(81.0)
    assert s == pytest.approx(81.0 / (2 * math.e ** 2) + 1.0)


def test_forward_shape_mismatch():
    cfg = HeadConfig(t_v=4, e_in=6)
    with pytest.raises(ConfigError):
        head_forward(np.zeros((3, 6), np.float32), init_head(cfg, 0), cfg)


# ---------------------------------------------------------------------------
# backward

def finite_difference_grads(v, params, cfg, step=1e-3):
    """Central finite differences on a 64-bit shadow of every parameter."""
    out = {}
    for name in ("w1", "w2", "w3", "centroids", "rho"):
        base = getattr(params, name).astype(np.float64)
        g = np.zeros_like(base)
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            for sign, bucket in ((+1, "hi"), (-1, "lo")):
                shadow = params.astype(np.float64)
                arr = getattr(shadow, name)
                arr[idx] = base[idx] + sign * step
                s, _ = head_forward(v, shadow, cfg)
                if sign > 0:
                    hi = s
                else:
                    lo = s
            g[idx] = (hi - lo) / (2 * step)
        out[name] = g
    return out


def random_instance(rng, cfg):
    params = init_head(cfg, int(rng.integers(1 << 30)))
    params.centroids = rng.normal(0, 0.5, cfg.c).astype(np.float32)
    params.rho = rng.uniform(-0.5, 1.5, cfg.c).astype(np.float32)
    v = rng.normal(0, 1, (cfg.t_v, cfg.e_in)).astype(np.float32)
    return params, v


@pytest.mark.parametrize("squared", [False, True])
def test_gradients_match_finite_differences(squared):
    cfg = HeadConfig(t_v=3, e_in=4, t=2, e_red=3, squared_distance=squared)
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 20:
        params, v = random_instance(rng, cfg)
        p64 = params.astype(np.float64)
        s, act = head_forward(v, p64, cfg)
        if abs(float(np.sum(act.omega - p64.centroids))) < 1e-6:
            continue  # sign kink excluded
        analytic = head_backward(act, p64, cfg, 1.0)
        fd = finite_difference_grads(v, params, cfg)
        for name, g_fd in fd.items():
            g_an = getattr(analytic, name)
            rel = np.linalg.norm(g_an - g_fd) / max(np.linalg.norm(g_fd), 1e-12)
            assert rel < 1e-4, f"{name}: rel error {rel}"
        checked += 1


def test_backward_zero_upstream():
    cfg = HeadConfig(t_v=3, e_in=4, t=2, e_red=3)
    params = init_head(cfg, 0).astype(np.float64)
    _, act = head_forward(np.ones((3, 4)), params, cfg)
    grads = head_backward(act, params, cfg, 0.0)
    for name in ("w1", "w2", "w3", "centroids", "rho"):
        assert not np.any(getattr(grads, name))


def test_score_slope_constant():
    # away from the kink d s / d omega = 1 / (2 sigma^2)
    cfg = HeadConfig(t_v=1, e_in=1, t=1, e_red=1)
    params = zero_params(cfg)
    params.w1 = np.ones((1, 1), np.float32)
    params.w2 = np.ones((1, 1), np.float32)
    params.w3 = np.ones((1, 1), np.float32)
    sigma = float(sigma_from_rho(params.rho)[0])
    for x in (0.5, -0.5, 3.0):
        p64 = params.astype(np.float64)
        _, act = head_forward(np.array([[x]]), p64, cfg)
        g = head_backward(act, p64, cfg, 1.0)
        # omega == v here, so dW3 slope equals ds/domega * h
        assert g.w3[0, 0] == pytest.approx(x / (2 * sigma ** 2), rel=1e-12)


# ---------------------------------------------------------------------------
# init


def test_init_deterministic():
    cfg = HeadConfig(t_v=4, e_in=8)
    a, b = init_head(cfg, 42), init_head(cfg, 42)
    for name in ("w1", "w2", "w3", "centroids", "rho"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_init_satisfies_sigma_constraint():
    params = init_head(HeadConfig(t_v=4, e_in=8), 0)
    assert np.all(softplus(params.rho) > 0)
    assert np.allclose(params.sigma, math.e, rtol=1e-6)


def test_init_mean_near_zero():
    cfg = HeadConfig(t_v=100, e_in=8, t=100)  # 10^4 W1 entries
    params = init_head(cfg, 123)
    lim = math.sqrt(6.0 / (cfg.t_v + cfg.t))
    se = lim / math.sqrt(3.0) / math.sqrt(params.w1.size)  # uniform sd = lim/sqrt(3)
    assert abs(float(params.w1.mean())) < 3 * se
