import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from vipera.errors import EmptyInputError
from vipera.sampler import aggregate, plan_training_windows, plan_windows


def test_plan_64_8_8():
    assert plan_windows(64, 8, 8).starts == (0, 8, 16, 24, 32, 40, 48, 56)


def test_plan_71_8_8():
    assert plan_windows(71, 8, 8).starts == (0, 9, 18, 27, 36, 45, 54, 63)


def test_plan_degenerate_minimum():
    plan = plan_windows(8, 8, 8)
    assert plan.starts == (0,) * 8
    assert all(idx == tuple(range(8)) for idx in plan.frame_indices)


def test_plan_short_video_pads_last_frame():
    plan = plan_windows(5, 2, 8)
    assert plan.starts == (0, 0)
    assert plan.frame_indices[0] == (0, 1, 2, 3, 4, 4, 4, 4)


def test_plan_empty_video():
    with pytest.raises(EmptyInputError):
        plan_windows(0, 8, 8)


@given(st.integers(1, 500), st.integers(1, 16), st.integers(1, 16))
@settings(max_examples=1000)
def test_plan_consecutive_and_sorted(n, b, j):
    plan = plan_windows(n, b, j)
    assert len(plan.starts) == b
    assert list(plan.starts) == sorted(plan.starts)
    for start, idx in zip(plan.starts, plan.frame_indices):
        assert len(idx) == j
        assert all(0 <= i < n for i in idx)
        if n >= j:
            assert idx == tuple(range(start, start + j))


def test_training_plan_single_placement():
    plan = plan_training_windows(8, 5, 8, np.random.default_rng(0))
    assert plan.starts == (0,) * 5


def test_training_plan_deterministic():
    a = plan_training_windows(100, 5, 8, np.random.default_rng(42))
    b = plan_training_windows(100, 5, 8, np.random.default_rng(42))
    assert a == b


def test_training_plan_uniform_starts():
    rng = np.random.default_rng(1)
    counts = np.zeros(93, dtype=int)  # valid starts 0..92 for n=100, j=8
    for _ in range(2000):
        for s in plan_training_windows(100, 5, 8, rng).starts:
            counts[s] += 1
    _, p = stats.chisquare(counts)
    assert p > 0.01


def test_aggregate_all_zero_is_real():
    v = aggregate([0.0] * 8)
    assert v.phi == 0.5
    assert v.decision == "real"


def test_aggregate_ln3():
    v = aggregate([math.log(3), 0, 0, 0, 0, 0, 0, 0])
    assert v.phi == pytest.approx(0.75, abs=1e-12)
    assert v.decision == "fake"


def test_aggregate_empty():
    with pytest.raises(EmptyInputError):
        aggregate([])


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=12), st.randoms())
@settings(max_examples=200)
def test_aggregate_permutation_invariant(scores, rnd):
    shuffled = list(scores)
    rnd.shuffle(shuffled)
    a, b = aggregate(scores), aggregate(shuffled)
    assert a.phi == pytest.approx(b.phi, abs=1e-12)
    assert a.decision == b.decision


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=12))
@settings(max_examples=200)
def test_aggregate_decision_equivalence(scores):
    v = aggregate(scores)
    total = math.fsum(scores)
    assert (v.decision == "fake") == (total > 0)
    assert (v.phi > 0.5) == (total > 0) or math.isclose(v.phi, 0.5)


def test_aggregate_monotone_in_single_score():
    base = [0.3, -1.2, 0.7]
    lo = aggregate(base).phi
    bumped = list(base)
    bumped[1] += 0.5
    assert aggregate(bumped).phi > lo
