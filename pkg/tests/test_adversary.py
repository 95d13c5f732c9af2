from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlusion.adversary import CorruptionPlan, audit_plan, corrupt, window_counts
from occlusion.model import BACKGROUND, make_rng


def test_zero_alpha_is_identity():
    img = np.arange(20) % 4
    out, plan = corrupt(img, 0, 5, make_rng(0))
    assert out.pixels == tuple(img.tolist()) and plan.flips == ()


def test_budget_respected_uniform():
    img = np.arange(100) % 7
    out, plan = corrupt(img, 0.1, 10, make_rng(1), c=7)
    assert plan.budget == 1
    assert window_counts(plan.positions, 100, 10).max() <= 1
    assert audit_plan(plan, img, out)


def test_cluster_saturates_two_per_window():
    img = np.zeros(60, dtype=int)
    out, plan = corrupt(img, Fraction(1, 5), 10, make_rng(2), "worst_case_cluster", c=3)
    counts = window_counts(plan.positions, 60, 10)
    assert counts.max() == 2
    # consecutive blocks of two, one block per ten pixels
    pos = sorted(plan.positions)
    assert all(b - a in (1, 9) for a, b in zip(pos, pos[1:]))
    assert audit_plan(plan, img, out)


def test_audit_catches_overdraft_and_noops():
    img = np.zeros(10, dtype=int)
    assert not audit_plan(CorruptionPlan(((0, 1), (1, 1)), 0.1, 10), img)
    assert not audit_plan(CorruptionPlan(((3, 0),), 0.2, 10), img)
    assert audit_plan(CorruptionPlan(((3, 2),), 0.2, 5), img)
    assert not audit_plan(CorruptionPlan(((3, 2),), 0.2, 5), img, img)


def test_requested_flip_count():
    img = np.arange(50) % 5
    _, plan = corrupt(img, 0.2, 10, make_rng(3), n_flips=3)
    assert len(plan.flips) == 3
    with pytest.raises(ValueError):
        corrupt(img, 0.05, 10, make_rng(3), n_flips=1)


def test_background_only_when_allowed():
    img = np.arange(40) % 3
    _, plan = corrupt(img, 0.5, 4, make_rng(4), c=3)
    assert all(col != BACKGROUND for _, col in plan.flips)


def test_bad_arguments():
    img = np.zeros(10, dtype=int)
    for kw in ({"alpha": 1.0, "W": 5}, {"alpha": 0.1, "W": 11}, {"alpha": 0.1, "W": 0}):
        with pytest.raises(ValueError):
            corrupt(img, rng=make_rng(0), **kw)
    with pytest.raises(ValueError):
        corrupt(img, 0.1, 5, make_rng(0), strategy="nope")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 80), st.integers(1, 20),
       st.fractions(0, Fraction(9, 10), max_denominator=10),
       st.sampled_from(["uniform_random", "worst_case_cluster"]))
def test_every_plan_passes_audit(seed, d, W, alpha, strategy):
    W = min(W, d)
    rng = make_rng(seed)
    img = rng.integers(0, 4, size=d)
    out, plan = corrupt(img, alpha, W, rng, strategy, c=4)
    assert audit_plan(plan, img, out)
    # brute-force window check
    for a in range(max(1, d - W + 1)):
        assert sum(1 for i in plan.positions if a <= i < a + W) <= plan.budget
