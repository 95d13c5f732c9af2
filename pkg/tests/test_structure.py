from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlusion.model import ModelError, ObjectSet, make_rng
from occlusion.structure import (
    AdversaryBase, approx_match, check_strong_ws, check_ws, gen_random_objects, gen_semirandom_objects,
    gen_ws_objects, min_ws_width, random_ws_bound, semirandom_ws_bound, strong_threshold, window_distance,
)

from oracles import approx_windows, strong_ws_pairwise, ws_pairwise


def s2t(*xs):
    return [tuple(int(ch) for ch in x) for x in xs]


def test_distinct_windows_hold():
    assert check_ws(s2t("0123"), 1).holds


def test_self_collision_witness():
    rep = check_ws(s2t("10111"), 2)
    assert not rep.holds and rep.witness == ((0, 2), (0, 3)) and rep.reason == "self"


def test_cross_collision_witness():
    rep = check_ws(s2t("0011", "1100"), 2)
    assert not rep.holds and rep.reason == "cross"
    assert rep.witness == ((0, 0), (1, 2))


def test_epsilon_range_checked():
    with pytest.raises(ValueError):
        check_strong_ws(s2t("0101"), 2, 0)


def test_short_object_fails_on_length():
    rep = check_ws(s2t("0101"), 5)
    assert not rep.holds and rep.reason == "length"
    rep = check_strong_ws(s2t("0101"), 5, Fraction(1, 4))
    assert not rep.holds and rep.reason == "length"


def test_pigeonhole_two_colors():
    # a length-4 binary object repeats a color, so w=1 can never hold
    rng = make_rng(0)
    for _ in range(50):
        objs = gen_random_objects(2, [4, 4], 2, rng)
        assert not check_ws(objs, 1).holds


def test_strong_boundary_inclusive():
    assert strong_threshold(4, Fraction(1, 4)) == 3
    assert not check_strong_ws(s2t("0000", "0001"), 4, Fraction(1, 4)).holds
    assert check_strong_ws(s2t("0000", "0011"), 4, Fraction(1, 4)).holds


def test_background_joint_check():
    assert check_ws(s2t("0123"), 2).holds
    rep = check_ws(s2t("0123"), 2, background=(5, 1, 2, 6))
    assert not rep.holds and rep.witness == ((-1, 1), (0, 1))


def test_window_distance_examples():
    assert window_distance(s2t("101")[0], s2t("101")[0]) == 0
    assert window_distance(s2t("101")[0], s2t("001")[0]) == 1
    assert window_distance(s2t("0000")[0], s2t("1111")[0]) == 4
    with pytest.raises(ValueError):
        window_distance((1, 2), (1,))


def test_approx_match_examples():
    x = tuple(range(10))
    assert approx_match(x, x, Fraction(1, 5), 10)
    one = (99,) + x[1:]
    assert approx_match(one, x, Fraction(1, 5), 10)
    two = (99, 98) + x[2:]
    assert not approx_match(two, x, Fraction(1, 10), 10)


def test_semirandom_passthrough_and_full():
    objs = ObjectSet.from_pixels(s2t("0000", "1111"), c=2)
    out = gen_semirandom_objects(AdversaryBase(objs, 0.0), make_rng(1))
    assert out.strings() == objs.strings()
    with pytest.raises(ModelError):
        AdversaryBase(objs, 1.5)


def test_semirandom_p1_matches_uniform_marginals():
    objs = ObjectSet.from_pixels([(0,) * 64, (1,) * 64], c=4)
    rng = make_rng(2)
    counts = np.zeros(4)
    for _ in range(200):
        for x in gen_semirandom_objects(AdversaryBase(objs, 1.0), rng).strings():
            counts += np.bincount(x, minlength=4)
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 0.25) < 0.01)


def test_generation_reproducible():
    a = gen_ws_objects(3, [20, 25, 30], 4, 5, make_rng(9))
    b = gen_ws_objects(3, [20, 25, 30], 4, 5, make_rng(9))
    assert a == b and check_ws(a, 5).holds


def test_bounds_values():
    assert random_ws_bound(5, 20, 2, 24) == pytest.approx(1 - 30000 / 2 ** 24)
    assert random_ws_bound(5, 20, 2, 24) == pytest.approx(0.99821, abs=1e-5)
    assert semirandom_ws_bound(3, 32, 2, 55, 0.5) == pytest.approx(1 - 3 * 9 * 1024 * 0.75 ** 55)


def test_min_ws_width():
    assert min_ws_width(s2t("0123")) == 1
    assert min_ws_width(s2t("10111")) == 3
    assert min_ws_width(s2t("0000")) == 4  # a single window
    assert min_ws_width(s2t("01", "01")) is None


small_sets = st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=9).map(tuple), min_size=1, max_size=3)


@settings(max_examples=300, deadline=None)
@given(small_sets, st.integers(1, 5))
def test_check_ws_matches_pairwise(strings, w):
    assert check_ws(strings, w).holds == ws_pairwise(strings, w)


@settings(max_examples=300, deadline=None)
@given(small_sets, st.integers(1, 5), st.fractions(Fraction(1, 8), 1, max_denominator=8))
def test_check_strong_matches_pairwise(strings, w, eps):
    assert check_strong_ws(strings, w, eps).holds == strong_ws_pairwise(strings, w, eps)


@settings(max_examples=200, deadline=None)
@given(small_sets, st.integers(1, 5))
def test_tiny_epsilon_equals_exact(strings, w):
    # (1-eps)w > w-1 makes the strong check an equality check
    eps = Fraction(1, 2 * w)
    assert check_strong_ws(strings, w, eps).holds == check_ws(strings, w).holds


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_strong_width_doubling(seed):
    # eps-strongly w-WS implies eps/2-strongly z-WS for z > w
    rng = make_rng(seed)
    w, eps = 6, Fraction(1, 2)
    strings = [tuple(int(x) for x in rng.integers(0, 8, size=24)) for _ in range(3)]
    if check_strong_ws(strings, w, eps).holds:
        for z in (7, 9, 12):
            assert check_strong_ws(strings, z, eps / 2).holds


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 2), min_size=n, max_size=n), st.lists(st.integers(0, 2), min_size=n, max_size=n),
    st.integers(1, n), st.fractions(0, 1, max_denominator=6))))
def test_approx_match_matches_window_loop(case):
    a, b, w_alg, alpha = case
    assert approx_match(a, b, alpha, w_alg) == approx_windows(a, b, alpha, w_alg)
