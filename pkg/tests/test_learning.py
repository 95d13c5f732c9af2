import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlusion.harness import trial_seed
from occlusion.learning import (
    LearnParams, ParamError, classify_windows, compute_visibility_prob, count_windows, learn_no_markers,
    needed_windows, problematic_strings, recover_end, recover_with_markers, required_samples_markers,
    split_marker_chunks, _encode,
)
from occlusion.model import (
    BACKGROUND, MARK_L, MARK_R, GenConfig, Image, ObjectSet, generate_image, make_rng,
)
from occlusion.sequencing import sequence, sequence_strings
from occlusion.structure import gen_ws_objects

from oracles import visibility_prob

b = BACKGROUND


# ------------------------------------------------------------- sequencing

def test_sequence_unique_overlap():
    a, bb, c, d, e, f = range(6)
    assert sequence_strings([(a, bb, c, d), (c, d, e, f)], 2) == [(a, bb, c, d, e, f)]


def test_sequence_single_segment():
    assert sequence_strings([(1, 2, 3)], 2) == [(1, 2, 3)]
    assert sequence([(1, 2, 3)], 2).strings() == [(1, 2, 3)]


def test_sequence_containment():
    assert sequence_strings([(0, 1, 2, 3, 4), (1, 2, 3)], 2) == [(0, 1, 2, 3, 4)]


def test_sequence_reassembles_sliced_objects():
    rng = make_rng(4)
    for t in range(1000):
        w = int(rng.integers(2, 5))
        objs = gen_ws_objects(2, [int(rng.integers(4 * w, 8 * w)) for _ in range(2)], 16, w, rng)
        pieces = set()
        for o in objs:
            x = o.pixels
            starts = list(range(0, len(x) - 2 * w + 1, w)) + [len(x) - 2 * w]
            pieces.update(x[i:i + 2 * w] for i in starts)
        order = rng.permutation(len(pieces))
        pieces = [sorted(pieces)[i] for i in order]
        assert set(sequence_strings(pieces, w)) == objs.as_set()


# ---------------------------------------------------------------- markers

def test_split_marker_chunks():
    img = [b, MARK_L, 1, 0, MARK_R, 2, 2, MARK_R, b, MARK_L, 3]
    whole, pieces = split_marker_chunks(img)
    assert whole == [(1, 0)]
    assert sorted(pieces) == [(2, 2), (3,)]


def test_one_whole_object_recovered():
    img = Image((b, MARK_L, 1, 0, 1, 1, MARK_R, b))
    assert recover_with_markers([img], 2, 2).strings() == [(1, 0, 1, 1)]


def test_fully_random_markers_theta_m_log_m():
    m, ok = 5, 0
    for t in range(20):
        rng = make_rng(trial_seed(77, t))
        objs = gen_ws_objects(m, [10] * m, 4, 4, rng)
        S = math.ceil(2 * m * math.log(m))
        imgs = [generate_image(objs, GenConfig(k=2, markers=True), 100, rng)[0] for _ in range(S)]
        ok += recover_with_markers(imgs, 8, 4).as_set() == objs.as_set()
    assert ok == 20


# ------------------------------------------------------------ calculators

def test_visibility_prob_value():
    a = compute_visibility_prob(100, 10, 8, 2, 5)
    assert a == pytest.approx(0.29023, abs=5e-6)
    assert a == pytest.approx(float(visibility_prob(100, 10, 8, 2, 5)))


def test_visibility_single_object():
    d, s, L = 50, 10, 6
    assert compute_visibility_prob(d, s, L, 1, 1) == pytest.approx((d + 1 - L) / (d + s - 2))


def test_required_samples_value():
    assert required_samples_markers(100, 10, 8, 2, 5) == 17
    assert math.ceil(math.log(20 * 5 * 10 / 8) / 0.29023) == 17


def test_required_samples_small_for_easy_case():
    assert required_samples_markers(100, 10, 10, 1, 1) <= 5


@settings(max_examples=100, deadline=None)
@given(st.integers(40, 200), st.integers(2, 10), st.integers(1, 4))
def test_required_samples_nonincreasing_in_visibility(d, L, k):
    # larger canvases raise the placement term and lower the occlusion term for fixed s, L
    s, m = 12, 4
    a1, a2 = compute_visibility_prob(d, s, L, k, m), compute_visibility_prob(d + 20, s, L, k, m)
    S1, S2 = required_samples_markers(d, s, L, k, m), required_samples_markers(d + 20, s, L, k, m)
    if a2 >= a1:
        assert S2 <= S1


def _exact_piece_visibility(d, s, L, m, off):
    """Exact chance that object 0's pieces [off, off+L) show in full when it sits behind one other object."""
    lefts = range(-s + 1, d + 1)
    good = 0
    for left in lefts:
        st_ = left + off
        if st_ < 0 or st_ + L > d:
            continue
        good += sum(1 for o in lefts if o + s <= st_ or o >= st_ + L)
    return Fraction(2, m) * Fraction(good, len(lefts) ** 2)


def test_visibility_monte_carlo_vs_enumeration():
    # forced-back object 0 (the worst case) and a fixed 8-pixel piece at offset 1
    d, s, L, k, m = 100, 10, 8, 2, 5
    rng = make_rng(5)
    objs = gen_ws_objects(m, [s] * m, 4, 4, rng)
    cfg = GenConfig(k=k, depth_model="partially_random", ordering=tuple((0, j) for j in range(1, m)))
    n, hits = 100_000, 0
    want_idx = np.arange(1, 1 + L)
    for _ in range(n):
        _, gt = generate_image(objs, cfg, d, rng)
        pl = [p for p in gt.placements if p.object_id == 0]
        if not pl:
            continue
        start = pl[0].left + 1
        if start < 0 or start + L > d:
            continue
        ids, idx = gt.source_arrays
        hits += bool(np.all(ids[start:start + L] == 0) and np.all(idx[start:start + L] == want_idx))
    exact_q = _exact_piece_visibility(d, s, L, m, 1)
    exact = float(exact_q)
    assert abs(hits / n - exact) <= 3 * math.sqrt(exact * (1 - exact) / n)
    # the same expression with d+s (the number of left endpoints) in place of d+s-2 is exact here,
    # so the d+s-2 version sits slightly above the true value
    n_left = d + s
    assert exact_q == (1 - Fraction(s + L - 1, n_left)) * Fraction(d + 1 - L, n_left) * Fraction(k, m)
    assert exact < compute_visibility_prob(d, s, L, k, m)


# ----------------------------------------------------------- window counts

def test_count_windows_hand_example():
    assert count_windows([Image((1, 1, 0, 0, b))], 2) == Counter({(1, 1): 1, (1, 0): 1, (0, 0): 1})
    assert count_windows([], 3) == Counter()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.integers(-1, 2), min_size=0, max_size=15), max_size=5), st.integers(1, 5))
def test_count_windows_total(images, L):
    counts = count_windows(images, L)
    expect = 0
    for img in images:
        expect += sum(1 for i in range(len(img) - L + 1) if b not in img[i:i + L])
    assert sum(counts.values()) == expect


# ----------------------------------------------------------- markerless

def _two_object_run(seed, S=200):
    rng = make_rng(trial_seed(78, seed))
    m = 4
    objs = gen_ws_objects(m, [int(x) for x in rng.integers(20, 31, size=m)], 16, 4, rng)
    cfg = GenConfig(k=2, depth_model="partially_random", ordering=tuple((0, j) for j in range(1, m)))
    data = [generate_image(objs, cfg, 100, rng) for _ in range(S)]
    return objs, [x[0] for x in data], [x[1] for x in data]


def test_two_object_learning_recovers():
    objs, imgs, _ = _two_object_run(0)
    p = LearnParams.two(4, 4, 100, 30, len(imgs))
    assert learn_no_markers(imgs, p).as_set() == objs.as_set()


def test_tau_zero_negative_control():
    objs, imgs, truths = _two_object_run(0)
    p0 = LearnParams("two", 4, 16, Fraction(0), 2, 4, 100, 30, len(imgs))
    with pytest.raises(ParamError):
        p0.validate()
    out = learn_no_markers(imgs, p0, check=False)
    assert out.as_set() != objs.as_set()
    # the threshold is what filters problematic overlaps: some were observed
    assert problematic_strings(classify_windows(imgs, truths, 16))


def test_every_needed_window_is_single_source():
    objs, imgs, truths = _two_object_run(1)
    classes = classify_windows(imgs, truths, 16)
    seen = needed_windows(objs, 16) & set(classes)
    assert seen and all(classes[x].single for x in seen)


def test_recover_end_finds_shortest_prefix():
    core = (5, 6, 7, 8)
    imgs = [_encode([b, 1, 2, 5, 6, 7, 8, 9, b]), _encode([b, 2, 5, 6, 7, 8, b])]
    assert recover_end(core, imgs, 2, "left") == (2,)
    assert recover_end(core, imgs, 2, "right") == ()


def test_param_validation_messages():
    with pytest.raises(ParamError, match="3d/2"):
        LearnParams.two(40, 4, 100, 30).validate()
    with pytest.raises(ParamError, match="16mk2"):
        LearnParams.many(3, 3, 4, 300, 80).validate()
    LearnParams.many(3, 3, 4, 1458, 80).validate()
