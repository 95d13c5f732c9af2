"""Object generators and the well-structuredness checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import ModelError, ObjectSet

# A window location is (object id, offset); the background uses id -1.
Location = tuple[int, int]


@dataclass(frozen=True)
class StructureReport:
    holds: bool
    w: int
    epsilon: Fraction | None = None
    witness: tuple[Location, ...] | None = None
    reason: str | None = None  # "length", "cross" or "self"

    def __post_init__(self):
        if self.holds != (self.witness is None):
            raise ValueError("witness must be present exactly when the property fails")

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        out = {"holds": self.holds, "w": self.w}
        if self.epsilon is not None:
            out["epsilon"] = str(self.epsilon)
        if self.witness is not None:
            out["witness"] = [list(x) for x in self.witness]
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class AdversaryBase:
    objects: ObjectSet
    p: float

    def __post_init__(self):
        # p = 0 is admitted only as a pass-through
        if not 0 <= self.p <= 1:
            raise ModelError(f"rerandomization probability must lie in (0, 1], got {self.p}")


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def strong_threshold(w: int, epsilon) -> int:
    """Smallest agreement count that counts as a (1-eps) match: ceil((1-eps)*w)."""
    return math.ceil((1 - as_fraction(epsilon)) * w)


def _strings(objects) -> list[tuple[int, ...]]:
    if isinstance(objects, ObjectSet):
        return objects.strings()
    return [tuple(x) for x in objects]


def _tagged(objects, background) -> list[tuple[int, tuple[int, ...]]]:
    out = [(i, x) for i, x in enumerate(_strings(objects))]
    if background is not None:
        out.insert(0, (-1, tuple(background)))
    return out


def _length_failure(items, w: int, epsilon=None) -> StructureReport | None:
    for oid, x in items:
        if oid >= 0 and len(x) < w:
            return StructureReport(False, w, epsilon, ((oid, 0),), "length")
    return None


def _reason(a: Location, b: Location) -> str:
    return "self" if a[0] == b[0] else "cross"


def check_ws(objects, w: int, background: Sequence[int] | None = None) -> StructureReport:
    """Exact w-well-structuredness, optionally jointly with a background string."""
    if w < 1:
        raise ValueError("w must be at least 1")
    items = _tagged(objects, background)
    bad = _length_failure(items, w)
    if bad is not None:
        return bad
    first: dict[tuple[int, ...], Location] = {}
    best = None
    for oid, x in items:
        for off in range(len(x) - w + 1):
            key = x[off:off + w]
            loc = (oid, off)
            if key in first:
                pair = (first[key], loc)
                if best is None or pair < best:
                    best = pair
            else:
                first[key] = loc
    if best is None:
        return StructureReport(True, w)
    return StructureReport(False, w, None, best, _reason(*best))


def _window_matrix(items, w: int) -> tuple[np.ndarray, list[Location]]:
    rows, locs = [], []
    for oid, x in items:
        arr = np.asarray(x, dtype=np.int64)
        if len(arr) >= w:
            win = np.lib.stride_tricks.sliding_window_view(arr, w)
            rows.append(win)
            locs.extend((oid, off) for off in range(win.shape[0]))
    if not rows:
        return np.zeros((0, w), dtype=np.int64), []
    return np.concatenate(rows), locs


def agreement_matrix(windows: np.ndarray) -> np.ndarray:
    """Pairwise count of agreeing positions between rows of a window matrix."""
    n = windows.shape[0]
    out = np.zeros((n, n), dtype=np.int64)
    for color in np.unique(windows):
        hot = (windows == color).astype(np.float64)
        out += np.rint(hot @ hot.T).astype(np.int64)
    return out


def check_strong_ws(objects, w: int, epsilon, background: Sequence[int] | None = None) -> StructureReport:
    """Epsilon-strong w-well-structuredness; agreement >= ceil((1-eps)w) is a violation."""
    if w < 1:
        raise ValueError("w must be at least 1")
    eps = as_fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    items = _tagged(objects, background)
    bad = _length_failure(items, w, eps)
    if bad is not None:
        return bad
    thr = strong_threshold(w, eps)
    windows, locs = _window_matrix(items, w)
    # rows are in lexicographic location order already, so the first hit in the
    # strict upper triangle is the smallest violating pair
    agree = agreement_matrix(windows)
    hits = np.argwhere(np.triu(agree >= thr, k=1))
    if hits.size == 0:
        return StructureReport(True, w, eps)
    a, b = hits[0]
    pair = (locs[a], locs[b])
    return StructureReport(False, w, eps, pair, _reason(*pair))


def min_ws_width(objects) -> int | None:
    """Smallest w for which the set is w-well-structured, or None."""
    strings = _strings(objects)
    if not strings:
        return 1
    for w in range(1, min(len(x) for x in strings) + 1):
        if check_ws(strings, w).holds:
            return w
    return None


def random_strings(m: int, sizes: Sequence[int], c: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """i.i.d. uniform pixel strings, duplicates allowed."""
    if len(sizes) != m:
        raise ValueError("need one size per object")
    return [tuple(int(p) for p in rng.integers(0, c, size=n)) for n in sizes]


def gen_random_objects(m: int, sizes: Sequence[int], c: int, rng: np.random.Generator) -> ObjectSet:
    """Uniform random objects; a draw with two identical strings is redrawn."""
    if m < 1 or c < 2:
        raise ValueError("need m >= 1 and c >= 2")
    while True:
        strings = random_strings(m, sizes, c, rng)
        if len(set(strings)) == m:
            return ObjectSet.from_pixels(strings, c=c, s_min=min(sizes), s=max(sizes))


def rerandomize(strings: Sequence[Sequence[int]], c: int, p, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Replace each pixel by a uniform color with probability p; repeated base strings are allowed."""
    out = []
    for x in strings:
        arr = np.asarray(x, dtype=np.int64)
        flip = rng.random(len(arr)) < p
        fresh = rng.integers(0, c, size=len(arr))
        out.append(tuple(int(v) for v in np.where(flip, fresh, arr)))
    return out


def semirandom_strings(base: AdversaryBase, rng: np.random.Generator) -> list[tuple[int, ...]]:
    return rerandomize([o.pixels for o in base.objects], base.objects.c, base.p, rng)


def gen_semirandom_objects(base: AdversaryBase, rng: np.random.Generator) -> ObjectSet:
    """Rerandomize every pixel independently with probability p (uniform over c colors)."""
    objs = base.objects
    while True:
        strings = semirandom_strings(base, rng)
        if len(set(strings)) == objs.m:
            return ObjectSet.from_pixels(strings, c=objs.c, s_min=objs.s_min, s=objs.s)


def gen_ws_objects(m: int, sizes: Sequence[int], c: int, w: int, rng: np.random.Generator,
                   epsilon=None, max_tries: int = 10_000) -> ObjectSet:
    """Rejection-sample random objects until they are (epsilon-strongly) w-well-structured."""
    for _ in range(max_tries):
        objs = gen_random_objects(m, sizes, c, rng)
        rep = check_ws(objs, w) if epsilon is None else check_strong_ws(objs, w, epsilon)
        if rep.holds:
            return objs
    raise RuntimeError(f"no well-structured set found in {max_tries} draws")


def random_ws_bound(m: int, s: int, c: int, w: int) -> float:
    return 1 - 3 * m * m * s * s / c ** w


def semirandom_ws_bound(m: int, s: int, c: int, w: int, p: float) -> float:
    return 1 - 3 * m * m * s * s * (1 - p * (1 - 1 / c)) ** w


def window_distance(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError("window_distance needs equal lengths")
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def approx_match(sigma: Sequence[int], sigma_star: Sequence[int], alpha, w_alg: int) -> bool:
    """Every length-w_alg window differs in at most alpha*w_alg positions."""
    if len(sigma) != len(sigma_star):
        raise ValueError("approx_match needs equal lengths")
    if w_alg < 1:
        raise ValueError("w_alg must be at least 1")
    if len(sigma) < w_alg:
        raise ValueError("strings shorter than the window")
    limit = math.floor(as_fraction(alpha) * w_alg)
    diff = (np.asarray(sigma) != np.asarray(sigma_star)).astype(np.int64)
    sums = np.convolve(diff, np.ones(w_alg, dtype=np.int64), mode="valid")
    return bool(np.all(sums <= limit))
