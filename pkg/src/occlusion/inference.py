"""Explaining an image from a known object set: minimal DP, brute force and greedy segmentation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    BACKGROUND, BLANK, UNKNOWN, BackgroundPixel, Image, ModelError, ObjectPixel, ObjectSet,
    Placement, Source, background_row, build_scene, left_range, view,
)
from .structure import as_fraction

INF = np.iinfo(np.int64).max // 4


@dataclass(frozen=True)
class Explanation:
    sources: tuple[Source, ...]
    object_count: int | None = None
    corrected: tuple[tuple[int, int], ...] | None = None  # (index, restored color)

    @property
    def unknown_count(self) -> int:
        return sum(1 for x in self.sources if x is UNKNOWN)

    def __len__(self) -> int:
        return len(self.sources)


@dataclass(frozen=True)
class MatchRegion:
    i_start: int
    i_end: int          # exclusive
    object_id: int | None  # None for background
    offset: int = 0     # image index of the object's pixel 0
    approx: bool = False

    @property
    def length(self) -> int:
        return self.i_end - self.i_start


def _img(image) -> np.ndarray:
    if isinstance(image, Image):
        return image.array()
    return np.asarray(image, dtype=np.int64)


def _bg(background, d: int) -> np.ndarray:
    return background_row(None if background is None else tuple(background), d)


# ------------------------------------------------------------------- DP

def _equal_length_matrix(objects: ObjectSet) -> np.ndarray:
    lengths = {len(o) for o in objects}
    if len(lengths) != 1:
        raise ModelError("the minimal-explanation DP needs all objects of one length")
    return np.array([o.pixels for o in objects], dtype=np.int64)


def _dp_tables(imgs: np.ndarray, objs: np.ndarray, bg: np.ndarray, room: str):
    """Tables for a batch of images of shape (N, d): T is (N, d, m, s), B is (N, d)."""
    n, d = imgs.shape
    m, s = objs.shape
    T = np.full((n, d, m, s), INF, dtype=np.int64)
    B = np.full((n, d), INF, dtype=np.int64)
    if d == 0:
        return T, B
    match0 = objs[None] == imgs[:, 0, None, None]
    if room == "open":
        T[:, 0] = np.where(match0, 1, INF)
    else:
        T[:, 0, :, 0] = np.where(match0[:, :, 0], 1, INF)
    # the background costs no objects
    B[:, 0] = np.where(bg[0] == imgs[:, 0], 0, INF)
    for i in range(1, d):
        prev = T[:, i - 1]
        allmin = np.minimum(prev.reshape(n, -1).min(axis=1), B[:, i - 1])
        endmin = prev[:, :, s - 1].min(axis=1)
        match = objs[None] == imgs[:, i, None, None]
        start = np.where(allmin < INF, allmin + 1, INF)
        T[:, i, :, 0] = np.where(match[:, :, 0], start[:, None], INF)
        if s > 1:
            resume = np.where(endmin < INF, endmin + 1, INF)
            T[:, i, :, 1:] = np.where(match[:, :, 1:],
                                      np.minimum(prev[:, :, :-1], resume[:, None, None]), INF)
        B[:, i] = np.where(bg[i] == imgs[:, i], np.minimum(B[:, i - 1], endmin), INF)
    return T, B


def _final_state(T: np.ndarray, B: np.ndarray, room: str):
    last = T[-1]
    s = last.shape[1]
    best = int(B[-1])
    state = ("bg",)
    allowed = last if room == "open" else last[:, s - 1:]
    offset = 0 if room == "open" else s - 1
    if allowed.size:
        v = int(allowed.min())
        if v < best:
            o, j = np.argwhere(allowed == v)[0]
            best, state = v, ("obj", int(o), int(j) + offset)
    return best, state


def _backtrack(T: np.ndarray, B: np.ndarray, state, d: int) -> list:
    s = T.shape[2]
    out = [None] * d
    for i in range(d - 1, -1, -1):
        out[i] = state
        if i == 0:
            break
        prev = T[i - 1]
        if state[0] == "bg":
            v = B[i]
            if B[i - 1] == v:
                state = ("bg",)
            else:
                o = int(np.argmax(prev[:, s - 1] == v))
                state = ("obj", o, s - 1)
            continue
        _, o, j = state
        v = T[i, o, j]
        if j > 0 and prev[o, j - 1] == v:
            state = ("obj", o, j - 1)
        elif j > 0:
            o2 = int(np.argmax(prev[:, s - 1] == v - 1))
            state = ("obj", o2, s - 1)
        elif B[i - 1] == v - 1:
            state = ("bg",)
        else:
            o2, j2 = np.argwhere(prev == v - 1)[0]
            state = ("obj", int(o2), int(j2))
    return out


def _explain_from_tables(T: np.ndarray, B: np.ndarray, room: str) -> Explanation:
    d = B.shape[0]
    if d == 0:
        return Explanation((), 0)
    best, state = _final_state(T, B, room)
    if best >= INF:
        return Explanation((UNKNOWN,) * d, None)
    states = _backtrack(T, B, state, d)
    sources = tuple(BackgroundPixel(i) if st[0] == "bg" else ObjectPixel(st[1], st[2])
                    for i, st in enumerate(states))
    return Explanation(sources, best)


def dp_min_objects(image, objects: ObjectSet, background=None, room: str = "open") -> Explanation:
    """Fewest object instances explaining the image; object_count is None when infeasible.

    Explanations may use one object more than once.
    """
    img = _img(image)
    objs = _equal_length_matrix(objects)
    T, B = _dp_tables(img[None, :], objs, _bg(background, len(img)), room)
    return _explain_from_tables(T[0], B[0], room)


def dp_min_objects_batch(images, objects: ObjectSet, background=None, room: str = "open",
                         chunk: int = 2048) -> list[Explanation]:
    """dp_min_objects over many equal-width images, sharing the table sweep."""
    imgs = np.asarray(images, dtype=np.int64)
    if imgs.ndim != 2:
        raise ValueError("images must form an (N, d) array")
    objs = _equal_length_matrix(objects)
    bg = _bg(background, imgs.shape[1])
    out = []
    for a in range(0, len(imgs), chunk):
        T, B = _dp_tables(imgs[a:a + chunk], objs, bg, room)
        out.extend(_explain_from_tables(T[n], B[n], room) for n in range(T.shape[0]))
    return out


def dp_min_counts(images, objects: ObjectSet, background=None, room: str = "open",
                  chunk: int = 4096) -> np.ndarray:
    """Minimal object counts only (no backtracking); -1 marks an infeasible image."""
    imgs = np.asarray(images, dtype=np.int64)
    objs = _equal_length_matrix(objects)
    n, d = imgs.shape
    s = objs.shape[1]
    if d == 0:
        return np.zeros(n, dtype=np.int64)
    bg = _bg(background, d)
    out = []
    for a in range(0, n, chunk):
        T, B = _dp_tables(imgs[a:a + chunk], objs, bg, room)
        last = T[:, -1] if room == "open" else T[:, -1, :, s - 1:]
        best = np.minimum(last.reshape(len(last), -1).min(axis=1), B[:, -1])
        out.append(np.where(best >= INF, -1, best))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def explanation_instances(sources: Sequence[Source]) -> list[tuple[int, int, int, int]]:
    """Group consecutive object pixels into instances (object id, left, first, last)."""
    inst = []
    for i, src in enumerate(sources):
        if not isinstance(src, ObjectPixel):
            continue
        prev = sources[i - 1] if i > 0 else None
        if (isinstance(prev, ObjectPixel) and prev.object_id == src.object_id
                and prev.index + 1 == src.index and inst and inst[-1][3] == i - 1):
            o, left, first, _ = inst[-1]
            inst[-1] = (o, left, first, i)
        else:
            inst.append((src.object_id, i - src.index, i, i))
    return inst


def explanation_to_placements(sources: Sequence[Source], objects: ObjectSet) -> list[Placement] | None:
    """Depth-ordered placements realising an explanation, or None if no stacking works."""
    d = len(sources)
    inst = explanation_instances(sources)
    owner = np.full(d, -1, dtype=np.int64)  # visible instance per pixel, -1 background
    for n, (_, _, first, last) in enumerate(inst):
        owner[first:last + 1] = n
    above: list[set[int]] = [set() for _ in inst]
    for n, (o, left, _, _) in enumerate(inst):
        lo, hi = max(0, left), min(d, left + len(objects[o]))
        for p in range(lo, hi):
            if owner[p] == -1:
                return None  # background cannot hide an object
            if owner[p] != n:
                above[n].add(int(owner[p]))
    # Kahn's algorithm: an instance gets a depth once everything above it has one
    remaining = {n: set(a) for n, a in enumerate(above)}
    order = []
    while remaining:
        ready = sorted(n for n, a in remaining.items() if not a)
        if not ready:
            return None
        n = ready[0]
        order.append(n)
        del remaining[n]
        for a in remaining.values():
            a.discard(n)
    return [Placement(inst[n][0], inst[n][1], depth + 1) for depth, n in enumerate(order)]


def replay(placements: Sequence[Placement], objects: ObjectSet, background, d: int, room: str = "open") -> Image:
    return view(build_scene(objects, placements, None if background is None else tuple(background), d, room))


# ------------------------------------------------------------ brute force

def _layers(objects: ObjectSet, d: int, room: str) -> np.ndarray:
    rows = []
    for o in objects:
        lo, hi = left_range(len(o), d, room)
        for left in range(lo, hi + 1):
            row = np.full(d, BLANK, dtype=np.int64)
            a, b = max(0, left), min(d, left + len(o))
            row[a:b] = o.pixels[a - left:b - left]
            rows.append(row)
    return np.unique(np.array(rows, dtype=np.int64).reshape(-1, d), axis=0)


def reachable_images(objects: ObjectSet, background, d: int, room: str, k_max: int,
                     budget: int = 5_000_000) -> list[np.ndarray]:
    """Images renderable with exactly j placed objects (repeats allowed), for j = 0..k_max."""
    bg = _bg(background, d)
    layers = _layers(objects, d, room)
    partial = np.full((1, d), BLANK, dtype=np.int64)
    out = []
    for j in range(k_max + 1):
        out.append(np.unique(np.where(partial != BLANK, partial, bg), axis=0))
        if j == k_max:
            break
        if partial.shape[0] * layers.shape[0] * d > budget:
            raise RuntimeError("brute-force enumeration exceeds its budget")
        # each new object goes behind everything placed so far
        grown = np.where(partial[:, None, :] != BLANK, partial[:, None, :], layers[None, :, :])
        partial = np.unique(grown.reshape(-1, d), axis=0)
    return out


def min_count_table(objects: ObjectSet, background, d: int, room: str, k_max: int,
                    budget: int = 5_000_000) -> dict[bytes, int]:
    table: dict[bytes, int] = {}
    for j, imgs in enumerate(reachable_images(objects, background, d, room, k_max, budget)):
        for row in imgs:
            table.setdefault(row.tobytes(), j)
    return table


def brute_force_min_objects(image, objects: ObjectSet, background=None, room: str = "open",
                            k_max: int = 2, budget: int = 5_000_000) -> int | None:
    img = _img(image)
    table = min_count_table(objects, background, len(img), room, k_max, budget)
    return table.get(img.tobytes())


# ------------------------------------------------------------- matching

def _runs(good: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row: length and start of the leftmost longest run of True."""
    rows, n = good.shape
    if n == 0:
        return np.zeros(rows, dtype=np.int64), np.zeros(rows, dtype=np.int64)
    pos = np.arange(n)
    last_false = np.maximum.accumulate(np.where(good, -1, pos[None, :]), axis=1)
    run = pos[None, :] - last_false
    end = np.argmax(run, axis=1)
    length = run[np.arange(rows), end]
    return length, end - length + 1


def _shifted(obj: Sequence[int], d: int) -> np.ndarray:
    """Row r holds the object placed with pixel 0 at image index r-(s-1); padding is hard."""
    pad = np.full(d - 1, BLANK - 1, dtype=np.int64)
    full = np.concatenate([pad, np.asarray(obj, dtype=np.int64), pad])
    return np.lib.stride_tricks.sliding_window_view(full, d)[::-1]


def _best_in(eq: np.ndarray, hard: np.ndarray, approx, w_alg: int | None):
    """(length, start, row) of the longest acceptable region per the matching mode."""
    if approx is None:
        length, start = _runs(eq & ~hard)
    else:
        limit = math.floor(as_fraction(approx) * w_alg)
        n = eq.shape[1]
        if n < w_alg:
            return 0, 0, 0
        cs_mis = np.concatenate([np.zeros((eq.shape[0], 1), np.int64), np.cumsum(~eq, axis=1)], axis=1)
        cs_hard = np.concatenate([np.zeros((eq.shape[0], 1), np.int64), np.cumsum(hard, axis=1)], axis=1)
        mis = cs_mis[:, w_alg:] - cs_mis[:, :-w_alg]
        hrd = cs_hard[:, w_alg:] - cs_hard[:, :-w_alg]
        runs, start = _runs((mis <= limit) & (hrd == 0))
        length = np.where(runs > 0, runs + w_alg - 1, 0)
    if length.size == 0:
        return 0, 0, 0
    best = int(length.max())
    cand = np.nonzero(length == best)[0]
    r = int(cand[np.argmin(start[cand])])
    return best, int(start[r]), r


def find_largest_match(remnant, objects: ObjectSet, background=None, alpha=None,
                       w_alg: int | None = None) -> MatchRegion | None:
    """Longest BLANK-free region matching one source, exactly or alpha-approximately.

    Ties: leftmost start, then smallest object id, background last, then smallest offset.
    """
    img = _img(remnant)
    d = len(img)
    if d == 0:
        return None
    if alpha is not None and (w_alg is None or w_alg < 1):
        raise ValueError("approximate matching needs w_alg >= 1")
    blank = img == BLANK
    cands = []
    for o in objects:
        sh = _shifted(o.pixels, d)
        hard = blank[None, :] | (sh == BLANK - 1)
        length, start, r = _best_in(sh == img[None, :], hard, alpha, w_alg)
        if length > 0:
            cands.append((-length, start, o.id, 0, r - (len(o) - 1)))
    bg = _bg(background, d)
    length, start, _ = _best_in((bg == img)[None, :], blank[None, :], alpha, w_alg)
    if length > 0:
        cands.append((-length, start, objects.m, 1, 0))
    if not cands:
        return None
    neg, start, oid, is_bg, off = min(cands)
    return MatchRegion(start, start - neg, None if is_bg else oid, off, alpha is not None)


# ---------------------------------------------------------------- greedy

def _source_color(src: Source, objects: ObjectSet, bg: np.ndarray) -> int:
    if isinstance(src, ObjectPixel):
        return objects[src.object_id].pixels[src.index]
    return int(bg[src.index])


def _greedy(img: np.ndarray, objects: ObjectSet, guard: int, k: int, background,
            alpha, w_alg) -> list[Source]:
    d = len(img)
    remnant = img.copy()
    sources: list[Source] = [UNKNOWN] * d
    while True:
        region = find_largest_match(remnant, objects, background, alpha, w_alg)
        # half-open region: stop unless its length exceeds 2k*guard
        if region is None or region.i_end - region.i_start <= 2 * k * guard:
            break
        a, b = region.i_start + k * guard, region.i_end - k * guard
        for i in range(a, b):
            if region.object_id is None:
                sources[i] = BackgroundPixel(i)
            else:
                sources[i] = ObjectPixel(region.object_id, i - region.offset)
        remnant[a:b] = BLANK
    return sources


def greedy_infer(image, objects: ObjectSet, w: int, k: int, background=None) -> Explanation:
    """Repeatedly explain the core of the largest exact single-source match."""
    img = _img(image)
    return Explanation(tuple(_greedy(img, objects, w, k, background, None, None)))


def greedy_infer_noisy(image, objects: ObjectSet, w: int, epsilon, alpha, W: int, k: int,
                       background=None) -> Explanation:
    """Greedy segmentation with alpha-approximate matching over windows of max(w, W).

    Explained pixels whose source color differs from the observed color are
    reported in ``corrected`` together with the restored color.
    """
    eps, a = as_fraction(epsilon), as_fraction(alpha)
    if not a < eps / 4:
        raise ValueError(f"need alpha < epsilon/4 (alpha={a}, epsilon={eps})")
    w_alg = max(w, W)
    img = _img(image)
    sources = _greedy(img, objects, w_alg, k, background, a, w_alg)
    bg = _bg(background, len(img))
    corrected = []
    for i, src in enumerate(sources):
        if src is UNKNOWN:
            continue
        true = _source_color(src, objects, bg)
        if true != img[i]:
            corrected.append((i, true))
    return Explanation(tuple(sources), None, tuple(corrected))
