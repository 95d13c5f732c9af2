"""Objects, scenes, the view operator and sampled image generation.

Positions are 0-based. A placement's ``left`` is the canvas column of the
object's first pixel (its left marker in marker mode) and may be negative in
the open room. Depth rank 1 is the frontmost object.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Reserved pixel values; object colors live in [0, c).
BACKGROUND = -1
MARK_L = -2
MARK_R = -3
BLANK = -4
RESERVED = frozenset({BACKGROUND, MARK_L, MARK_R, BLANK})

ROOMS = ("open", "closed")
DEPTH_MODELS = ("fully_random", "partially_random")


class ModelError(ValueError):
    """Invalid object set, placement or generator configuration."""


@dataclass(frozen=True)
class Obj:
    id: int
    pixels: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True)
class ObjectSet:
    objects: tuple[Obj, ...]
    c: int
    s_min: int
    s: int

    def __post_init__(self):
        if self.c < 2:
            raise ModelError(f"need at least 2 colors, got c={self.c}")
        seen = set()
        for i, o in enumerate(self.objects):
            if o.id != i:
                raise ModelError(f"object ids must be 0..m-1 in order, got {o.id} at {i}")
            if not self.s_min <= len(o) <= self.s:
                raise ModelError(f"object {i} has length {len(o)} outside [{self.s_min}, {self.s}]")
            for p in o.pixels:
                if not 0 <= p < self.c:
                    raise ModelError(f"object {i} holds color {p} outside [0, {self.c})")
            if o.pixels in seen:
                raise ModelError(f"object {i} duplicates another object's pixels")
            seen.add(o.pixels)

    @classmethod
    def from_pixels(cls, strings: Iterable[Sequence[int]], c: int | None = None,
                    s_min: int | None = None, s: int | None = None) -> "ObjectSet":
        strings = [tuple(int(p) for p in x) for x in strings]
        lengths = [len(x) for x in strings] or [1]
        if c is None:
            c = max(2, max((max(x) + 1 for x in strings if x), default=2))
        return cls(
            objects=tuple(Obj(i, x) for i, x in enumerate(strings)),
            c=c,
            s_min=min(lengths) if s_min is None else s_min,
            s=max(lengths) if s is None else s,
        )

    @property
    def m(self) -> int:
        return len(self.objects)

    def __len__(self) -> int:
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    def __getitem__(self, i: int) -> Obj:
        return self.objects[i]

    def strings(self) -> list[tuple[int, ...]]:
        return [o.pixels for o in self.objects]

    def as_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.strings())


@dataclass(frozen=True)
class Placement:
    object_id: int
    left: int
    depth: int


@dataclass(frozen=True)
class ObjectPixel:
    object_id: int
    index: int


@dataclass(frozen=True)
class BackgroundPixel:
    index: int


class _Unknown:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNKNOWN"

    def __reduce__(self):
        return (_Unknown, ())


UNKNOWN = _Unknown()
Source = ObjectPixel | BackgroundPixel | _Unknown


@dataclass(frozen=True)
class Image:
    pixels: tuple[int, ...]

    @classmethod
    def from_array(cls, arr) -> "Image":
        return cls(tuple(int(p) for p in arr))

    @property
    def d(self) -> int:
        return len(self.pixels)

    def array(self) -> np.ndarray:
        return np.asarray(self.pixels, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True, eq=False)
class Scene:
    """(k+1) x d layer matrix; row 0 holds the frontmost object, the last row the background."""
    rows: np.ndarray
    placements: tuple[Placement, ...]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def k(self) -> int:
        return self.rows.shape[0] - 1


@dataclass(frozen=True)
class GenConfig:
    k: int
    room: str = "open"
    depth_model: str = "fully_random"
    # (behind, front) pairs of object ids, used by the partially random model
    ordering: tuple[tuple[int, int], ...] = ()
    # None selects the distinct background; otherwise an explicit pixel string of length >= d
    background: tuple[int, ...] | None = None
    markers: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.room not in ROOMS:
            raise ModelError(f"unknown room model {self.room!r}")
        if self.depth_model not in DEPTH_MODELS:
            raise ModelError(f"unknown depth model {self.depth_model!r}")
        if self.k < 0:
            raise ModelError("k must be non-negative")
        if _has_cycle(self.ordering):
            raise ModelError("depth ordering constraints are cyclic")


def _has_cycle(pairs: Iterable[tuple[int, int]]) -> bool:
    graph: dict[int, set[int]] = {}
    for back, front in pairs:
        graph.setdefault(back, set()).add(front)
        graph.setdefault(front, set())
    state: dict[int, int] = {}

    def visit(u):
        state[u] = 1
        for v in graph[u]:
            if state.get(v) == 1 or (v not in state and visit(v)):
                return True
        state[u] = 2
        return False

    return any(u not in state and visit(u) for u in list(graph))


@dataclass(frozen=True)
class GenParams:
    """Derived size parameters; ``d_prime`` is d + s - 2."""
    d: int
    s: int
    k: int
    m: int
    w: int | None = None

    @property
    def d_prime(self) -> int:
        return self.d + self.s - 2

    def violations(self, learning: bool = False) -> list[str]:
        out = []
        if self.w is not None and not self.d > 8 * self.w:
            out.append(f"need d > 8w (d={self.d}, w={self.w})")
        if learning and not 2 * self.s < self.d:
            out.append(f"need s < d/2 (s={self.s}, d={self.d})")
        if self.k > self.m:
            out.append(f"need k <= m (k={self.k}, m={self.m})")
        return out


@dataclass(frozen=True)
class GroundTruth:
    placements: tuple[Placement, ...]
    d: int
    objects: ObjectSet = field(repr=False, compare=False)
    markers: bool = False

    @cached_property
    def source_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-pixel (object id, index) arrays; object id -1 marks background."""
        return _source_arrays(self.objects, self.placements, self.d, self.markers)

    @cached_property
    def explanation(self) -> tuple[Source, ...]:
        ids, idx = self.source_arrays
        return tuple(
            BackgroundPixel(j) if o < 0 else ObjectPixel(int(o), int(i))
            for j, (o, i) in enumerate(zip(ids, idx))
        )

    def pure_segments(self) -> list[tuple[int, int, int]]:
        """Maximal runs (start, end_inclusive, object id or -1) of one source instance."""
        ids, idx = self.source_arrays
        segs = []
        start = 0
        for j in range(1, self.d + 1):
            if j == self.d or ids[j] != ids[j - 1] or (ids[j] >= 0 and idx[j] != idx[j - 1] + 1):
                segs.append((start, j - 1, int(ids[start])))
                start = j
        return segs


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the seed is recorded by every caller that emits artifacts."""
    return np.random.Generator(np.random.PCG64(seed))


def rendered(obj: Obj, markers: bool = False) -> tuple[int, ...]:
    return add_markers(obj) if markers else obj.pixels


def pad(obj: Obj, b: int) -> tuple[int, ...]:
    if b < 0:
        raise ModelError("padding must be non-negative")
    return (BACKGROUND,) * b + obj.pixels + (BACKGROUND,) * b


def add_markers(obj: Obj) -> tuple[int, ...]:
    return (MARK_L,) + obj.pixels + (MARK_R,)


def left_range(length: int, d: int, room: str) -> tuple[int, int]:
    """Inclusive range of legal left endpoints for an object of ``length`` pixels."""
    if room == "closed":
        return 0, d - length
    return -length + 1, d


def background_row(background: Sequence[int] | None, d: int) -> np.ndarray:
    if background is None:
        return np.full(d, BACKGROUND, dtype=np.int64)
    if len(background) < d:
        raise ModelError(f"background string has {len(background)} pixels, need {d}")
    row = np.asarray(background[:d], dtype=np.int64)
    if np.any(row == BLANK):
        raise ModelError("background may not contain BLANK")
    return row


def _check_placements(objects: ObjectSet, placements: Sequence[Placement], d: int,
                      room: str, markers: bool) -> list[Placement]:
    depths = sorted(p.depth for p in placements)
    if depths != list(range(1, len(placements) + 1)):
        raise ModelError(f"depths must be a permutation of 1..k, got {depths}")
    for p in placements:
        if not 0 <= p.object_id < objects.m:
            raise ModelError(f"unknown object id {p.object_id}")
        length = len(objects[p.object_id]) + (2 if markers else 0)
        lo, hi = left_range(length, d, room)
        if hi < lo:
            raise ModelError(f"object {p.object_id} does not fit a closed room of width {d}")
        if not lo <= p.left <= hi:
            raise ModelError(f"left endpoint {p.left} of object {p.object_id} outside [{lo}, {hi}] ({room} room)")
    return sorted(placements, key=lambda p: p.depth)


def _paint_row(row: np.ndarray, pixels: Sequence[int], left: int) -> None:
    d = row.shape[0]
    lo, hi = max(0, left), min(d, left + len(pixels))
    if lo < hi:
        row[lo:hi] = pixels[lo - left:hi - left]


def build_scene(objects: ObjectSet, placements: Sequence[Placement], background: Sequence[int] | None,
                d: int, room: str = "open", markers: bool = False) -> Scene:
    """Stack the placed objects by depth (depth 1 in row 0) over a background row.

    ``background`` is an explicit pixel string or None for the distinct background.
    """
    ordered = _check_placements(objects, placements, d, room, markers)
    rows = np.full((len(ordered) + 1, d), BLANK, dtype=np.int64)
    for r, p in enumerate(ordered):
        _paint_row(rows[r], rendered(objects[p.object_id], markers), p.left)
    rows[-1] = background_row(background, d)
    rows.setflags(write=False)
    return Scene(rows=rows, placements=tuple(ordered))


def view(scene: Scene) -> Image:
    """Topmost non-BLANK entry of every column."""
    rows = scene.rows
    first = np.argmax(rows != BLANK, axis=0)
    return Image.from_array(rows[first, np.arange(rows.shape[1])])


def render(objects: ObjectSet, placements: Sequence[Placement], background: Sequence[int] | None,
           d: int, markers: bool = False) -> np.ndarray:
    """Paint back to front; equal to view(build_scene(...)) without building the matrix."""
    img = background_row(background, d).copy()
    for p in sorted(placements, key=lambda p: -p.depth):
        _paint_row(img, rendered(objects[p.object_id], markers), p.left)
    return img


def _source_arrays(objects: ObjectSet, placements: Sequence[Placement], d: int,
                   markers: bool) -> tuple[np.ndarray, np.ndarray]:
    ids = np.full(d, -1, dtype=np.int64)
    idx = np.arange(d, dtype=np.int64)
    shift = 1 if markers else 0
    for p in sorted(placements, key=lambda p: -p.depth):
        length = len(objects[p.object_id]) + 2 * shift
        lo, hi = max(0, p.left), min(d, p.left + length)
        if lo < hi:
            ids[lo:hi] = p.object_id
            # marker pixels get index -1 (left) and s_i (right)
            idx[lo:hi] = np.arange(lo - p.left, hi - p.left) - shift
    return ids, idx


def explain(objects: ObjectSet, placements: Sequence[Placement], d: int,
            markers: bool = False) -> tuple[Source, ...]:
    return GroundTruth(tuple(placements), d, objects, markers).explanation


def _sample_depths(ids: Sequence[int], cfg: GenConfig, rng: np.random.Generator) -> list[int]:
    k = len(ids)
    pos = {oid: i for i, oid in enumerate(ids)}
    constraints = [(pos[b], pos[f]) for b, f in cfg.ordering if b in pos and f in pos]
    while True:
        depth = rng.permutation(k) + 1
        if cfg.depth_model == "fully_random" or all(depth[b] > depth[f] for b, f in constraints):
            return [int(x) for x in depth]


def generate_image(objects: ObjectSet, cfg: GenConfig, d: int,
                   rng: np.random.Generator) -> tuple[Image, GroundTruth]:
    """Sample one image: uniform k-subset, uniform left endpoints, depth per the depth model."""
    if cfg.k > objects.m:
        raise ModelError(f"k={cfg.k} exceeds m={objects.m}")
    extra = 2 if cfg.markers else 0
    ids = [int(x) for x in rng.choice(objects.m, size=cfg.k, replace=False)]
    lefts = []
    for oid in ids:
        lo, hi = left_range(len(objects[oid]) + extra, d, cfg.room)
        if hi < lo:
            raise ModelError(f"object {oid} longer than the closed room")
        lefts.append(int(rng.integers(lo, hi + 1)))
    depths = _sample_depths(ids, cfg, rng)
    placements = tuple(Placement(o, l, z) for o, l, z in zip(ids, lefts, depths))
    img = render(objects, placements, cfg.background, d, cfg.markers)
    return Image.from_array(img), GroundTruth(placements, d, objects, cfg.markers)


def generate_images(objects: ObjectSet, cfg: GenConfig, d: int, n: int,
                    rng: np.random.Generator) -> list[tuple[Image, GroundTruth]]:
    return [generate_image(objects, cfg, d, rng) for _ in range(n)]


def all_placements(objects: ObjectSet, k: int, d: int, room: str,
                   markers: bool = False) -> Iterable[tuple[Placement, ...]]:
    """Every placement tuple of k distinct objects (all subsets, offsets and depth orders)."""
    extra = 2 if markers else 0
    for ids in itertools.combinations(range(objects.m), k):
        ranges = [range(left_range(len(objects[i]) + extra, d, room)[0],
                        left_range(len(objects[i]) + extra, d, room)[1] + 1) for i in ids]
        for lefts in itertools.product(*ranges):
            for depths in itertools.permutations(range(1, k + 1)):
                yield tuple(Placement(i, l, z) for i, l, z in zip(ids, lefts, depths))
