"""Bounded-strength pixel corruption with a ground-truth log."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import BACKGROUND, Image
from .structure import as_fraction

STRATEGIES = ("uniform_random", "worst_case_cluster")


@dataclass(frozen=True)
class CorruptionPlan:
    flips: tuple[tuple[int, int], ...]  # (index, new color), sorted by index
    alpha: Fraction  # kept exact so floor(alpha*W) never loses a flip to rounding
    W: int

    @property
    def budget(self) -> int:
        return math.floor(as_fraction(self.alpha) * self.W)

    @property
    def positions(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.flips)

    def to_json(self) -> dict:
        return {"alpha": str(as_fraction(self.alpha)), "W": self.W, "flips": [list(f) for f in self.flips]}


def window_counts(positions, d: int, W: int) -> np.ndarray:
    """Number of flipped positions in every length-W window of a d-pixel image."""
    mask = np.zeros(d, dtype=np.int64)
    mask[list(positions)] = 1
    if d < W:
        return np.array([mask.sum()])
    cs = np.concatenate([[0], np.cumsum(mask)])
    return cs[W:] - cs[:-W]


def audit_plan(plan: CorruptionPlan, original, corrupted=None) -> bool:
    """Every W-window holds at most floor(alpha*W) flips and each flip changes its pixel."""
    orig = _arr(original)
    d = len(orig)
    pos = [i for i, _ in plan.flips]
    if len(set(pos)) != len(pos) or any(not 0 <= i < d for i in pos):
        return False
    if any(orig[i] == col for i, col in plan.flips):
        return False
    if pos and window_counts(pos, d, plan.W).max() > plan.budget:
        return False
    if corrupted is not None:
        out = orig.copy()
        for i, col in plan.flips:
            out[i] = col
        if not np.array_equal(out, _arr(corrupted)):
            return False
    return True


def _arr(img) -> np.ndarray:
    return img.array() if isinstance(img, Image) else np.asarray(img, dtype=np.int64)


def _new_color(old: int, c: int, rng: np.random.Generator, allow_background: bool) -> int:
    palette = [x for x in range(c) if x != old]
    if allow_background and old != BACKGROUND:
        palette.append(BACKGROUND)
    return int(palette[rng.integers(len(palette))])


def _uniform_positions(d: int, W: int, budget: int, rng, n_flips, targets) -> list[int]:
    pool = np.asarray(sorted(targets) if targets is not None else range(d), dtype=np.int64)
    chosen: list[int] = []
    mask = np.zeros(d, dtype=np.int64)
    for i in rng.permutation(pool).tolist():
        if n_flips is not None and len(chosen) >= n_flips:
            break
        lo, hi = max(0, i - W + 1), min(i, max(0, d - W))
        # every window containing i must still have room
        ok = all(mask[a:a + W].sum() < budget for a in range(lo, hi + 1))
        if ok:
            mask[i] = 1
            chosen.append(i)
    return chosen


def _cluster_positions(d: int, W: int, budget: int, rng, n_flips) -> list[int]:
    # blocks of `budget` consecutive flips, one block per period of W pixels
    phase = int(rng.integers(W))
    chosen = []
    start = phase - W
    while start < d:
        chosen.extend(i for i in range(start, start + budget) if 0 <= i < d)
        start += W
    chosen.sort()
    if n_flips is not None and len(chosen) > n_flips:
        keep = rng.choice(len(chosen), size=n_flips, replace=False)
        chosen = sorted(chosen[j] for j in keep)
    return chosen


def corrupt(image, alpha, W: int, rng: np.random.Generator, strategy: str = "uniform_random",
            c: int | None = None, n_flips: int | None = None, targets=None,
            allow_background: bool = False) -> tuple[Image, CorruptionPlan]:
    """Flip pixels subject to at most floor(alpha*W) flips in every window of W pixels.

    ``n_flips=None`` saturates the budget. ``targets`` restricts uniform picks to
    given indices (a placement-aware adversary). New colors are uniform over the
    other object colors; BACKGROUND is a candidate only with ``allow_background``.
    """
    img = _arr(image)
    d = len(img)
    a = as_fraction(alpha)
    if not 0 <= a < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if not 1 <= W <= d:
        raise ValueError("W must lie in [1, d]")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    budget = math.floor(a * W)
    if budget == 0 and n_flips:
        raise ValueError("alpha*W < 1 leaves no budget for the requested flips")
    if c is None:
        c = int(max(2, img.max() + 1))
    if budget == 0 or n_flips == 0:
        positions = []
    elif strategy == "uniform_random":
        positions = _uniform_positions(d, W, budget, rng, n_flips, targets)
    else:
        positions = _cluster_positions(d, W, budget, rng, n_flips)
    out = img.copy()
    flips = []
    for i in sorted(positions):
        col = _new_color(int(img[i]), c, rng, allow_background)
        out[i] = col
        flips.append((i, col))
    return Image.from_array(out), CorruptionPlan(tuple(flips), a, W)
