"""Greedy overlap merging of object pieces."""
from __future__ import annotations

import heapq
from collections import defaultdict
from typing import Iterable, Sequence

from .model import ObjectSet


def _merge(a: tuple, b: tuple, off: int) -> tuple | None:
    """Place b at offset off >= 0 inside a's frame; None if the overlap disagrees."""
    ov = min(len(a) - off, len(b))
    if ov <= 0 or a[off:off + ov] != b[:ov]:
        return None
    if off + len(b) <= len(a):
        return a
    return a + b[len(a) - off:]


def sequence_strings(segments: Iterable[Sequence[int]], w: int) -> list[tuple[int, ...]]:
    """Repeatedly merge the pair with the longest overlap of at least w pixels.

    Containment counts as an overlap equal to the contained piece's length.
    Ties go to the smallest (left index, right index). Pieces shorter than w
    are passed through untouched.
    """
    if w < 1:
        raise ValueError("w must be at least 1")
    pieces = sorted({tuple(int(p) for p in x) for x in segments if len(x) > 0})
    short = [x for x in pieces if len(x) < w]
    segs: list[tuple] = [x for x in pieces if len(x) >= w]
    active: set[int] = set(range(len(segs)))
    index: dict[tuple, list[tuple[int, int]]] = defaultdict(list)
    heap: list[tuple[int, int, int, int]] = []

    def candidates(k: int):
        x = segs[k]
        seen = set()
        for pos in range(len(x) - w + 1):
            for other, opos in index[x[pos:pos + w]]:
                if other == k or other not in active:
                    continue
                off = pos - opos
                # off >= 0: other starts inside x; otherwise x starts inside other
                left, right, o = (k, other, off) if off >= 0 else (other, k, -off)
                if (left, right, o) in seen:
                    continue
                seen.add((left, right, o))
                a, b = segs[left], segs[right]
                if _merge(a, b, o) is not None:
                    ov = min(len(a) - o, len(b))
                    heapq.heappush(heap, (-ov, left, right, o))

    def add_to_index(k: int):
        x = segs[k]
        for pos in range(len(x) - w + 1):
            index[x[pos:pos + w]].append((k, pos))

    for k in range(len(segs)):
        add_to_index(k)
    for k in range(len(segs)):
        candidates(k)

    while heap:
        _, i, j, off = heapq.heappop(heap)
        if i not in active or j not in active:
            continue
        merged = _merge(segs[i], segs[j], off)
        active.discard(i)
        active.discard(j)
        k = len(segs)
        segs.append(merged)
        active.add(k)
        add_to_index(k)
        candidates(k)

    return sorted({segs[k] for k in active} | set(short))


def sequence(segments: Iterable[Sequence[int]], w: int, c: int | None = None) -> ObjectSet:
    return ObjectSet.from_pixels(sequence_strings(segments, w), c=c)
