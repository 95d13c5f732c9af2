"""Set-splitting to object-learning reduction, solution mapping and verification."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# six-letter alphabet of the reduction
ZERO, ONE, T, F, G, B = 0, 1, 2, 3, 4, 5
ALPHABET = (ZERO, ONE, T, F, G, B)
NAMES = {ZERO: "0", ONE: "1", T: "T", F: "F", G: "g", B: "b"}
OBJECT_COLORS = (ZERO, ONE, T, F, G)
_HOLE = -1


@dataclass(frozen=True)
class SSInstance:
    n: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = []
        for cl in self.clauses:
            cl = tuple(sorted(int(x) for x in cl))
            if len(cl) not in (2, 3):
                raise ValueError(f"clause {cl} must have 2 or 3 members")
            if len(set(cl)) != len(cl):
                raise ValueError(f"clause {cl} repeats a variable")
            if any(not 0 <= x < self.n for x in cl):
                raise ValueError(f"clause {cl} names a variable outside [0, {self.n})")
            norm.append(cl)
        object.__setattr__(self, "clauses", tuple(norm))

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(len({bool(assignment[x]) for x in cl}) == 2 for cl in self.clauses)


@dataclass(frozen=True)
class Triple:
    image: tuple[int, ...]
    l1: int
    l2: int
    kind: str = ""  # "variable", "set" or "mask"


@dataclass(frozen=True)
class OLInstance:
    n_obj: int
    triples: tuple[Triple, ...]
    D: int
    background_color: int = B
    alphabet: tuple[int, ...] = ALPHABET
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Witness:
    """Placements (object index, left, depth) that render one triple's image."""
    triple: int
    placements: tuple[tuple[int, int, int], ...]


def all_columns(n: int) -> list[tuple[int, ...]]:
    """Clause columns: pairs in lexicographic order, then triples."""
    return list(itertools.combinations(range(n), 2)) + list(itertools.combinations(range(n), 3))


def n_columns(n: int) -> int:
    return math.comb(n, 2) + math.comb(n, 3)


def indicator(n: int, x: int) -> tuple[int, ...]:
    """Row of the incidence matrix for variable x with a leading 0."""
    return (ZERO,) + tuple(ONE if x in col else ZERO for col in all_columns(n))


def column_of(n: int, clause: Sequence[int]) -> int:
    """1-based column index of a clause."""
    return all_columns(n).index(tuple(sorted(clause))) + 1


def _padded(img: list[int], D: int) -> tuple[int, ...]:
    if len(img) > D:
        raise ValueError("image longer than the uniform length")
    return tuple(img) + (B,) * (D - len(img))


def reduce(ss: SSInstance) -> OLInstance:
    if ss.n < 2:
        raise ValueError("need n >= 2")
    n, N = ss.n, n_columns(ss.n)
    D = 2 * N + 5
    obj_len = N + 2
    triples = []
    for x in range(n):
        right = indicator(n, x)
        left = right[::-1]
        for mid in (T, F):
            triples.append(Triple(_padded([B, *left, mid, *right, B], D), obj_len, obj_len, "variable"))
    for cl in ss.clauses:
        k = column_of(n, cl)
        for mid in (T, F):
            triples.append(Triple(_padded([ONE] + [G] * k + [mid, B], D), k, obj_len, "set"))
    for j in range(2, N + 1):
        triples.append(Triple(_padded([B] + [G] * j + [B, G], D), j, 1, "mask"))
    return OLInstance(2 * n + N, tuple(triples), D, meta={"n": n, "clauses": [list(c) for c in ss.clauses]})


def assignment_to_objects(ss: SSInstance, assignment: Sequence[bool]) -> list[tuple[int, ...]]:
    if len(assignment) != ss.n:
        raise ValueError("assignment length must equal n")
    out = []
    for x in range(ss.n):
        right = indicator(ss.n, x)
        left = right[::-1]
        if assignment[x]:
            out += [left + (T,), (F,) + right]
        else:
            out += [left + (F,), (T,) + right]
    out += [(G,) * j for j in range(1, n_columns(ss.n) + 1)]
    return out


def _render(D: int, layers: Sequence[tuple[tuple[int, ...], int]]) -> np.ndarray:
    """Paint (pixels, left) layers listed front first over the b background."""
    img = np.full(D, B, dtype=np.int64)
    for pix, left in reversed(layers):
        a, b = max(0, left), min(D, left + len(pix))
        if a < b:
            img[a:b] = pix[a - left:b - left]
    return img


def _layer_rows(pix: tuple, D: int) -> tuple[np.ndarray, np.ndarray]:
    """Every open-room placement of one object as a row, with BLANK off the object."""
    lefts = np.arange(-len(pix) + 1, D + 1)
    rows = np.full((len(lefts), D), _HOLE, dtype=np.int64)
    for r, left in enumerate(lefts.tolist()):
        a, b = max(0, left), min(D, left + len(pix))
        if a < b:
            rows[r, a:b] = pix[a - left:b - left]
    return lefts, rows


def _produce(image: np.ndarray, o1: tuple, o2: tuple) -> tuple[int, int, bool] | None:
    """Search every open-room placement of two objects and both depth orders."""
    D = len(image)
    lefts1, r1 = _layer_rows(o1, D)
    lefts2, r2 = _layer_rows(o2, D)
    for first_on_top in (True, False):
        top, bottom = (r1[:, None, :], r2[None, :, :]) if first_on_top else (r2[None, :, :], r1[:, None, :])
        comp = np.where(top != _HOLE, top, bottom)
        comp = np.where(comp == _HOLE, B, comp)
        hits = np.argwhere(np.all(comp == image, axis=2))
        if hits.size:
            a, b = hits[0]
            return int(lefts1[a]), int(lefts2[b]), first_on_top
    return None


def _candidates(objects: list[tuple], length: int) -> list[int]:
    return [i for i, o in enumerate(objects) if len(o) == length]


def verify_ol(instance: OLInstance, objects: Sequence[Sequence[int]],
              with_witness: bool = False):
    """Does every triple's image arise from two distinct given objects of the stated lengths?"""
    objs = [tuple(int(p) for p in o) for o in objects]
    ok = len(objs) <= instance.n_obj and all(o and B not in o for o in objs)
    witnesses: list[Witness] = []
    if ok:
        for t, tr in enumerate(instance.triples):
            img = np.asarray(tr.image, dtype=np.int64)
            found = None
            for i in _candidates(objs, tr.l1):
                for j in _candidates(objs, tr.l2):
                    if i == j:
                        continue
                    hit = _produce(img, objs[i], objs[j])
                    if hit is not None:
                        l1, l2, top = hit
                        found = Witness(t, ((i, l1, 1 if top else 2), (j, l2, 2 if top else 1)))
                        break
                if found:
                    break
            if found is None:
                ok = False
                break
            witnesses.append(found)
    return (ok, witnesses) if with_witness else ok


def replay_witness(instance: OLInstance, objects: Sequence[Sequence[int]], w: Witness) -> bool:
    objs = [tuple(o) for o in objects]
    layers = [(objs[i], left) for i, left, _ in sorted(w.placements, key=lambda p: p[2])]
    return bool(np.array_equal(_render(instance.D, layers), np.asarray(instance.triples[w.triple].image)))


def brute_force_ss(ss: SSInstance, max_n: int = 24) -> tuple[bool, ...] | None:
    """First satisfying assignment in binary counting order, or None."""
    if ss.n > max_n:
        raise RuntimeError(f"n={ss.n} exceeds the brute-force budget of {max_n}")
    for bits in itertools.product((False, True), repeat=ss.n):
        if ss.satisfied_by(bits):
            return bits
    return None


def all_satisfying(ss: SSInstance) -> list[tuple[bool, ...]]:
    return [bits for bits in itertools.product((False, True), repeat=ss.n) if ss.satisfied_by(bits)]


def reverse_candidates(ss: SSInstance) -> list[list[tuple[int, ...]]]:
    """Object sets of the form I_l(x)+a, b'+I_r(x) per variable plus the grey masks.

    For each variable the end letters (a, b') range over all non-background
    colors and are kept only if both of that variable's images are producible.
    """
    inst = reduce(ss)
    masks = [(G,) * j for j in range(1, n_columns(ss.n) + 1)]
    per_var = []
    for x in range(ss.n):
        right = indicator(ss.n, x)
        left = right[::-1]
        sub = OLInstance(inst.n_obj, inst.triples[2 * x:2 * x + 2], inst.D)
        keep = [(left + (a,), (b2,) + right) for a in OBJECT_COLORS for b2 in OBJECT_COLORS
                if verify_ol(sub, [left + (a,), (b2,) + right])]
        per_var.append(keep)
    return [sum((list(p) for p in combo), []) + masks for combo in itertools.product(*per_var)]


def reverse_check(ss: SSInstance) -> tuple[bool, bool]:
    """(some structured candidate solves the instance, set-splitting is satisfiable)."""
    inst = reduce(ss)
    accepted = any(verify_ol(inst, cand) for cand in reverse_candidates(ss))
    return accepted, brute_force_ss(ss) is not None


def structural_audit(ss: SSInstance, inst: OLInstance) -> list[str]:
    """Counting identities every reduction output must satisfy."""
    n, N = ss.n, n_columns(ss.n)
    errs = []
    kinds = [t.kind for t in inst.triples]
    if inst.n_obj != 2 * n + N:
        errs.append("object budget")
    if kinds.count("variable") != 2 * n:
        errs.append("variable image count")
    if kinds.count("set") != 2 * len(ss.clauses):
        errs.append("set image count")
    if kinds.count("mask") != max(0, N - 1):
        errs.append("mask image count")
    if N != (n ** 3 - n) // 6:
        errs.append("column count")
    if any(len(t.image) != inst.D for t in inst.triples) or inst.D != 2 * N + 5:
        errs.append("image length")
    for t in inst.triples:
        if t.kind == "variable" and (t.l1, t.l2) != (N + 2, N + 2):
            errs.append("variable lengths")
        if t.kind == "mask" and t.l2 != 1:
            errs.append("mask lengths")
        if t.kind == "set" and t.l2 != N + 2:
            errs.append("set lengths")
    return errs
