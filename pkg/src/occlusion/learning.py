"""Recovering the object set from image samples, with and without endpoint markers."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .model import BACKGROUND, MARK_L, MARK_R, GroundTruth, Image, ObjectSet
from .sequencing import sequence_strings
from .structure import as_fraction

REGIMES = ("two", "k")


class ParamError(ValueError):
    """Learning parameters outside the regime the guarantees cover."""


def _pixels(img) -> np.ndarray:
    if isinstance(img, Image):
        return img.array()
    return np.asarray(img, dtype=np.int64)


# ---------------------------------------------------------------- calculators

def d_prime(d: int, s: int) -> int:
    return d + s - 2


def compute_visibility_prob(d: int, s: int, L: int, k: int, m: int) -> float:
    """Lower bound on the chance a fixed L-pixel piece of a fixed object is visible in one image."""
    if L > d or s >= d:
        raise ValueError("need L <= d and s < d")
    dp = d_prime(d, s)
    occl = 1 - (s + L - 1) / dp
    place = (d + 1 - L) / dp
    if occl < 0 or place < 0 or k > m or k < 1:
        raise ValueError("parameters make a factor negative")
    return occl ** (k - 1) * place * (k / m)


def required_samples_markers(d: int, s: int, L: int, k: int, m: int) -> int:
    a = compute_visibility_prob(d, s, L, k, m)
    if a <= 0:
        raise ValueError("visibility probability is zero")
    return math.ceil(math.log(20 * m * s / L) / a)


def p_mid_two(m: int) -> Fraction:
    return Fraction(1, 16 * m)


def p_mid_k(k: int, m: int) -> Fraction:
    return Fraction(k, 16 * m * 2 ** k)


def p_bad_two(d: int, s: int, L: int, m: int) -> tuple[float, float]:
    """(lower, upper) bounds on seeing a fixed problematic overlap string, two objects per image."""
    base = (d - L) / d_prime(d, s) ** 2 / math.comb(m, 2)
    return base, 2 * base


def p_bad_k(d: int, s: int, L: int, k: int) -> float:
    return k * (k - 1) / 2 * (d - L) / d_prime(d, s) ** 2


def n_single(m: int, s: int, L: int) -> float:
    return 4 * m * s / L


def n_problematic(m: int, s: int, k: int) -> float:
    return 2 * m * m * s * s if k == 2 else float(m) ** k * float(s) ** k


def chernoff_samples(p_mid, n_good: float, n_po: float) -> int:
    """Explicit sample count from the Chernoff argument (both tails at 1/10)."""
    p = float(p_mid)
    good = 4 / p * math.log(10 * n_good)
    bad = 2 * math.log(10 * n_po) / (p * math.log(4 / math.e))
    return math.ceil(max(good, bad))


def samples_two(const: float, m: int, s: int) -> int:
    return math.ceil(const * m * math.log(m * s))


def samples_k(const: float, k: int, m: int, s: int) -> int:
    return math.ceil(const * 2 ** k * m * math.log(m * s))


@dataclass(frozen=True)
class LearnParams:
    regime: str
    w: int
    L: int
    tau: Fraction
    k: int
    m: int
    d: int
    s: int
    S: int | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ParamError(f"unknown regime {self.regime!r}")
        object.__setattr__(self, "tau", as_fraction(self.tau))

    @classmethod
    def two(cls, w: int, m: int, d: int, s: int, S: int | None = None) -> "LearnParams":
        return cls("two", w, 4 * w, p_mid_two(m), 2, m, d, s, S)

    @classmethod
    def many(cls, w: int, k: int, m: int, d: int, s: int, C: int = 16, S: int | None = None) -> "LearnParams":
        return cls("k", w, 8 * w * k, Fraction(k, C * m * 2 ** k), k, m, d, s, S)

    @property
    def d_prime(self) -> int:
        return d_prime(self.d, self.s)

    @property
    def a(self) -> float:
        return compute_visibility_prob(self.d, self.s, self.L, self.k, self.m)

    @property
    def p_mid(self) -> Fraction:
        return p_mid_two(self.m) if self.regime == "two" else p_mid_k(self.k, self.m)

    def violations(self) -> list[str]:
        out = []
        if self.L % 4:
            out.append(f"L={self.L} must be divisible by 4")
        if not 0 < self.tau <= 1:
            out.append(f"tau={self.tau} must lie in (0, 1]")
        if self.regime == "two":
            if self.k != 2:
                out.append("two-object regime needs k=2")
            if self.L != 4 * self.w:
                out.append(f"need L = 4w (L={self.L}, w={self.w})")
            if self.tau != p_mid_two(self.m):
                out.append(f"need tau = 1/(16m) = {p_mid_two(self.m)}")
            if self.m * self.d_prime < 128:
                out.append(f"need m*d' >= 128 (m*d'={self.m * self.d_prime})")
            if not 2 * (self.s + 2 * self.L) < 3 * self.d:
                out.append(f"need s+2L < 3d/2 (s+2L={self.s + 2 * self.L}, d={self.d})")
        else:
            if self.L != 8 * self.w * self.k:
                out.append(f"need L = 8wk (L={self.L}, w={self.w}, k={self.k})")
            need = 16 * self.m * self.k * 2 ** self.k
            if self.d_prime < need:
                out.append(f"need d' >= 16mk2^k = {need} (d'={self.d_prime})")
            if not 2 * self.L < self.d:
                out.append(f"need L < d/2 (L={self.L}, d={self.d})")
        if self.k > self.m:
            out.append("need k <= m")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise ParamError("; ".join(bad))


# ------------------------------------------------------------ marker learning

def split_marker_chunks(img) -> tuple[list[tuple], list[tuple]]:
    """Split one marker-mode image into (whole objects, pieces).

    A whole object is a run opened by MARK_L and closed by MARK_R with no other
    marker in between. Every other maximal marker-free, background-free run is a piece.
    """
    whole, pieces = [], []
    run: list[int] = []
    opened = False

    def flush(closed: bool):
        nonlocal run
        if run:
            (whole if opened and closed else pieces).append(tuple(run))
        run = []

    for p in _pixels(img).tolist():
        if p == BACKGROUND:
            flush(False)
            opened = False
        elif p == MARK_L:
            flush(False)
            opened = True
        elif p == MARK_R:
            flush(True)
            opened = False
        else:
            run.append(p)
    flush(False)
    return whole, pieces


def recover_with_markers(samples: Iterable, L: int, w: int, c: int | None = None) -> ObjectSet:
    """Whole marker-delimited chunks are objects; longer pieces are sequenced alongside them."""
    whole, pieces = set(), set()
    for img in samples:
        wh, pc = split_marker_chunks(img)
        whole.update(x for x in wh if len(x) >= L)
        pieces.update(x for x in pc if len(x) >= L)
    # whole objects join the merge so that pieces contained in them are absorbed
    return ObjectSet.from_pixels(sequence_strings(whole | pieces, w), c=c)


# ----------------------------------------------------------- markerless learning

def _encode(img) -> bytes:
    arr = _pixels(img)
    if arr.size and arr.max() > 254:
        raise ValueError("byte encoding supports at most 255 colors")
    return np.where(arr < 0, 255, arr).astype(np.uint8).tobytes()


def _decode(b: bytes) -> tuple[int, ...]:
    return tuple(int(x) for x in b)


def _window_starts(img_bytes: bytes, L: int) -> np.ndarray:
    arr = np.frombuffer(img_bytes, dtype=np.uint8)
    if len(arr) < L:
        return np.zeros(0, dtype=np.int64)
    bg = np.concatenate([[0], np.cumsum(arr == 255)])
    return np.nonzero(bg[L:] - bg[:-L] == 0)[0]


def count_windows(samples: Iterable, L: int) -> Counter:
    """Multiplicity of every background-free length-L window across the samples."""
    counts: Counter = Counter()
    for img in samples:
        b = _encode(img)
        counts.update(b[i:i + L] for i in _window_starts(b, L).tolist())
    return Counter({_decode(k): v for k, v in counts.items()})


def frequent_windows(counts: Counter, tau, S: int) -> list[tuple[int, ...]]:
    thr = as_fraction(tau) * S
    return sorted(x for x, n in counts.items() if n >= thr)


def trim_middle(x: Sequence[int], L: int) -> tuple[int, ...]:
    return tuple(x[L // 4: 3 * L // 4])


def recover_end(core: tuple[int, ...], images: Sequence[bytes], w: int, side: str) -> tuple[int, ...] | None:
    """Shortest string x seen between background and the core's outer w pixels."""
    sig = bytes(core[:w]) if side == "left" else bytes(core[-w:])
    best = None
    for b in images:
        start = b.find(sig)
        while start != -1:
            if side == "left":
                j = start - 1
                while j >= 0 and b[j] != 255:
                    j -= 1
                x = b[j + 1:start] if j >= 0 else None
            else:
                j = start + w
                while j < len(b) and b[j] != 255:
                    j += 1
                x = b[start + w:j] if j < len(b) else None
            if x is not None and (best is None or len(x) < len(best) or (len(x) == len(best) and x < best)):
                best = x
            start = b.find(sig, start + 1)
    return None if best is None else _decode(best)


def learn_cores(samples: Sequence, params: LearnParams) -> list[tuple[int, ...]]:
    counts = count_windows(samples, params.L)
    kept = frequent_windows(counts, params.tau, len(samples))
    return sequence_strings([trim_middle(x, params.L) for x in kept], params.w)


def learn_no_markers(samples: Sequence, params: LearnParams, check: bool = True,
                     c: int | None = None) -> ObjectSet:
    """Frequency-threshold learning followed by end recovery.

    ``check=False`` skips the regime validation (used for degenerate controls).
    """
    if check:
        params.validate()
    cores = learn_cores(samples, params)
    encoded = [_encode(img) for img in samples]
    out = []
    for core in cores:
        if len(core) < params.w:
            out.append(core)
            continue
        left = recover_end(core, encoded, params.w, "left") or ()
        right = recover_end(core, encoded, params.w, "right") or ()
        out.append(left + core + right)
    return ObjectSet.from_pixels(sorted(set(out)), c=c)


# ------------------------------------------------------ ground-truth analysis

@dataclass(frozen=True)
class WindowClass:
    single: bool        # some occurrence lies inside one object instance
    problematic: bool   # some occurrence crosses objects inside the middle half


def classify_windows(samples: Sequence, truths: Sequence[GroundTruth], L: int) -> dict[tuple, WindowClass]:
    """Label each background-free window by how its occurrences were generated."""
    single: dict[tuple, bool] = {}
    prob: dict[tuple, bool] = {}
    lo, hi = L // 4, 3 * L // 4
    for img, gt in zip(samples, truths):
        b = _encode(img)
        ids, idx = gt.source_arrays
        # cut[j] is True when pixel j starts a new source instance
        cut = np.ones(len(ids), dtype=bool)
        cut[1:] = (ids[1:] != ids[:-1]) | (idx[1:] != idx[:-1] + 1)
        cuts = np.concatenate([[0], np.cumsum(cut)])
        for i in _window_starts(b, L).tolist():
            key = _decode(b[i:i + L])
            inner = cuts[i + L] - cuts[i + 1]
            mid = cuts[i + hi] - cuts[i + lo + 1]
            single[key] = single.get(key, False) or inner == 0
            prob[key] = prob.get(key, False) or mid > 0
    return {k: WindowClass(single[k], prob[k]) for k in single}


def problematic_strings(classes: dict[tuple, WindowClass]) -> set[tuple]:
    """Strings whose every observed occurrence is a problematic overlap."""
    return {k for k, v in classes.items() if v.problematic and not v.single}


def needed_windows(objects: ObjectSet, L: int) -> set[tuple]:
    return {o.pixels[i:i + L] for o in objects for i in range(len(o) - L + 1)}
