"""Seeded experiment runner, success predicates, breaker fixtures and pilot calibration."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import hardness as hd
from .adversary import CorruptionPlan, audit_plan, corrupt
from .inference import (
    dp_min_counts, dp_min_objects, dp_min_objects_batch, explanation_to_placements,
    greedy_infer, greedy_infer_noisy, reachable_images, replay,
)
from .learning import LearnParams, learn_no_markers, recover_with_markers, required_samples_markers, samples_k, samples_two
from .model import (
    UNKNOWN, BLANK, GenConfig, Image, ObjectPixel, ObjectSet, build_scene, generate_image, make_rng, view,
)
from .structure import (
    as_fraction, check_strong_ws, check_ws, gen_ws_objects, min_ws_width, random_strings, rerandomize,
)

Z95 = 1.959963984540054  # standard normal 0.975 quantile


def trial_seed(base: int, i: int) -> int:
    """Per-trial seed: the first 64-bit word of SeedSequence([base, i])."""
    return int(np.random.SeedSequence([base, i]).generate_state(1, dtype=np.uint64)[0])


def wilson(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


# ------------------------------------------------------------------ fixtures

@dataclass(frozen=True)
class BreakerFixture:
    kind: str
    objects: ObjectSet
    image: Image            # corrupted
    plan: CorruptionPlan
    clean: Image
    background: tuple[int, ...] | None
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.objects, self.image, self.plan))


A_COL, B_COL, C_COL = 0, 1, 2


def _dp_noise(d: int) -> BreakerFixture:
    if d < 7:
        raise ValueError("dp_noise needs d >= 7")
    # C followed by alternating A, B; the object then reads C B A A A A B A B ...
    bg = (C_COL,) + tuple(A_COL if i % 2 == 0 else B_COL for i in range(d - 1))
    objs = ObjectSet.from_pixels([(B_COL, A_COL, A_COL, A_COL, A_COL),
                                  (A_COL, B_COL, B_COL, B_COL, B_COL)], c=3)
    clean = np.array(bg, dtype=np.int64)
    clean[1:6] = objs[0].pixels
    plan = CorruptionPlan(((1, A_COL),), Fraction(1, 6), 6)
    img = clean.copy()
    img[1] = A_COL
    return BreakerFixture("dp_noise", objs, Image.from_array(img), plan, Image.from_array(clean), bg,
                          {"clean_left": 1, "room": "open"})


def _exact_family(d: int, w: int, flip: int | None, seed: int, epsilon: float, alpha: float) -> BreakerFixture:
    if w < 1 or d < 4 * w:
        raise ValueError(f"exact_match_family needs d >= 4w (d={d}, w={w})")
    flip = d // 2 if flip is None else flip
    if not (d < 4 * flip and 4 * flip < 3 * d):
        raise ValueError(f"flip {flip} must lie strictly inside the middle half ({d / 4}, {3 * d / 4})")
    rng = make_rng(seed)
    for _ in range(10_000):
        a = (0,) + tuple(int(x) for x in rng.integers(0, 2, size=d - 1))
        b = (1,) + tuple(int(x) for x in rng.integers(0, 2, size=d - 1))
        if check_strong_ws([a, b], w, epsilon).holds:
            break
    else:
        raise RuntimeError(f"no {epsilon}-strongly {w}-well-structured binary pair of length {d}; try a larger w")
    objs = ObjectSet.from_pixels([a, b], c=2)
    clean = np.array(a, dtype=np.int64)
    img = clean.copy()
    img[flip] = 1 - img[flip]
    plan = CorruptionPlan(((flip, int(img[flip])),), as_fraction(alpha), w)
    return BreakerFixture("exact_match_family", objs, Image.from_array(img), plan, Image.from_array(clean), None,
                          {"flip": flip, "epsilon": epsilon, "alpha": alpha, "w": w, "seed": seed,
                           "w_exact": min_ws_width(objs), "room": "open"})


def make_breaker_fixture(kind: str, d: int, w: int = 1, flip: int | None = None, seed: int = 0,
                         epsilon: float = 0.2, alpha: float = 0.04) -> BreakerFixture:
    """Images on which exact matching blows up after a single flipped pixel."""
    if kind == "dp_noise":
        return _dp_noise(d)
    if kind == "exact_match_family":
        return _exact_family(d, w, flip, seed, epsilon, alpha)
    raise ValueError(f"unknown fixture kind {kind!r}")


def fixture_metrics(fx: BreakerFixture) -> dict:
    clean = dp_min_objects(fx.clean, fx.objects, fx.background, "open").object_count
    bad = dp_min_objects(fx.image, fx.objects, fx.background, "open").object_count
    d = fx.image.d
    out = {"kind": fx.kind, "d": d, "clean_count": clean, "corrupted_count": bad}
    if fx.kind == "dp_noise":
        out["ok"] = clean == 1 and bad is not None and 2 * bad >= d
        return out
    w, w_exact = fx.meta["w"], fx.meta["w_exact"]
    ex = greedy_infer_noisy(fx.image, fx.objects, w, fx.meta["epsilon"], fx.meta["alpha"], w, 1)
    named = {s.object_id for s in ex.sources if isinstance(s, ObjectPixel)}
    restored = tuple((i, int(fx.clean.pixels[i])) for i, _ in fx.plan.flips)
    # count >= d/(4w)+1 for the smallest valid w implies it for every larger w
    out.update(w=w, w_exact=w_exact, bound=d / (4 * w_exact) + 1, greedy_sources=sorted(named),
               greedy_unknown=ex.unknown_count, greedy_corrected=[list(x) for x in ex.corrected])
    out["ok"] = (clean == 1 and bad is not None and 4 * w_exact * (bad - 1) >= d
                 and named == {0} and tuple(ex.corrected) == restored)
    return out


# ------------------------------------------------------------- trial kinds

def _forced_back(m: int) -> tuple[tuple[int, int], ...]:
    return tuple((0, j) for j in range(1, m))


def _sizes(rng, m: int, lo: int, hi: int) -> list[int]:
    return [int(x) for x in rng.integers(lo, hi + 1, size=m)]


def _naive_view(objects: ObjectSet, placements, bg, d: int) -> list[int]:
    out = []
    for col in range(d):
        val = bg[col] if bg is not None else -1
        for p in sorted(placements, key=lambda p: p.depth):
            o = objects[p.object_id].pixels
            if 0 <= col - p.left < len(o):
                val = o[col - p.left]
                break
        out.append(int(val))
    return out


def trial_view(p: dict, rng) -> dict:
    c = int(rng.integers(2, p["c_max"] + 1))
    d = int(rng.integers(1, p["d_max"] + 1))
    room = ("open", "closed")[int(rng.integers(2))]
    s_hi = d if room == "closed" else p["s_max"]
    s_hi = min(s_hi, p["s_max"])
    m = min(int(rng.integers(1, p["m_max"] + 1)), sum(c ** n for n in range(1, s_hi + 1)))
    while True:
        strings = random_strings(m, _sizes(rng, m, 1, s_hi), c, rng)
        if len(set(strings)) == m:
            break
    objs = ObjectSet.from_pixels(strings, c=c)
    k = int(rng.integers(0, m + 1))
    bg = None if rng.random() < 0.5 else tuple(int(x) for x in rng.integers(0, c, size=d))
    perm = [int(x) for x in rng.permutation(m)]
    pairs = tuple((perm[i], perm[j]) for i, j in itertools.combinations(range(m), 2) if rng.random() < 0.3)
    depth_model = "partially_random" if pairs else "fully_random"
    cfg = GenConfig(k=k, room=room, depth_model=depth_model, ordering=pairs, background=bg)
    img, gt = generate_image(objs, cfg, d, rng)
    scene = build_scene(objs, gt.placements, bg, d, room)
    viewed = view(scene).pixels
    naive = _naive_view(objs, gt.placements, bg, d)
    colors_ok = all(
        (img.pixels[j] == objs[src.object_id].pixels[src.index]) if isinstance(src, ObjectPixel)
        else img.pixels[j] == (bg[j] if bg is not None else -1)
        for j, src in enumerate(gt.explanation))
    order_ok = all(gt.placements[a].depth < gt.placements[b].depth
                   for a, b in itertools.permutations(range(k), 2)
                   if (gt.placements[b].object_id, gt.placements[a].object_id) in pairs)
    rows_ok = all(np.count_nonzero(np.diff(np.concatenate([[0], (r != BLANK).astype(int), [0]])) == 1) <= 1
                  for r in scene.rows[:-1])
    return {"d": d, "k": k, "room": room, "view_equal": viewed == img.pixels, "naive_equal": tuple(naive) == img.pixels,
            "colors_ok": colors_ok, "order_ok": order_ok, "rows_ok": rows_ok}


def trial_ws_random(p: dict, rng) -> dict:
    strings = random_strings(p["m"], [p["s"]] * p["m"], p["c"], rng)
    rep = check_ws(strings, p["w"])
    return {"holds": rep.holds, "reason": rep.reason or ""}


def trial_ws_semirandom(p: dict, rng) -> dict:
    # all-zeros adversarial base: the objects coincide before rerandomization
    strings = rerandomize([[0] * p["s"]] * p["m"], p["c"], p["p"], rng)
    rep = check_ws(strings, p["w"])
    return {"holds": rep.holds, "reason": rep.reason or ""}


def _learn_objects(p: dict, rng) -> ObjectSet:
    sizes = _sizes(rng, p["m"], p["s_min"], p["s"])
    return gen_ws_objects(p["m"], sizes, p["c"], p["w"], rng)


def _cfg(p: dict, markers: bool = False) -> GenConfig:
    ordering = _forced_back(p["m"]) if p.get("depth_model", "partially_random") == "partially_random" else ()
    return GenConfig(k=p["k"], room=p.get("room", "open"), depth_model=p.get("depth_model", "partially_random"),
                     ordering=ordering, markers=markers)


def trial_learn_markers(p: dict, rng) -> dict:
    objs = _learn_objects(p, rng)
    L = p.get("L") or 2 * p["w"]
    S = p.get("S") or required_samples_markers(p["d"], p["s"], L, p["k"], p["m"])
    cfg = _cfg(p, markers=True)
    imgs = [generate_image(objs, cfg, p["d"], rng)[0] for _ in range(S)]
    rec = recover_with_markers(imgs, L, p["w"])
    return {"S": S, "L": L, "exact": rec.as_set() == objs.as_set(), "n_recovered": rec.m}


def trial_learn_two(p: dict, rng) -> dict:
    objs = _learn_objects(p, rng)
    S = samples_two(p["const"], p["m"], p["s"])
    params = LearnParams.two(p["w"], p["m"], p["d"], p["s"], S)
    params.validate()
    imgs = [generate_image(objs, _cfg({**p, "k": 2}), p["d"], rng)[0] for _ in range(S)]
    rec = learn_no_markers(imgs, params)
    return {"S": S, "exact": rec.as_set() == objs.as_set(), "n_recovered": rec.m}


def trial_learn_k(p: dict, rng) -> dict:
    objs = _learn_objects(p, rng)
    S = samples_k(p["const"], p["k"], p["m"], p["s"])
    params = LearnParams.many(p["w"], p["k"], p["m"], p["d"], p["s"], C=p.get("C", 16), S=S)
    params.validate()
    if min(len(o) for o in objs) < 6 * p["w"] * p["k"]:
        raise ValueError("objects must have length >= 6wk")
    imgs = [generate_image(objs, _cfg(p), p["d"], rng)[0] for _ in range(S)]
    rec = learn_no_markers(imgs, params)
    return {"S": S, "exact": rec.as_set() == objs.as_set(), "n_recovered": rec.m}


def _wrong(ex_sources, truth) -> int:
    return sum(1 for a, b in zip(ex_sources, truth) if a is not UNKNOWN and a != b)


def trial_greedy(p: dict, rng) -> dict:
    k = int(rng.integers(1, p["k_max"] + 1))
    objs = gen_ws_objects(p["m"], _sizes(rng, p["m"], p["s_min"], p["s"]), p["c"], p["w"], rng)
    img, gt = generate_image(objs, GenConfig(k=k), p["d"], rng)
    ex = greedy_infer(img, objs, p["w"], k)
    w = p["w"]
    return {"k": k, "incorrect": _wrong(ex.sources, gt.explanation), "unknown": ex.unknown_count,
            "bound": 4 * k * k * w + 2 * k * w}


def trial_greedy_noisy(p: dict, rng) -> dict:
    k = int(rng.integers(1, p["k_max"] + 1))
    W = int(p["W"][int(rng.integers(len(p["W"])))])
    w, eps, alpha = p["w"], p["epsilon"], p["alpha"]
    objs = gen_ws_objects(p["m"], _sizes(rng, p["m"], p["s_min"], p["s"]), p["c"], w, rng, epsilon=eps)
    img, gt = generate_image(objs, GenConfig(k=k), p["d"], rng)
    cimg, plan = corrupt(img, alpha, W, rng, p["strategy"], c=p["c"])
    ex = greedy_infer_noisy(cimg, objs, w, eps, alpha, W, k)
    explained = {i for i, s in enumerate(ex.sources) if s is not UNKNOWN}
    reported = {i for i, _ in ex.corrected}
    restored_ok = all(img.pixels[i] == col for i, col in ex.corrected)
    w_alg = max(w, W)
    return {"k": k, "W": W, "flips": len(plan.flips), "audit": audit_plan(plan, img, cimg),
            "incorrect": _wrong(ex.sources, gt.explanation), "unknown": ex.unknown_count,
            "bound": 2 * w_alg * k * (2 * k + 1),
            "missed": len((plan.positions & explained) - reported),
            "spurious": len(reported - plan.positions), "restored_ok": restored_ok}


def dp_family(s_max: int = 4, m_max: int = 3, d_max: int = 10, k_max: int = 2, c: int = 2,
              replay_fraction: float = 0.1, rng=None) -> dict:
    """DP counts against layered brute force on every generatable small instance.

    A random ``replay_fraction`` of the (object set, d, room) cases also backtracks
    the DP explanation and replays it to the exact image.
    """
    rng = rng if rng is not None else make_rng(0)
    n = bad = replayed = replay_bad = 0
    for s in range(1, s_max + 1):
        strings = list(itertools.product(range(c), repeat=s))
        for m in range(1, m_max + 1):
            for sset in itertools.combinations(strings, m):
                objs = ObjectSet.from_pixels(sset, c=c)
                for d in range(max(1, s - 1), d_max + 1):
                    for room in ("open", "closed"):
                        if room == "closed" and s > d:
                            continue
                        table: dict[bytes, tuple[int, np.ndarray]] = {}
                        for j, imgs in enumerate(reachable_images(objs, None, d, room, k_max)):
                            for r in imgs:
                                table.setdefault(r.tobytes(), (j, r))
                        rows = np.array([r for _, r in table.values()])
                        want = np.array([j for j, _ in table.values()])
                        got = dp_min_counts(rows, objs, None, room)
                        n += len(rows)
                        bad += int(np.count_nonzero(got != want))
                        if rng.random() < replay_fraction:
                            for r, ex in zip(rows, dp_min_objects_batch(rows, objs, None, room)):
                                replayed += 1
                                pl = explanation_to_placements(ex.sources, objs)
                                if pl is None or not np.array_equal(replay(pl, objs, None, d, room).array(), r):
                                    replay_bad += 1
    return {"instances": n, "disagreements": bad, "replayed": replayed, "replay_failures": replay_bad}


def trial_dp_family(p: dict, rng) -> dict:
    return dp_family(p["s_max"], p["m_max"], p["d_max"], p["k_max"], p.get("c", 2), p.get("replay_fraction", 0.1), rng)


def trial_fixture(p: dict, rng) -> dict:
    fx = make_breaker_fixture(p["kind"], p["d"], p.get("w", 1), p.get("flip"), p.get("fixture_seed", 0))
    return fixture_metrics(fx)


def reduction_check(ss: hd.SSInstance) -> dict:
    inst = hd.reduce(ss)
    audit = hd.structural_audit(ss, inst)
    sats = set(hd.all_satisfying(ss))
    set_only = hd.OLInstance(inst.n_obj, tuple(t for t in inst.triples if t.kind == "set"), inst.D)
    forward = negative = True
    for a in itertools.product((False, True), repeat=ss.n):
        objs = hd.assignment_to_objects(ss, a)
        if a in sats:
            ok, wit = hd.verify_ol(inst, objs, with_witness=True)
            forward &= ok and all(hd.replay_witness(inst, objs, x) for x in wit)
        else:
            # a violating assignment must leave some set image unproducible
            negative &= not hd.verify_ol(set_only, objs)
    accepted, satisfiable = hd.reverse_check(ss)
    return {"n": ss.n, "clauses": [list(c) for c in ss.clauses], "audit": audit, "satisfying": len(sats),
            "forward": forward, "negative": negative, "reverse_accepted": accepted, "satisfiable": satisfiable}


def trial_reduction(p: dict, rng) -> dict:
    """Trial i of an n-variable run checks the i-th subset of all clauses (binary order)."""
    cols = [c for c in hd.all_columns(p["n"])]
    idx = p["index"]
    clauses = tuple(c for b, c in enumerate(cols) if idx >> b & 1)
    return reduction_check(hd.SSInstance(p["n"], clauses))


@dataclass(frozen=True)
class TrialKind:
    fn: Callable[[dict, np.random.Generator], dict]
    required: tuple[str, ...]
    optional: tuple[str, ...] = ()
    per_index: str | None = None  # parameter filled with the trial index


TRIALS: dict[str, TrialKind] = {
    "view-roundtrip": TrialKind(trial_view, ("c_max", "d_max", "s_max", "m_max")),
    "ws-random": TrialKind(trial_ws_random, ("m", "s", "c", "w")),
    "ws-semirandom": TrialKind(trial_ws_semirandom, ("m", "s", "c", "w", "p")),
    "learn-markers": TrialKind(trial_learn_markers, ("m", "s_min", "s", "c", "w", "d", "k"),
                               ("L", "S", "room", "depth_model")),
    "learn-two": TrialKind(trial_learn_two, ("m", "s_min", "s", "c", "w", "d", "const"), ("room", "depth_model")),
    "learn-k": TrialKind(trial_learn_k, ("m", "s_min", "s", "c", "w", "d", "k", "const"),
                         ("C", "room", "depth_model")),
    "greedy": TrialKind(trial_greedy, ("m", "s_min", "s", "c", "w", "d", "k_max")),
    "greedy-noisy": TrialKind(trial_greedy_noisy, ("m", "s_min", "s", "c", "w", "d", "k_max", "epsilon",
                                                   "alpha", "W", "strategy")),
    "dp-family": TrialKind(trial_dp_family, ("s_max", "m_max", "d_max", "k_max"), ("c", "replay_fraction")),
    "fixture": TrialKind(trial_fixture, ("kind", "d"), ("w", "flip", "fixture_seed")),
    "reduction": TrialKind(trial_reduction, ("n",), (), per_index="index"),
}


# -------------------------------------------------------------- predicates

def _pred_view(m):
    return m["view_equal"] and m["naive_equal"] and m["colors_ok"] and m["order_ok"] and m["rows_ok"]


def _pred_coverage(m):
    return m["incorrect"] == 0 and m["unknown"] <= m["bound"]


def _pred_noisy(m):
    return (_pred_coverage(m) and m["audit"] and m["missed"] == 0 and m["spurious"] == 0 and m["restored_ok"])


def _pred_reduction(m):
    return not m["audit"] and m["forward"] and m["negative"] and m["reverse_accepted"] == m["satisfiable"]


def _pred_dp(m):
    return m["instances"] > 0 and m["disagreements"] == 0 and m["replay_failures"] == 0


PREDICATES: dict[str, Callable[[dict], bool]] = {
    "view-fidelity@1": _pred_view,
    "ws-holds@1": lambda m: bool(m["holds"]),
    "exact-recovery@1": lambda m: bool(m["exact"]),
    "dp-equals-oracle@1": _pred_dp,
    "coverage-bound@1": _pred_coverage,
    "noisy-robust@1": _pred_noisy,
    "fixture-blowup@1": lambda m: bool(m["ok"]),
    "reduction-sound@1": _pred_reduction,
}


# -------------------------------------------------------------- experiments

@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    trial: str
    params: dict
    trials: int
    seed: int
    predicate: str
    workers: int = 1

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.predicate not in PREDICATES:
            raise ValueError(f"unknown predicate {self.predicate!r}")
        if self.trial not in TRIALS:
            raise ValueError(f"unknown trial kind {self.trial!r}")
        kind = TRIALS[self.trial]
        keys = set(self.params)
        missing = set(kind.required) - keys
        extra = keys - set(kind.required) - set(kind.optional)
        if missing or extra:
            raise ValueError(f"parameter mismatch for {self.trial}: missing {sorted(missing)}, unknown {sorted(extra)}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        return cls(**data)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    success: bool
    metrics: dict


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple[TrialRecord, ...]
    wall_time: float = field(default=0.0, compare=False)

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def rate(self) -> float:
        return self.successes / len(self.records)

    @property
    def ci(self) -> tuple[float, float]:
        return wilson(self.successes, len(self.records))

    def aggregate(self) -> dict:
        lo, hi = self.ci
        return {"trials": len(self.records), "successes": self.successes, "rate": self.rate,
                "ci95": [lo, hi]}

    def to_json(self, timing: bool = False) -> dict:
        out = {"spec": self.spec.to_json(),
               "records": [asdict(r) for r in self.records],
               "aggregate": self.aggregate()}
        if timing:
            out["aggregate"]["wall_time"] = self.wall_time
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentResult":
        recs = tuple(TrialRecord(**r) for r in data["records"])
        return cls(ExperimentSpec.from_json(data["spec"]), recs, data["aggregate"].get("wall_time", 0.0))

    def to_csv(self) -> str:
        """One row per trial; cells are JSON literals and the spec rides in a comment line."""
        keys = sorted({k for r in self.records for k in r.metrics})
        buf = io.StringIO()
        buf.write("# spec: " + json.dumps(self.spec.to_json(), separators=(",", ":")) + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["trial", "seed", "success"] + keys)
        for r in self.records:
            wr.writerow([r.trial, r.seed, json.dumps(r.success)] + [json.dumps(r.metrics.get(k)) for k in keys])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentResult":
        first, rest = text.split("\n", 1)
        spec = ExperimentSpec.from_json(json.loads(first[len("# spec: "):]))
        rows = list(csv.reader(io.StringIO(rest)))
        keys = rows[0][3:]
        recs = []
        for row in rows[1:]:
            metrics = {k: json.loads(v) for k, v in zip(keys, row[3:])}
            recs.append(TrialRecord(int(row[0]), int(row[1]), json.loads(row[2]), metrics))
        return cls(spec, tuple(recs))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def run_trial(spec: ExperimentSpec, i: int) -> TrialRecord:
    kind = TRIALS[spec.trial]
    seed = trial_seed(spec.seed, i)
    params = dict(spec.params)
    if kind.per_index:
        params[kind.per_index] = i
    metrics = _jsonable(kind.fn(params, make_rng(seed)))
    return TrialRecord(i, seed, bool(PREDICATES[spec.predicate](metrics)), metrics)


def _run_chunk(args) -> list[TrialRecord]:
    spec, idx = args
    return [run_trial(spec, i) for i in idx]


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    t0 = time.perf_counter()
    if spec.workers <= 1:
        records = [run_trial(spec, i) for i in range(spec.trials)]
    else:
        chunks = [list(range(spec.trials))[j::spec.workers] for j in range(spec.workers)]
        with ProcessPoolExecutor(spec.workers) as ex:
            records = [r for part in ex.map(_run_chunk, [(spec, c) for c in chunks]) for r in part]
        records.sort(key=lambda r: r.trial)
    return ExperimentResult(spec, tuple(records), time.perf_counter() - t0)


def calibrate_constant(spec: ExperimentSpec, key: str = "const", lo: float = 0.25, hi: float = 64.0,
                       need: int = 9, steps: int = 7) -> tuple[float, float]:
    """Smallest constant reaching ``need`` successes over the spec's pilot trials, and its double.

    Bisection on a log scale assumes success is monotone in the constant.
    """
    def ok(x: float) -> bool:
        res = run_experiment(ExperimentSpec(spec.name, spec.trial, {**spec.params, key: x}, spec.trials,
                                            spec.seed, spec.predicate, spec.workers))
        return res.successes >= need

    if not ok(hi):
        raise RuntimeError(f"pilot fails even at {key}={hi}")
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    found = math.ceil(hi * 1000) / 1000
    return found, 2 * found
