"""Command-line entry point: occlusion <subcommand> [options]."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import io as sio
from .adversary import STRATEGIES, corrupt
from .constants import PRESETS, preset
from .harness import ExperimentSpec, fixture_metrics, make_breaker_fixture, run_experiment
from .hardness import verify_ol
from .inference import dp_min_objects, greedy_infer, greedy_infer_noisy
from .learning import LearnParams, ParamError, learn_no_markers, recover_with_markers
from .model import DEPTH_MODELS, ROOMS, GenConfig, Image, ModelError, ObjectSet, generate_image, make_rng
from .structure import check_strong_ws, check_ws, gen_random_objects, gen_ws_objects

OK, PREDICATE_FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(args, data, rows=None) -> None:
    """Write JSON, or CSV rows when --format csv and the command has a tabular form."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        text = buf.getvalue()
    elif args.format == "csv" and isinstance(data, str):
        text = data
    else:
        text = json.dumps(data, separators=(",", ":")) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_objects(path) -> ObjectSet:
    data = sio.read_json(path)
    if isinstance(data, list):
        return ObjectSet.from_pixels(data)
    return sio.objectset_from_json(data)


def _load_images(path) -> list[Image]:
    data = sio.read_json(path)
    if isinstance(data, dict) and "images" in data:
        data = data["images"]
    if isinstance(data, dict) or (isinstance(data, list) and data and isinstance(data[0], int)):
        return [sio.image_from_json(data)]
    return [sio.image_from_json(x) for x in data]


def _load_background(path):
    return None if path is None else sio.image_from_json(sio.read_json(path)).pixels


# ----------------------------------------------------------------- commands

def cmd_gen_objects(args) -> int:
    rng = make_rng(args.seed)
    sizes = [int(x) for x in rng.integers(args.s_min, args.s + 1, size=args.m)]
    if args.w is None:
        objs = gen_random_objects(args.m, sizes, args.c, rng)
    else:
        objs = gen_ws_objects(args.m, sizes, args.c, args.w, rng, epsilon=args.epsilon)
    out = sio.objectset_to_json(objs)
    out["seed"] = args.seed
    _emit(args, out, [list(o.pixels) for o in objs])
    return OK


def cmd_gen_images(args) -> int:
    objs = _load_objects(args.objects)
    ordering = ()
    if args.forced_back:
        ordering = tuple((args.forced_back_id, j) for j in range(objs.m) if j != args.forced_back_id)
    elif args.ordering:
        ordering = tuple(tuple(x) for x in json.loads(args.ordering))
    cfg = GenConfig(k=args.k, room=args.room, depth_model=args.depth_model, ordering=ordering,
                    background=_load_background(args.background), markers=args.markers, seed=args.seed)
    rng = make_rng(args.seed)
    pairs = [generate_image(objs, cfg, args.d, rng) for _ in range(args.n)]
    out = {"seed": args.seed, "d": args.d, "k": args.k, "room": args.room, "depth_model": args.depth_model,
           "ordering": [list(x) for x in ordering], "markers": args.markers,
           "images": [sio.image_to_json(img) for img, _ in pairs],
           "truths": [sio.groundtruth_to_json(gt) for _, gt in pairs]}
    _emit(args, out, [list(img.pixels) for img, _ in pairs])
    return OK


def cmd_check_structure(args) -> int:
    objs = _load_objects(args.objects)
    bg = _load_background(args.background)
    rep = check_ws(objs, args.w, bg) if args.epsilon is None else check_strong_ws(objs, args.w, args.epsilon, bg)
    _emit(args, rep.to_json())
    return OK if rep.holds else PREDICATE_FAILED


def cmd_learn(args) -> int:
    images = _load_images(args.samples)
    if args.mode == "markers":
        L = args.L or 2 * args.w
        objs = recover_with_markers(images, L, args.w)
    else:
        if args.m is None or args.s is None:
            raise InputError("--m and --s are required for markerless learning")
        d = images[0].d
        if args.mode == "no-markers-2":
            p = LearnParams.two(args.w, args.m, d, args.s, len(images))
        else:
            if args.k is None:
                raise InputError("--k is required for no-markers-k")
            p = LearnParams.many(args.w, args.k, args.m, d, args.s, S=len(images))
        if args.L is not None or args.tau is not None:
            p = LearnParams(p.regime, args.w, args.L or p.L, Fraction(args.tau) if args.tau else p.tau,
                            p.k, p.m, p.d, p.s, p.S)
        objs = learn_no_markers(images, p)
    _emit(args, sio.objectset_to_json(objs), [list(o.pixels) for o in objs])
    return OK


def cmd_infer(args) -> int:
    objs = _load_objects(args.objects)
    images = _load_images(args.image)
    if not 0 <= args.index < len(images):
        raise InputError(f"image index {args.index} out of range")
    img = images[args.index]
    bg = _load_background(args.background)
    if args.algo == "dp":
        ex = dp_min_objects(img, objs, bg, args.room)
    elif args.algo == "greedy":
        ex = greedy_infer(img, objs, _need(args, "w"), _need(args, "k"), bg)
    else:
        ex = greedy_infer_noisy(img, objs, _need(args, "w"), _need(args, "epsilon"), _need(args, "alpha"),
                                _need(args, "window"), _need(args, "k"), bg)
    _emit(args, sio.explanation_to_json(ex))
    if args.algo == "dp" and ex.object_count is None:
        return PREDICATE_FAILED
    return OK


def _need(args, name):
    val = getattr(args, name)
    if val is None:
        raise InputError(f"--{name} is required for --algo {args.algo}")
    return val


def cmd_corrupt(args) -> int:
    img = _load_images(args.image)[0]
    out, plan = corrupt(img, args.alpha, args.window, make_rng(args.seed), args.strategy, c=args.c,
                        n_flips=args.n_flips, allow_background=args.allow_background)
    _emit(args, {"seed": args.seed, "image": sio.image_to_json(out), "plan": sio.plan_to_json(plan)},
          [["index", "color"]] + [list(f) for f in plan.flips])
    return OK


def cmd_reduce(args) -> int:
    from .hardness import reduce
    inst = reduce(sio.ss_from_json(sio.read_json(args.ss)))
    _emit(args, sio.olinstance_to_json(inst))
    return OK


def cmd_verify_ol(args) -> int:
    inst = sio.olinstance_from_json(sio.read_json(args.instance))
    data = sio.read_json(args.objects)
    strings = data if isinstance(data, list) else [o["pixels"] for o in data["objects"]]
    ok, wit = verify_ol(inst, strings, with_witness=True)
    _emit(args, {"accepted": ok, "witnesses": [{"triple": w.triple, "placements": [list(p) for p in w.placements]}
                                               for w in wit] if ok else []})
    return OK if ok else PREDICATE_FAILED


def cmd_experiment(args) -> int:
    if args.spec:
        data = sio.read_json(args.spec)
        spec = ExperimentSpec.from_json(data["spec"] if "spec" in data else data)
    elif args.preset:
        spec = preset(args.preset)
    else:
        raise InputError("give --spec FILE or --preset NAME")
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed_given:
        overrides["seed"] = args.seed
    if overrides:
        spec = ExperimentSpec(**{**spec.to_json(), **overrides})
    res = run_experiment(spec)
    _emit(args, res.to_csv() if args.format == "csv" else res.to_json(timing=args.timing))
    agg = res.aggregate()
    print(f"{spec.name}: {agg['successes']}/{agg['trials']} rate={agg['rate']:.4f} "
          f"ci95=[{agg['ci95'][0]:.4f}, {agg['ci95'][1]:.4f}] wall={res.wall_time:.1f}s", file=sys.stderr)
    return OK if res.rate >= args.min_rate else PREDICATE_FAILED


def cmd_fixture(args) -> int:
    fx = make_breaker_fixture(args.kind, args.d, args.w, args.flip, args.seed)
    out = {"kind": fx.kind, "objects": sio.objectset_to_json(fx.objects), "image": sio.image_to_json(fx.image),
           "clean": sio.image_to_json(fx.clean), "plan": sio.plan_to_json(fx.plan),
           "background": None if fx.background is None else list(fx.background), "meta": fx.meta}
    code = OK
    if args.check:
        out["check"] = fixture_metrics(fx)
        code = OK if out["check"]["ok"] else PREDICATE_FAILED
    _emit(args, out)
    return code


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base RNG seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="occlusion", description="Occluded-object toolkit")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("gen-objects", cmd_gen_objects, "sample random (optionally well-structured) objects")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--s-min", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--w", type=int, help="reject until w-well-structured")
    p.add_argument("--epsilon", type=Fraction, help="with --w, require the strong property")

    p = add("gen-images", cmd_gen_images, "sample images from an object set")
    p.add_argument("--objects", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--room", choices=ROOMS, default="open")
    p.add_argument("--depth-model", choices=DEPTH_MODELS, default="fully_random")
    p.add_argument("--ordering", help='JSON list of [behind, front] id pairs')
    p.add_argument("--forced-back", action="store_true", help="force one object behind all others")
    p.add_argument("--forced-back-id", type=int, default=0)
    p.add_argument("--background", help="Image JSON used as the background string")
    p.add_argument("--markers", action="store_true")

    p = add("check-structure", cmd_check_structure, "test (strong) w-well-structuredness")
    p.add_argument("--objects", required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--epsilon", type=Fraction)
    p.add_argument("--background")

    p = add("learn", cmd_learn, "recover objects from image samples")
    p.add_argument("--mode", choices=("markers", "no-markers-2", "no-markers-k"), required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--L", type=int)
    p.add_argument("--tau", type=str)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--s", type=int)

    p = add("infer", cmd_infer, "explain an image from known objects")
    p.add_argument("--algo", choices=("dp", "greedy", "greedy-noisy"), required=True)
    p.add_argument("--objects", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--index", type=int, default=0, help="image index when the file holds several")
    p.add_argument("--w", type=int)
    p.add_argument("--epsilon", type=Fraction)
    p.add_argument("--alpha", type=Fraction)
    p.add_argument("--window", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--room", choices=ROOMS, default="open")
    p.add_argument("--background")

    p = add("corrupt", cmd_corrupt, "apply a bounded adversarial corruption")
    p.add_argument("--image", required=True)
    p.add_argument("--alpha", type=Fraction, required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="uniform_random")
    p.add_argument("--c", type=int)
    p.add_argument("--n-flips", type=int)
    p.add_argument("--allow-background", action="store_true")

    p = add("reduce", cmd_reduce, "map a set-splitting instance to an object-learning instance")
    p.add_argument("--ss", required=True)

    p = add("verify-ol", cmd_verify_ol, "check a candidate object set against an OL instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--objects", required=True)

    p = add("experiment", cmd_experiment, "run a seeded experiment")
    p.add_argument("--spec", help="ExperimentSpec JSON (or a result file to rerun)")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--min-rate", type=float, default=1.0, help="exit 1 below this success rate")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON")

    p = add("fixture", cmd_fixture, "build an exact-match breaker fixture")
    p.add_argument("--kind", choices=("dp_noise", "exact_match_family"), required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--w", type=int, default=1)
    p.add_argument("--flip", type=int)
    p.add_argument("--check", action="store_true", help="also run the DP and noisy greedy checks")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except ParamError as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT
    except (InputError, ModelError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT
    except RuntimeError as e:
        # generators and enumerators give up on parameters they cannot satisfy
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
