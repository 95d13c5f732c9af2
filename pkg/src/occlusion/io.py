"""JSON encodings of the package's data types."""
from __future__ import annotations

import json
from pathlib import Path

from .adversary import CorruptionPlan
from .structure import as_fraction
from .hardness import OLInstance, SSInstance, Triple
from .inference import Explanation
from .model import (
    UNKNOWN, BackgroundPixel, GroundTruth, Image, ObjectPixel, ObjectSet, Placement, Source,
)


def objectset_to_json(objs: ObjectSet) -> dict:
    return {"c": objs.c, "s_min": objs.s_min, "s": objs.s,
            "objects": [{"id": o.id, "pixels": list(o.pixels)} for o in objs]}


def objectset_from_json(data: dict) -> ObjectSet:
    objects = sorted(data["objects"], key=lambda o: o["id"])
    strings = [o["pixels"] for o in objects]
    return ObjectSet.from_pixels(strings, c=data.get("c"), s_min=data.get("s_min"), s=data.get("s"))


def image_to_json(img: Image) -> dict:
    return {"d": img.d, "pixels": list(img.pixels)}


def image_from_json(data) -> Image:
    pixels = data["pixels"] if isinstance(data, dict) else data
    img = Image(tuple(int(p) for p in pixels))
    if isinstance(data, dict) and "d" in data and data["d"] != img.d:
        raise ValueError(f"image declares d={data['d']} but has {img.d} pixels")
    return img


def source_to_json(src: Source):
    if isinstance(src, ObjectPixel):
        return {"obj": [src.object_id, src.index]}
    if isinstance(src, BackgroundPixel):
        return {"bg": src.index}
    return "unknown"


def source_from_json(data) -> Source:
    if data == "unknown":
        return UNKNOWN
    if "obj" in data:
        return ObjectPixel(int(data["obj"][0]), int(data["obj"][1]))
    return BackgroundPixel(int(data["bg"]))


def placement_to_json(p: Placement) -> dict:
    return {"object_id": p.object_id, "left": p.left, "depth": p.depth}


def placement_from_json(data: dict) -> Placement:
    return Placement(int(data["object_id"]), int(data["left"]), int(data["depth"]))


def groundtruth_to_json(gt: GroundTruth) -> dict:
    return {"placements": [placement_to_json(p) for p in gt.placements],
            "explanation": [source_to_json(s) for s in gt.explanation]}


def explanation_to_json(ex: Explanation) -> dict:
    out = {"explanation": [source_to_json(s) for s in ex.sources]}
    if ex.object_count is not None:
        out["object_count"] = ex.object_count
    if ex.corrected is not None:
        out["corrected"] = [list(x) for x in ex.corrected]
    return out


def explanation_from_json(data: dict) -> Explanation:
    corrected = data.get("corrected")
    return Explanation(
        tuple(source_from_json(s) for s in data["explanation"]),
        data.get("object_count"),
        None if corrected is None else tuple((int(i), int(c)) for i, c in corrected),
    )


def plan_to_json(plan: CorruptionPlan) -> dict:
    return plan.to_json()


def plan_from_json(data: dict) -> CorruptionPlan:
    return CorruptionPlan(tuple((int(i), int(c)) for i, c in data["flips"]), as_fraction(data["alpha"]), int(data["W"]))


def ss_from_json(data: dict) -> SSInstance:
    return SSInstance(int(data["n"]), tuple(tuple(c) for c in data["clauses"]))


def ss_to_json(ss: SSInstance) -> dict:
    return {"n": ss.n, "clauses": [list(c) for c in ss.clauses]}


def olinstance_to_json(inst: OLInstance) -> dict:
    return {
        "alphabet": list(inst.alphabet),
        "background_color": inst.background_color,
        "object_budget": inst.n_obj,
        "D": inst.D,
        "triples": [{"image": list(t.image), "l1": t.l1, "l2": t.l2, "kind": t.kind} for t in inst.triples],
        **({"source": inst.meta} if inst.meta else {}),
    }


def olinstance_from_json(data: dict) -> OLInstance:
    triples = tuple(Triple(tuple(t["image"]), int(t["l1"]), int(t["l2"]), t.get("kind", ""))
                    for t in data["triples"])
    return OLInstance(int(data["object_budget"]), triples, int(data["D"]),
                      int(data["background_color"]), tuple(data["alphabet"]), data.get("source", {}))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_json(data, path=None) -> str:
    text = json.dumps(data, indent=None, separators=(",", ":"), sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
