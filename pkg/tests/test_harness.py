import json
from fractions import Fraction

import numpy as np
import pytest

from occlusion import harness as hs
from occlusion.constants import PRESETS, preset
from occlusion.harness import (
    ExperimentResult, ExperimentSpec, TrialKind, calibrate_constant, fixture_metrics, make_breaker_fixture,
    run_experiment, trial_seed, wilson,
)
from occlusion.model import make_rng


def small_spec(**kw):
    base = dict(name="t", trial="ws-random", params={"m": 2, "s": 12, "c": 4, "w": 6}, trials=8, seed=5,
                predicate="ws-holds@1")
    base.update(kw)
    return ExperimentSpec(**base)


def test_trial_seed_stable_and_distinct():
    seeds = [trial_seed(7, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [trial_seed(7, i) for i in range(100)]
    assert trial_seed(7, 0) != trial_seed(8, 0)
    assert np.array_equal(make_rng(seeds[3]).integers(0, 9, 5), make_rng(seeds[3]).integers(0, 9, 5))


def test_wilson_reference_values():
    lo, hi = wilson(9, 10)
    assert (round(lo, 4), round(hi, 4)) == (0.5958, 0.9821)
    lo, hi = wilson(0, 10)
    assert lo == 0.0 and round(hi, 4) == 0.2775
    assert wilson(0, 0) == (0.0, 1.0)


def test_rerun_is_bit_identical():
    a = run_experiment(small_spec())
    b = run_experiment(small_spec())
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert "wall_time" not in a.to_json()["aggregate"] and "wall_time" in a.to_json(timing=True)["aggregate"]


def test_workers_match_serial():
    a = run_experiment(small_spec(trials=6))
    b = run_experiment(small_spec(trials=6, workers=2))
    assert a.records == b.records


def test_bad_specs_rejected():
    with pytest.raises(ValueError, match="trials"):
        run_experiment(small_spec(trials=0))
    with pytest.raises(ValueError, match="predicate"):
        run_experiment(small_spec(predicate="nope@1"))
    with pytest.raises(ValueError, match="trial kind"):
        run_experiment(small_spec(trial="nope"))
    with pytest.raises(ValueError, match="mismatch"):
        run_experiment(small_spec(params={"m": 2, "s": 12, "c": 4}))
    with pytest.raises(ValueError, match="mismatch"):
        run_experiment(small_spec(params={"m": 2, "s": 12, "c": 4, "w": 6, "zz": 1}))


def test_json_and_csv_roundtrip():
    res = run_experiment(small_spec())
    back = ExperimentResult.from_json(json.loads(json.dumps(res.to_json())))
    assert back == res
    text = res.to_csv()
    assert text.startswith("# spec: ")
    assert text.splitlines()[1].startswith("trial,seed,success,")
    assert ExperimentResult.from_csv(text) == res


def test_spec_roundtrip():
    spec = small_spec()
    assert ExperimentSpec.from_json(json.loads(json.dumps(spec.to_json()))) == spec


def test_presets_validate():
    for name in PRESETS:
        preset(name).validate()
    assert preset("view", trials=3).trials == 3
    with pytest.raises(KeyError):
        preset("nope")


def test_dp_noise_fixture():
    fx = make_breaker_fixture("dp_noise", 32)
    objs, img, plan = fx
    assert plan.flips == ((1, 0),) and plan.alpha == Fraction(1, 6) and plan.W == 6
    assert fx.clean.pixels[:8] == (2, 1, 0, 0, 0, 0, 1, 0)
    m = fixture_metrics(fx)
    assert m["clean_count"] == 1 and 2 * m["corrupted_count"] >= 32 and m["ok"]


def test_exact_family_fixture():
    fx = make_breaker_fixture("exact_match_family", 128, w=32, seed=1)
    m = fixture_metrics(fx)
    assert m["ok"]
    assert fx.plan.positions == {64}


def test_exact_family_rejects_boundary_flip():
    with pytest.raises(ValueError):
        make_breaker_fixture("exact_match_family", 128, w=32, flip=32)
    with pytest.raises(ValueError):
        make_breaker_fixture("exact_match_family", 64, w=32)
    with pytest.raises(ValueError):
        make_breaker_fixture("nope", 64)


def test_calibrate_finds_threshold(monkeypatch):
    toy = TrialKind(lambda p, rng: {"exact": p["const"] >= 3.0}, ("const",))
    monkeypatch.setitem(hs.TRIALS, "toy", toy)
    spec = ExperimentSpec("toy", "toy", {"const": 1.0}, 10, 0, "exact-recovery@1")
    found, doubled = calibrate_constant(spec, lo=1.0, hi=8.0, steps=12)
    assert 3.0 <= found <= 3.01 and doubled == 2 * found
    with pytest.raises(RuntimeError):
        calibrate_constant(spec, lo=0.5, hi=2.0)
