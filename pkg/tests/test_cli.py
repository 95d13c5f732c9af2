import json

import pytest

from occlusion.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_generate_check_learn_infer(tmp_path, capsys):
    objs = tmp_path / "objs.json"
    imgs = tmp_path / "imgs.json"
    code, _ = run(capsys, "--seed", "4", "--out", str(objs), "gen-objects", "--m", "3", "--s-min", "10",
                  "--s", "10", "--c", "4", "--w", "4")
    assert code == 0
    assert run(capsys, "check-structure", "--objects", str(objs), "--w", "4")[0] == 0
    assert run(capsys, "check-structure", "--objects", str(objs), "--w", "1")[0] == 1
    code, _ = run(capsys, "gen-images", "--objects", str(objs), "--n", "40", "--d", "100", "--k", "2",
                  "--markers", "--seed", "5", "--out", str(imgs))
    assert code == 0
    data = json.loads(imgs.read_text())
    (tmp_path / "list.json").write_text(json.dumps(data["images"]))
    code, out = run(capsys, "learn", "--mode", "markers", "--samples", str(tmp_path / "list.json"),
                    "--w", "4", "--L", "8")
    assert code == 0
    learned = {tuple(o["pixels"]) for o in json.loads(out)["objects"]}
    truth = {tuple(o["pixels"]) for o in json.loads(objs.read_text())["objects"]}
    assert learned == truth


def test_infer_dp_infeasible_exit(tmp_path, capsys):
    (tmp_path / "o.json").write_text(json.dumps([[0, 1, 1]]))
    (tmp_path / "i.json").write_text(json.dumps([1, 1, -1, -1]))
    base = ["infer", "--algo", "dp", "--objects", str(tmp_path / "o.json"), "--image", str(tmp_path / "i.json")]
    code, out = run(capsys, *base)
    assert code == 0 and json.loads(out)["object_count"] == 1
    assert run(capsys, *base, "--room", "closed")[0] == 1
    assert run(capsys, "infer", "--algo", "greedy", "--objects", str(tmp_path / "o.json"),
               "--image", str(tmp_path / "i.json"))[0] == 2


def test_reduce_and_verify(tmp_path, capsys):
    ss = tmp_path / "ss.json"
    ss.write_text(json.dumps({"n": 2, "clauses": [[0, 1]]}))
    inst = tmp_path / "inst.json"
    assert run(capsys, "--out", str(inst), "reduce", "--ss", str(ss))[0] == 0
    good = [[1, 0, 2], [3, 0, 1], [1, 0, 3], [2, 0, 1], [4]]
    bad = [[1, 0, 2], [3, 0, 1], [1, 0, 2], [3, 0, 1], [4]]
    (tmp_path / "g.json").write_text(json.dumps(good))
    (tmp_path / "b.json").write_text(json.dumps(bad))
    code, out = run(capsys, "verify-ol", "--instance", str(inst), "--objects", str(tmp_path / "g.json"))
    assert code == 0 and json.loads(out)["accepted"]
    assert run(capsys, "verify-ol", "--instance", str(inst), "--objects", str(tmp_path / "b.json"))[0] == 1


def test_experiment_exit_codes(tmp_path, capsys):
    spec = {"name": "t", "trial": "ws-random", "params": {"m": 2, "s": 12, "c": 4, "w": 6}, "trials": 4,
            "seed": 1, "predicate": "ws-holds@1"}
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(spec))
    code, out = run(capsys, "experiment", "--spec", str(p))
    assert code == 0
    rerun = tmp_path / "res.json"
    rerun.write_text(out)
    assert run(capsys, "experiment", "--spec", str(rerun))[1] == out
    assert run(capsys, "experiment", "--spec", str(p), "--trials", "0")[0] == 2
    assert run(capsys, "experiment", "--spec", str(p), "--format", "csv")[1].startswith("# spec:")
    spec["params"]["w"] = 20
    p.write_text(json.dumps(spec))
    assert run(capsys, "experiment", "--spec", str(p), "--min-rate", "0.5")[0] == 1


def test_bad_input_exit_codes(tmp_path, capsys):
    assert run(capsys, "check-structure", "--objects", str(tmp_path / "missing.json"), "--w", "2")[0] == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert run(capsys, "check-structure", "--objects", str(tmp_path / "junk.json"), "--w", "2")[0] == 2
    assert run(capsys, "fixture", "--kind", "exact_match_family", "--d", "64", "--w", "8")[0] == 2
    with pytest.raises(SystemExit):
        main(["nope"])


def test_corrupt_and_fixture(tmp_path, capsys):
    (tmp_path / "i.json").write_text(json.dumps(list(range(4)) * 5))
    code, out = run(capsys, "--seed", "2", "corrupt", "--image", str(tmp_path / "i.json"), "--alpha", "1/5",
                    "--window", "5", "--c", "4")
    assert code == 0 and json.loads(out)["plan"]["alpha"] == "1/5"
    code, out = run(capsys, "fixture", "--kind", "dp_noise", "--d", "40", "--check")
    assert code == 0 and json.loads(out)["check"]["ok"]
