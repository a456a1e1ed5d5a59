from __future__ import annotations

import json
import subprocess
import sys

import pytest

from planrecog.cli import main
from planrecog.io import GoalSpec, save_goals

from conftest import CORRIDOR_DOMAIN, corridor_problem_text


@pytest.fixture
def hall(tmp_path):
    (tmp_path / "domain.pddl").write_text(CORRIDOR_DOMAIN)
    (tmp_path / "problem.pddl").write_text(corridor_problem_text(6))
    save_goals(tmp_path / "goals.json", GoalSpec(("left", "right"), (("(at c2)",), ("(at c6)",)), ((), ())))
    (tmp_path / "obs.txt").write_text("(step c1 c2)\n(step c2 c3)\n")
    return tmp_path


def test_help_exits_zero():
    with pytest.raises(SystemExit) as err:
        main(["plan", "--help"])
    assert err.value.code == 0


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as err:
        main(["plan", "--frobnicate"])
    assert err.value.code == 2


def test_console_script_usage_error():
    proc = subprocess.run([sys.executable, "-m", "planrecog.cli", "eval"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage:" in proc.stderr


def test_plan_prints_steps_and_cost(hall, capsys):
    assert main(["plan", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "(step c1 c2)"
    assert out[-1] == "; cost = 5"


def test_plan_parse_error_exit_one(hall, capsys):
    (hall / "bad.pddl").write_text("(define (problem p)\n  (:domain corridor)\n  (:init (at")
    assert main(["plan", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "bad.pddl")]) == 1
    assert "bad.pddl:" in capsys.readouterr().err


def test_missing_file_is_usage_error(hall):
    assert main(["plan", "--domain", str(hall / "nope.pddl"), "--problem", str(hall / "problem.pddl")]) == 2


def _recognize(hall, *extra):
    return [
        "recognize", "--domain", str(hall / "domain.pddl"), "--problem-template", str(hall / "problem.pddl"),
        "--goals", str(hall / "goals.json"), "--obs", str(hall / "obs.txt"), "--mode", "optimal", *extra,
    ]


@pytest.mark.parametrize("method", ["rg", "gm"])
def test_recognize_writes_trace(hall, method):
    assert main(_recognize(hall, "--method", method, "--out", str(hall / "t.json"))) == 0
    trace = json.loads((hall / "t.json").read_text())
    assert trace["method"] == method and trace["goals"] == ["left", "right"]
    assert len(trace["steps"]) == 3
    last = trace["steps"][-1]["probabilities"]
    assert last["right"] > last["left"]
    assert "elapsed" not in trace["steps"][-1]


def test_recognize_is_byte_stable(hall):
    main(_recognize(hall, "--method", "gm", "--out", str(hall / "a.json")))
    main(_recognize(hall, "--method", "gm", "--out", str(hall / "b.json")))
    assert (hall / "a.json").read_bytes() == (hall / "b.json").read_bytes()


def test_recognize_unsolvable_goal_set(hall, capsys):
    cells = tuple(f"(at c{i})" for i in range(1, 7))
    save_goals(hall / "goals.json", GoalSpec(("nowhere", "void"), ((), ()), (cells, cells)))
    assert main(_recognize(hall, "--method", "gm", "--out", str(hall / "t.json"))) == 1
    err = capsys.readouterr().err
    assert "goal nowhere:" in err and "goal void:" in err


def test_recognize_hybrid_needs_model(hall):
    assert main(_recognize(hall, "--method", "ws")) == 2


def test_train_sample_and_hybrid(hall, tmp_path):
    data = tmp_path / "data"
    assert main([
        "sample", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl"),
        "--goals", str(hall / "goals.json"), "--goal-index", "all", "--p", "0.8", "--seed", "1",
        "--count", "3", "--out-dir", str(data),
    ]) == 0
    manifest = json.loads((data / "manifest.json").read_text())
    assert len(manifest["problems"]) == 6
    assert main(["train-nbm", "--dataset", str(data / "manifest.json"), "--out", str(tmp_path / "m.json")]) == 0
    for method in ("nbm", "ws", "tb"):
        out = tmp_path / f"{method}.json"
        assert main(_recognize(hall, "--method", method, "--nbm-model", str(tmp_path / "m.json"), "--out", str(out))) == 0
        steps = json.loads(out.read_text())["steps"]
        assert sum(steps[-1]["probabilities"].values()) == pytest.approx(1.0)
    ws = json.loads((tmp_path / "ws.json").read_text())
    assert ws["prap_base"] == "gm" and "nbm_probabilities" in ws["steps"][0]


def test_sample_without_goal_file(hall, tmp_path):
    out = tmp_path / "s"
    assert main(["sample", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl"),
                 "--out-dir", str(out), "--count", "2"]) == 0
    assert (out / "goals.json").exists() and (out / "seq_0_0_1.txt").exists()


def test_sample_truncated_exit_one(hall, tmp_path):
    assert main(["sample", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl"),
                 "--out-dir", str(tmp_path / "s"), "--max-length", "2"]) == 1


def test_sample_bad_probability(hall, tmp_path):
    assert main(["sample", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl"),
                 "--out-dir", str(tmp_path / "s"), "--p", "1.5"]) == 2


def test_gen_domain_and_eval(tmp_path):
    assert main(["gen-domain", "buc", "--out-dir", str(tmp_path / "buc")]) == 0
    assert (tmp_path / "buc" / "obs_e1.txt").exists()
    assert main(["gen-domain", "logistics", "--goals", "4", "--seed", "2", "--out-dir", str(tmp_path / "lg")]) == 0
    goals = json.loads((tmp_path / "lg" / "goals.json").read_text())
    assert len(goals["goals"]) == 4


def test_eval_cli(hall, tmp_path):
    data = tmp_path / "data"
    main(["sample", "--domain", str(hall / "domain.pddl"), "--problem", str(hall / "problem.pddl"),
          "--goals", str(hall / "goals.json"), "--goal-index", "0,1", "--p", "0.8", "--count", "3",
          "--out-dir", str(data)])
    args = ["eval", "--manifest", str(data / "manifest.json"), "--methods", "gm,nbm,ws", "--n", "1,2",
            "--mode", "optimal", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a.csv"), "--report-json", str(tmp_path / "a.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text())["cells"]
    assert main(["eval", "--manifest", str(data / "manifest.json"), "--methods", "svm", "--out", str(tmp_path / "c.csv")]) == 2
