from __future__ import annotations

import json
from pathlib import Path

import pytest

from planrecog.bench.buc import GOAL_NAMES, gen_buc, write_buc
from planrecog.bench.cv import make_cv_plan
from planrecog.bench.dataset import (
    DatasetManifest,
    ManifestError,
    ProblemEntry,
    load_manifest,
    save_manifest,
    sequence_stats,
)
from planrecog.bench.experiment import ExperimentConfig, run_experiment, write_report
from planrecog.bench.logistics import gen_logistics, write_logistics
from planrecog.bench.metrics import LAMBDA_PERCENTS, accuracy, eval_index, lambda_values, percent_of
from planrecog.bench.sampling import sample_to_dir
from planrecog.hybrid import parse_schedule
from planrecog.io import GoalSpec, load_setup, parse_observations, read_observations, save_goals
from planrecog.model import execute, satisfies
from planrecog.planner import SearchBudget
from planrecog.prap import GoalPosterior, ObservationError, RecognitionConfig

from conftest import CORRIDOR_DOMAIN, corridor_problem_text

# --- metrics ----------------------------------------------------------------


def test_lambda_grid():
    assert LAMBDA_PERCENTS[:5] == (1, 2, 3, 4, 5)
    assert LAMBDA_PERCENTS[5:] == tuple(range(10, 100, 5))
    assert len(lambda_values()) == 23
    assert percent_of(0.35) == 35
    with pytest.raises(ValueError):
        percent_of(0.333)


def test_eval_index_floor():
    assert eval_index(7, 50) == 3
    assert eval_index(10, 95) == 9
    assert eval_index(0, 50) == 0


def _series(probs_at_half, length=4):
    flat = GoalPosterior((0.5, 0.5))
    return [flat] * (length // 2) + [GoalPosterior(probs_at_half)] + [flat] * (length - length // 2)


def test_tie_with_true_goal_scores_zero():
    assert accuracy([_series((0.5, 0.5))], [0], 0.5) == 0.0


def test_accuracy_three_of_four():
    series = [_series((0.9, 0.1)), _series((0.8, 0.2)), _series((0.6, 0.4)), _series((0.3, 0.7))]
    assert accuracy(series, [0, 0, 0, 0], 0.5) == 0.75


def test_accuracy_all_correct():
    assert accuracy([_series((0.9, 0.1))] * 3, [0, 0, 0], 0.5) == 1.0


# --- cross-validation -------------------------------------------------------


def test_cv_even_split():
    plan = make_cv_plan(12, 3, seed=0)
    assert plan.k == 4
    assert all(not f.padding and len(f.validation) == 9 for f in plan.folds)
    assert sorted(i for f in plan.folds for i in f.members) == list(range(12))


def test_cv_padded_fold():
    plan = make_cv_plan(10, 3, seed=5)
    assert plan.k == 3
    padded = [f for f in plan.folds if f.padding]
    assert len(padded) == 1
    f = padded[0]
    assert len(f.members) == 1 and len(f.training) == 3
    assert not set(f.training) & set(f.validation)
    others = {i for g in plan.folds if g is not f for i in g.members}
    assert set(f.padding) <= others


def test_cv_single_partition_with_remainder():
    plan = make_cv_plan(5, 3, seed=1)
    assert plan.k == 1 and len(plan.folds[0].training) == 3


def test_cv_no_validation_data():
    with pytest.raises(ValueError):
        make_cv_plan(4, 4, seed=0)
    with pytest.raises(ValueError):
        make_cv_plan(2, 3, seed=0)


def test_cv_deterministic():
    assert make_cv_plan(30, 5, seed=9) == make_cv_plan(30, 5, seed=9)


# --- io ---------------------------------------------------------------------


def test_observation_file_parsing(tmp_path):
    setup_dir = write_corridor(tmp_path)
    setup = load_setup(setup_dir / "domain.pddl", setup_dir / "problem.pddl", setup_dir / "goals.json")
    obs = parse_observations("# header\n(step c1 c2)\n\n(step c2 c3)  # trailing\n", setup.problem)
    assert len(obs) == 2
    with pytest.raises(ObservationError):
        parse_observations("(step c1 c9)\n", setup.problem)


def test_goal_spec_round_trip(tmp_path):
    spec = GoalSpec(("a", "b"), (("(at c2)",), ("(at c3)",)), ((), ("(at c1)",)), (0.25, 0.75))
    save_goals(tmp_path / "g.json", spec)
    data = json.loads((tmp_path / "g.json").read_text())
    assert GoalSpec.from_dict(data) == spec
    assert GoalSpec.from_dict({"goals": [{"positive": ["( AT  c2 )"]}]}).positive == (("(at c2)",),)


# --- generators -------------------------------------------------------------


def test_buc_contract(tmp_path):
    bench = gen_buc()
    assert len(bench.obs_e1) == 34 and len(bench.obs_e2) == 6
    assert bench.obs_e1[-6:] == bench.obs_e2
    paths = write_buc(tmp_path)
    setup = load_setup(paths["domain"], paths["problem"], paths["goals"])
    assert setup.goal_names == GOAL_NAMES and len(setup.goals) == 4
    e2 = read_observations(paths["obs_e2"], setup.problem)
    execute(setup.problem, e2.actions)
    e1 = read_observations(paths["obs_e1"], setup.problem)
    assert len(e1) == 34


def test_logistics_generator(tmp_path):
    a = gen_logistics(10, seed=4)
    b = gen_logistics(10, seed=4)
    assert a == b
    assert a != gen_logistics(10, seed=5)
    paths = write_logistics(tmp_path, 10, seed=4)
    setup = load_setup(paths["domain"], paths["problem"], paths["goals"])
    assert len(setup.goals) == 10
    assert 300 <= len(setup.problem.actions) <= 410
    assert len({g for g in setup.goals}) == 10
    assert not any(satisfies(setup.problem.init, g) for g in setup.goals)


# --- dataset / experiment ---------------------------------------------------


def write_corridor(root: Path) -> Path:
    d = root / "corridor"
    d.mkdir(exist_ok=True)
    (d / "domain.pddl").write_text(CORRIDOR_DOMAIN)
    (d / "problem.pddl").write_text(corridor_problem_text(8))
    spec = GoalSpec(("near", "mid", "far"), (("(at c3)",), ("(at c5)",), ("(at c8)",)), ((), (), ()))
    save_goals(d / "goals.json", spec)
    return d


@pytest.fixture(scope="module")
def corridor_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    d = write_corridor(root)
    manifest = sample_to_dir(
        d / "domain.pddl", d / "problem.pddl", root / "data", goals_path=d / "goals.json",
        goal_indices=(0, 1, 2), p=0.7, seed=3, count=4,
    )
    return manifest


def test_manifest_contents(corridor_dataset):
    m = load_manifest(corridor_dataset)
    m.validate()
    assert len(m.problems) == 12
    assert [p.id for p in m.problems][:4] == ["seq_0_3_0", "seq_0_3_1", "seq_0_3_2", "seq_0_3_3"]
    stats = sequence_stats(m, goal_count=4)
    assert stats[3] is None
    assert stats[0]["count"] == 4 and stats[2]["mean"] >= 7


def test_sequence_stats_examples(tmp_path):
    (tmp_path / "d.pddl").write_text("")
    for name, n in (("a", 5), ("b", 4), ("c", 6)):
        (tmp_path / f"{name}.txt").write_text("(x)\n" * n)
    one = DatasetManifest("d.pddl", [ProblemEntry("a", "p", "g", 0, "a.txt")], base_dir=tmp_path)
    assert sequence_stats(one)[0] == {"count": 1, "mean": 5.0, "median": 5.0, "stddev": 0.0}
    two = DatasetManifest("d.pddl", [ProblemEntry("b", "p", "g", 1, "b.txt"), ProblemEntry("c", "p", "g", 1, "c.txt")], base_dir=tmp_path)
    assert sequence_stats(two)[1]["mean"] == 5.0


def test_manifest_errors(tmp_path):
    (tmp_path / "m.json").write_text('{"version": 7}')
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "m.json")
    save_manifest(tmp_path / "m2.json", DatasetManifest("missing.pddl", base_dir=tmp_path))
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "m2.json").validate()


def _config(manifest, **kw):
    rec = RecognitionConfig(mode="optimal", budget=SearchBudget(10.0))
    kw.setdefault("recognition", rec)
    return ExperimentConfig(manifest=Path(manifest), **kw)


def test_experiment_deterministic(corridor_dataset, tmp_path):
    cfg = _config(corridor_dataset, methods=("gm", "nbm", "ws", "tb"), n_values=(1, 3), seed=2)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.to_csv() == b.to_csv()
    assert not a.errors
    write_report(a, tmp_path / "r.csv", tmp_path / "r.json")
    assert (tmp_path / "r.csv").read_text() == a.to_csv()
    header, *rows = a.to_csv().splitlines()
    assert header == "method,n,lambda,accuracy,fold_count"
    assert len(rows) == 4 * 2 * 23


def test_nbm_only_run_never_plans(corridor_dataset):
    report = run_experiment(_config(corridor_dataset, methods=("nbm",), n_values=(3,)))
    assert sum(report.planner_calls.values()) == 0


def test_ws_with_zero_weight_reproduces_gm(corridor_dataset):
    report = run_experiment(_config(corridor_dataset, methods=("gm", "ws"), n_values=(3,), schedule=parse_schedule("fixed:0")))
    assert report.lookup("ws", 3) == report.lookup("gm", 3)


def test_gm_learns_something(corridor_dataset):
    report = run_experiment(_config(corridor_dataset, methods=("gm",), n_values=(1,)))
    acc = report.lookup("gm", 1)
    assert acc[95] > acc[1]


def test_config_rejects_unknown_method(corridor_dataset):
    with pytest.raises(ValueError):
        _config(corridor_dataset, methods=("svm",))
