"""File formats: observation lists, goal sets and JSON output."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .model import GoalDescription, PlanningProblem
from .pddl import DEFAULT_MAX_ACTIONS, ground, load_domain, load_problem
from .prap import ObservationError, ObservationSequence

GOALS_VERSION = 1


def parse_observations(text: str, problem: PlanningProblem) -> ObservationSequence:
    """One grounded action name per line; blank lines and ``#`` comments are skipped."""
    index = problem.action_index
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line not in index:
            raise ObservationError(len(steps), f"line {lineno}: unknown action {line}")
        steps.append(index[line])
    return ObservationSequence(tuple(steps))


def read_observations(path, problem: PlanningProblem) -> ObservationSequence:
    return parse_observations(Path(path).read_text(encoding="utf-8"), problem)


def format_observations(problem: PlanningProblem, steps: Sequence[int], header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    lines += [problem.actions[a].name for a in steps]
    return "\n".join(lines) + "\n"


def write_observations(path, problem: PlanningProblem, steps, header: str | None = None) -> None:
    if isinstance(steps, ObservationSequence):
        steps = steps.actions
    Path(path).write_text(format_observations(problem, steps, header), encoding="utf-8")


@dataclass(frozen=True)
class GoalSpec:
    """Goal set as atom names, before grounding assigns fluent ids."""

    names: tuple[str, ...]
    positive: tuple[tuple[str, ...], ...]
    negative: tuple[tuple[str, ...], ...]
    priors: tuple[float, ...] | None = None

    def atoms(self) -> list[str]:
        seen = []
        for group in self.positive + self.negative:
            for a in group:
                if a not in seen:
                    seen.append(a)
        return seen

    def resolve(self, problem: PlanningProblem) -> tuple[GoalDescription, ...]:
        idx = problem.fluent_index
        out = []
        for name, pos, neg in zip(self.names, self.positive, self.negative):
            missing = [a for a in pos + neg if a not in idx]
            if missing:
                raise ValueError(f"goal {name}: atoms not in the grounded problem: {', '.join(missing)}")
            out.append(GoalDescription(frozenset(idx[a] for a in pos), frozenset(idx[a] for a in neg)))
        return tuple(out)

    def prior_values(self) -> tuple[float, ...]:
        if self.priors is None:
            return tuple([1.0 / len(self.names)] * len(self.names))
        return self.priors

    def to_dict(self) -> dict:
        out = {
            "version": GOALS_VERSION,
            "goals": [
                {"name": n, "positive": list(p), "negative": list(q)}
                for n, p, q in zip(self.names, self.positive, self.negative)
            ],
        }
        if self.priors is not None:
            out["priors"] = list(self.priors)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GoalSpec":
        if data.get("version", GOALS_VERSION) != GOALS_VERSION:
            raise ValueError(f"unsupported goals file version {data.get('version')!r}")
        goals = data.get("goals")
        if not goals:
            raise ValueError("goals file lists no goals")
        names, pos, neg = [], [], []
        for k, g in enumerate(goals):
            names.append(str(g.get("name", f"g{k + 1}")))
            pos.append(tuple(_norm(a) for a in g.get("positive", ())))
            neg.append(tuple(_norm(a) for a in g.get("negative", ())))
        priors = data.get("priors")
        if priors is not None:
            priors = tuple(float(p) for p in priors)
            if len(priors) != len(names):
                raise ValueError("one prior per goal is required")
        return cls(tuple(names), tuple(pos), tuple(neg), priors)


def _norm(atom: str) -> str:
    return "(" + " ".join(atom.strip().strip("()").lower().split()) + ")"


def load_goals(path) -> GoalSpec:
    return GoalSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_goals(path, spec: GoalSpec) -> None:
    write_json(path, spec.to_dict())


@dataclass(frozen=True)
class RecognitionSetup:
    problem: PlanningProblem
    goals: tuple[GoalDescription, ...]
    goal_names: tuple[str, ...]
    priors: tuple[float, ...]


def load_setup(domain_path, problem_path, goals_path, max_actions: int = DEFAULT_MAX_ACTIONS) -> RecognitionSetup:
    """Ground a problem template together with every goal atom of the goal set."""
    spec = load_goals(goals_path)
    dom = load_domain(domain_path)
    prob = load_problem(problem_path, dom)
    grounded = ground(dom, prob, max_actions=max_actions, extra_atoms=spec.atoms())
    grounded = grounded.with_goal(GoalDescription(frozenset(), frozenset()))
    return RecognitionSetup(grounded, spec.resolve(grounded), spec.names, spec.prior_values())


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")
