"""Reconstructed beer use-case (BUC) household benchmark.

A flat with a living room, kitchen, hallway, bathroom and bedroom laid out
on cell grids.  Movement is 8-connected inside a room; rooms connect only
through single door pairs.  The agent starts seated on the couch.

E1 is two beer runs (14 actions each) followed by a 6-action walk to the
toilet; E2 is only that final walk.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..io import GoalSpec, write_json
from ..nbm import NaiveBayesModel, serialize
from ..pddl import ground, parse_domain, parse_problem

# (prefix, rows, cols)
ROOMS = {
    "living": ("lv", 3, 3),
    "kitchen": ("kt", 3, 3),
    "hallway": ("hw", 1, 3),
    "bathroom": ("ba", 2, 2),
    "bedroom": ("br", 3, 3),
}
DOORS = [
    ("lv-3-3", "kt-3-1"),
    ("kt-3-1", "hw-1-1"),
    ("hw-1-1", "ba-1-1"),
    ("hw-1-3", "br-1-1"),
]
COUCH = "lv-3-3"
FRIDGE = "kt-1-3"
STOVE = "kt-1-1"
SHOWER = "ba-1-2"
TOILET = "ba-2-1"
BEERS = ("beer1", "beer2")

GOAL_NAMES = ("prepare_meal", "watch_tv", "use_shower", "use_toilet")
GOAL_ATOMS = (
    ("(meal-prepared)", f"(at {STOVE})"),
    ("(watched-tv)", "(sitting)"),
    ("(showered)", f"(at {SHOWER})"),
    ("(used-toilet)", f"(at {TOILET})"),
)

DOMAIN = """\
; reconstructed household domain for the beer use-case
(define (domain buc)
  (:requirements :strips :typing)
  (:types cell bottle)
  (:predicates
    (at ?c - cell) (adjacent ?a ?b - cell)
    (couch ?c - cell) (fridge ?c - cell) (stove ?c - cell) (shower ?c - cell) (toilet ?c - cell)
    (sitting) (standing) (hands-free) (fridge-open) (fridge-closed)
    (in-fridge ?b - bottle) (holding ?b - bottle) (sealed ?b - bottle) (opened ?b - bottle)
    (drunk ?b - bottle) (put-down ?b - bottle)
    (meal-prepared) (watched-tv) (showered) (used-toilet))

  (:action move
    :parameters (?from ?to - cell)
    :precondition (and (at ?from) (adjacent ?from ?to) (standing))
    :effect (and (at ?to) (not (at ?from))))

  (:action sit-down
    :parameters (?c - cell)
    :precondition (and (at ?c) (couch ?c) (standing))
    :effect (and (sitting) (not (standing))))

  (:action get-up
    :parameters (?c - cell)
    :precondition (and (at ?c) (couch ?c) (sitting))
    :effect (and (standing) (not (sitting))))

  (:action watch-tv
    :parameters (?c - cell)
    :precondition (and (at ?c) (couch ?c) (sitting))
    :effect (watched-tv))

  (:action open-fridge
    :parameters (?c - cell)
    :precondition (and (at ?c) (fridge ?c) (standing) (fridge-closed))
    :effect (and (fridge-open) (not (fridge-closed))))

  (:action close-fridge
    :parameters (?c - cell)
    :precondition (and (at ?c) (fridge ?c) (fridge-open))
    :effect (and (fridge-closed) (not (fridge-open))))

  (:action take-beer
    :parameters (?b - bottle ?c - cell)
    :precondition (and (at ?c) (fridge ?c) (fridge-open) (in-fridge ?b) (hands-free))
    :effect (and (holding ?b) (not (in-fridge ?b)) (not (hands-free))))

  (:action open-beer
    :parameters (?b - bottle)
    :precondition (and (holding ?b) (sealed ?b))
    :effect (and (opened ?b) (not (sealed ?b))))

  (:action drink-beer
    :parameters (?b - bottle)
    :precondition (and (holding ?b) (opened ?b))
    :effect (drunk ?b))

  (:action put-down-bottle
    :parameters (?b - bottle)
    :precondition (and (holding ?b) (drunk ?b))
    :effect (and (put-down ?b) (hands-free) (not (holding ?b))))

  (:action prepare-meal
    :parameters (?c - cell)
    :precondition (and (at ?c) (stove ?c) (standing))
    :effect (meal-prepared))

  (:action take-shower
    :parameters (?c - cell)
    :precondition (and (at ?c) (shower ?c) (standing))
    :effect (showered))

  (:action use-toilet
    :parameters (?c - cell)
    :precondition (and (at ?c) (toilet ?c) (standing))
    :effect (used-toilet))
)
"""


def cells() -> list[str]:
    out = []
    for prefix, rows, cols in ROOMS.values():
        out += [f"{prefix}-{r}-{c}" for r in range(1, rows + 1) for c in range(1, cols + 1)]
    return out


def adjacency() -> list[tuple[str, str]]:
    pairs = []
    for prefix, rows, cols in ROOMS.values():
        coords = [(r, c) for r in range(1, rows + 1) for c in range(1, cols + 1)]
        for (r1, c1), (r2, c2) in itertools.permutations(coords, 2):
            if max(abs(r1 - r2), abs(c1 - c2)) == 1:
                pairs.append((f"{prefix}-{r1}-{c1}", f"{prefix}-{r2}-{c2}"))
    for a, b in DOORS:
        pairs += [(a, b), (b, a)]
    return sorted(pairs)


def problem_text() -> str:
    facts = [f"(at {COUCH})", "(sitting)", "(hands-free)", "(fridge-closed)"]
    facts += [f"(couch {COUCH})", f"(fridge {FRIDGE})", f"(stove {STOVE})", f"(shower {SHOWER})", f"(toilet {TOILET})"]
    for b in BEERS:
        facts += [f"(in-fridge {b})", f"(sealed {b})"]
    facts += [f"(adjacent {a} {b})" for a, b in adjacency()]
    body = "\n    ".join(facts)
    return (
        "(define (problem buc-flat)\n"
        "  (:domain buc)\n"
        f"  (:objects {' '.join(cells())} - cell {' '.join(BEERS)} - bottle)\n"
        f"  (:init\n    {body})\n"
        "  (:goal (and))\n"
        ")\n"
    )


def beer_run(beer: str) -> list[str]:
    return [
        f"(get-up {COUCH})",
        f"(move {COUCH} kt-3-1)",
        "(move kt-3-1 kt-2-2)",
        f"(move kt-2-2 {FRIDGE})",
        f"(open-fridge {FRIDGE})",
        f"(take-beer {beer} {FRIDGE})",
        f"(close-fridge {FRIDGE})",
        f"(move {FRIDGE} kt-2-2)",
        "(move kt-2-2 kt-3-1)",
        f"(move kt-3-1 {COUCH})",
        f"(sit-down {COUCH})",
        f"(open-beer {beer})",
        f"(drink-beer {beer})",
        f"(put-down-bottle {beer})",
    ]


TOILET_WALK = [
    f"(get-up {COUCH})",
    f"(move {COUCH} kt-3-1)",
    "(move kt-3-1 hw-1-1)",
    "(move hw-1-1 ba-1-1)",
    f"(move ba-1-1 {TOILET})",
    f"(use-toilet {TOILET})",
]

# hand-set NBM parameters; every other fluent is 0.5 for all goals
NBM_SITTING = {"watch_tv": 0.95, "other": 0.05}
NBM_DRUNK = {"use_toilet": 0.9, "other": 0.3}


@dataclass(frozen=True)
class BucBenchmark:
    domain: str
    problem: str
    goals: GoalSpec
    obs_e1: tuple[str, ...]
    obs_e2: tuple[str, ...]
    nbm_fixture: NaiveBayesModel

    @property
    def prefix_length(self) -> int:
        return len(self.obs_e1) - len(self.obs_e2)


def goal_spec() -> GoalSpec:
    return GoalSpec(GOAL_NAMES, GOAL_ATOMS, ((),) * len(GOAL_NAMES), None)


def nbm_fixture(fluent_names) -> NaiveBayesModel:
    p = np.full((len(GOAL_NAMES), len(fluent_names)), 0.5)
    for j, name in enumerate(fluent_names):
        for i, g in enumerate(GOAL_NAMES):
            if name == "(sitting)":
                p[i, j] = NBM_SITTING.get(g, NBM_SITTING["other"])
            elif name.startswith("(drunk "):
                p[i, j] = NBM_DRUNK.get(g, NBM_DRUNK["other"])
    return NaiveBayesModel(p, alpha=1.0, class_counts=(0,) * len(GOAL_NAMES), goal_names=GOAL_NAMES, fluent_names=tuple(fluent_names))


def gen_buc() -> BucBenchmark:
    spec = goal_spec()
    prob = problem_text()
    dom_ast = parse_domain(DOMAIN, "buc-domain.pddl")
    grounded = ground(dom_ast, parse_problem(prob, "buc-problem.pddl", dom_ast), extra_atoms=spec.atoms())
    e2 = tuple(TOILET_WALK)
    e1 = tuple(beer_run(BEERS[0]) + beer_run(BEERS[1])) + e2
    fixture = nbm_fixture([f.name for f in grounded.fluents])
    return BucBenchmark(DOMAIN, prob, spec, e1, e2, fixture)


def write_buc(out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = gen_buc()
    paths = {
        "domain": out / "domain.pddl",
        "problem": out / "problem.pddl",
        "goals": out / "goals.json",
        "obs_e1": out / "obs_e1.txt",
        "obs_e2": out / "obs_e2.txt",
        "nbm": out / "nbm_fixture.json",
    }
    paths["domain"].write_text(b.domain, encoding="utf-8")
    paths["problem"].write_text(b.problem, encoding="utf-8")
    write_json(paths["goals"], b.goals.to_dict())
    paths["obs_e1"].write_text("\n".join(b.obs_e1) + "\n", encoding="utf-8")
    paths["obs_e2"].write_text("\n".join(b.obs_e2) + "\n", encoding="utf-8")
    paths["nbm"].write_bytes(serialize(b.nbm_fixture))
    return paths
