from __future__ import annotations

import heapq
import itertools

import numpy as np
import pytest

from planrecog.model import Fluent, GoalDescription, GroundAction, PlanningProblem, applicable, apply, make_state, satisfies
from planrecog.pddl import ground, parse_domain, parse_problem


def random_problem(rng: np.random.Generator, n_fluents: int = 8, n_actions: int = 12, cond_prob: float = 0.2) -> PlanningProblem:
    """Small random STRIPS problem; may or may not be solvable."""
    fluents = tuple(Fluent(i, f"(f{i})") for i in range(n_fluents))
    actions = []
    for k in range(n_actions):
        pre = frozenset(int(x) for x in rng.choice(n_fluents, size=rng.integers(0, 3), replace=False))
        add = frozenset(int(x) for x in rng.choice(n_fluents, size=rng.integers(1, 3), replace=False))
        dele = frozenset(int(x) for x in rng.choice(n_fluents, size=rng.integers(0, 3), replace=False)) - add
        cond = ()
        if rng.random() < cond_prob:
            p, q = (int(x) for x in rng.choice(n_fluents, size=2, replace=False))
            cond = ((p, q),)
        cost = float(rng.integers(1, 4))
        actions.append(GroundAction(k, f"(a{k})", pre, add, dele, cond, cost))
    init = make_state(int(x) for x in rng.choice(n_fluents, size=rng.integers(0, 3), replace=False))
    goal_f = [int(x) for x in rng.choice(n_fluents, size=rng.integers(1, 4), replace=False)]
    n_neg = int(rng.integers(0, 2))
    goal = GoalDescription(frozenset(goal_f[n_neg:]), frozenset(goal_f[:n_neg]))
    return PlanningProblem(fluents, tuple(actions), init, goal)


def dijkstra_cost(problem: PlanningProblem) -> float:
    """Exhaustive uniform-cost search over the explicit state graph."""
    dist = {problem.init: 0.0}
    heap = [(0.0, 0, problem.init)]
    tick = itertools.count(1)
    while heap:
        d, _, s = heapq.heappop(heap)
        if d > dist[s]:
            continue
        if satisfies(s, problem.goal):
            return d
        for a in problem.actions:
            if applicable(s, a):
                t = apply(s, a)
                nd = d + a.cost
                if nd < dist.get(t, float("inf")):
                    dist[t] = nd
                    heapq.heappush(heap, (nd, next(tick), t))
    return float("inf")


CORRIDOR_DOMAIN = """
(define (domain corridor)
  (:requirements :strips :typing)
  (:types cell)
  (:predicates (at ?c - cell) (adj ?a ?b - cell))
  (:action step
    :parameters (?from ?to - cell)
    :precondition (and (at ?from) (adj ?from ?to))
    :effect (and (at ?to) (not (at ?from)))))
"""


def corridor_problem_text(n: int = 10, goal_cell: int | None = None) -> str:
    cells = " ".join(f"c{i}" for i in range(1, n + 1))
    adj = " ".join(f"(adj c{i} c{i + 1}) (adj c{i + 1} c{i})" for i in range(1, n))
    goal = goal_cell or n
    return f"""
(define (problem corridor-{n})
  (:domain corridor)
  (:objects {cells} - cell)
  (:init (at c1) {adj})
  (:goal (at c{goal})))
"""


def corridor(n: int = 10, goal_cell: int | None = None) -> PlanningProblem:
    dom = parse_domain(CORRIDOR_DOMAIN)
    return ground(dom, parse_problem(corridor_problem_text(n, goal_cell), domain=dom))


GRID_DOMAIN = """
(define (domain grid)
  (:requirements :strips)
  (:predicates (at ?x) (adj ?x ?y))
  (:action move
    :parameters (?x ?y)
    :precondition (and (at ?x) (adj ?x ?y))
    :effect (and (at ?y) (not (at ?x)))))
"""


def grid_problem_text(w: int = 5, h: int = 5) -> str:
    cells = [f"x{i}y{j}" for i in range(w) for j in range(h)]
    adj = []
    for i in range(w):
        for j in range(h):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < w and 0 <= b < h:
                    adj.append(f"(adj x{i}y{j} x{a}y{b})")
    return f"""
(define (problem grid)
  (:domain grid)
  (:objects {' '.join(cells)})
  (:init (at x0y0) {' '.join(adj)})
  (:goal (at x{w - 1}y{h - 1})))
"""


def grid(w: int = 5, h: int = 5) -> PlanningProblem:
    dom = parse_domain(GRID_DOMAIN)
    return ground(dom, parse_problem(grid_problem_text(w, h), domain=dom))


def toy(actions, n_fluents: int, init=(), pos=(), neg=()) -> PlanningProblem:
    """Build a problem from ``(name, pre, add, del[, cond])`` tuples."""
    acts = []
    for k, spec in enumerate(actions):
        name, pre, add, dele, *rest = spec
        cond = tuple(rest[0]) if rest else ()
        acts.append(GroundAction(k, name, frozenset(pre), frozenset(add), frozenset(dele), cond))
    fluents = tuple(Fluent(i, f"(f{i})") for i in range(n_fluents))
    return PlanningProblem(fluents, tuple(acts), make_state(init), GoalDescription(frozenset(pos), frozenset(neg)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed once at the end of the session
ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
