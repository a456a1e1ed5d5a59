"""Forward state-space planners over :class:`PlanningProblem`.

Two modes are provided:

* :func:`plan_optimal` -- A* with the delete-relaxation max heuristic, which is
  admissible, so returned plans have minimum cost.
* :func:`plan_satisficing` -- greedy best-first search with the additive
  heuristic, deferred evaluation and preferred operators, followed by action
  elimination and (when ``anytime`` is set) a sequence of weighted A* passes
  that only keep strictly cheaper plans.

Before searching, actions that cannot contribute to the goal are removed by a
backward relevance analysis and states are projected onto the relevant
fluents.  Both steps preserve optimal cost (preconditions are positive, so
dropping actions that add nothing relevant never disables a kept action).

Open lists break ties on the g-value (deeper first for A*, shallower first for
greedy search), then on the rank of the generating action, then on insertion
order.  The rank is the action id unless a ``tie_seed`` is supplied.
"""
from __future__ import annotations

import enum
import math
import random
import time
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Sequence

from .model import GoalDescription, Plan, PlanningProblem, State, _progress, iter_bits, satisfies

INF = math.inf


@dataclass(frozen=True)
class SearchBudget:
    wall_time_limit: float | None = 30.0
    expansion_limit: int | None = None

    def __post_init__(self):
        if self.wall_time_limit is None and self.expansion_limit is None:
            raise ValueError("a search budget needs a time limit or an expansion limit")
        if self.wall_time_limit is not None and self.wall_time_limit < 0:
            raise ValueError("negative time limit")
        if self.expansion_limit is not None and self.expansion_limit < 0:
            raise ValueError("negative expansion limit")


class Status(str, enum.Enum):
    SOLVED = "solved"
    UNSOLVABLE = "unsolvable"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class PlanResult:
    status: Status
    plan: Plan | None
    expansions: int
    elapsed: float

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED

    @property
    def cost(self) -> float:
        return self.plan.cost if self.plan is not None else INF


@dataclass(frozen=True)
class Validation:
    valid: bool
    cost: float | None = None
    step: int | None = None
    reason: str = ""


def validate(problem: PlanningProblem, plan: Plan | Sequence[int]) -> Validation:
    steps = plan.steps if isinstance(plan, Plan) else tuple(plan)
    s = problem.init
    cost = 0.0
    for k, a in enumerate(steps):
        if not 0 <= a < len(problem.actions):
            return Validation(False, step=k, reason=f"unknown action id {a}")
        act = problem.actions[a]
        if s & act.pre_mask != act.pre_mask:
            missing = [problem.fluents[i].name for i in iter_bits(act.pre_mask & ~s)]
            return Validation(False, step=k, reason=f"{act.name} not applicable; missing {' '.join(missing)}")
        added = act.add_mask
        for p, q in act.cond_masks:
            if s & p:
                added |= q
        s = (s | added) & ~act.del_mask
        cost += act.cost
    if not satisfies(s, problem.goal):
        return Validation(False, step=len(steps), reason="final state does not satisfy the goal")
    if isinstance(plan, Plan) and not math.isclose(plan.cost, cost, rel_tol=1e-9, abs_tol=1e-9):
        return Validation(False, step=len(steps), reason=f"declared cost {plan.cost} != {cost}")
    return Validation(True, cost=cost)


def relevant_actions(problem: PlanningProblem, goal: GoalDescription | None = None) -> tuple[list[int], int]:
    """Backward relevance closure.

    Returns the relevant action ids and a mask of the fluents the search must
    track.  Fluents feeding positive goals only need to be over-approximated;
    fluents feeding negative goals must be reproduced exactly, so every action
    touching them is kept.
    """
    goal = problem.goal if goal is None else goal
    adders: dict[int, list[tuple[int, int]]] = {}
    touchers: dict[int, list[tuple[int, int]]] = {}
    for a in problem.actions:
        for f in a.add:
            adders.setdefault(f, []).append((a.id, -1))
            touchers.setdefault(f, []).append((a.id, -1))
        for f in a.delete:
            touchers.setdefault(f, []).append((a.id, -1))
        for p, q in a.cond_effects:
            adders.setdefault(q, []).append((a.id, p))
            touchers.setdefault(q, []).append((a.id, p))
    pos: set[int] = set()
    exact: set[int] = set()
    keep: set[int] = set()
    work = [(f, False) for f in goal.positive] + [(f, True) for f in goal.negative]
    while work:
        f, is_exact = work.pop()
        target = exact if is_exact else pos
        if f in target:
            continue
        target.add(f)
        for a, p in (touchers if is_exact else adders).get(f, ()):
            if a not in keep:
                keep.add(a)
                work.extend((x, False) for x in problem.actions[a].pre)
            if p >= 0:
                work.append((p, is_exact))
    mask = 0
    for f in pos | exact:
        mask |= 1 << f
    return sorted(keep), mask


class _Task:
    """Search-ready view of a problem restricted to its relevant part."""

    def __init__(self, problem: PlanningProblem, tie_seed: int | None = None, prune: bool = True):
        self.problem = problem
        goal = problem.goal
        if prune:
            ids, rel = relevant_actions(problem)
        else:
            ids = list(range(len(problem.actions)))
            rel = (1 << len(problem.fluents)) - 1
        self.rel = rel
        self.goal_pos = goal.pos_mask
        self.goal_neg = goal.neg_mask
        self.goal_bits = tuple(iter_bits(goal.pos_mask))
        deleted = 0
        for i in ids:
            deleted |= problem.actions[i].del_mask
        # negative-goal fluents nothing can delete are permanent dead ends once true
        self.dead = goal.neg_mask & ~deleted
        if tie_seed is None:
            rank = {i: i for i in ids}
        else:
            perm = list(range(len(problem.actions)))
            random.Random(tie_seed).shuffle(perm)
            rank = {i: perm[i] for i in ids}

        freq: dict[int, int] = {}
        for i in ids:
            for f in problem.actions[i].pre:
                freq[f] = freq.get(f, 0) + 1
        self.buckets: dict[int, list[tuple]] = {}
        self.free: list[tuple] = []
        trig = 0
        ops_pre, ops_add, ops_cost, ops_act = [], [], [], []
        for i in ids:
            a = problem.actions[i]
            conds = tuple((1 << p, 1 << q) for p, q in a.cond_effects if rel >> q & 1)
            rec = (i, a.pre_mask, a.add_mask & rel, rel & ~a.del_mask, conds, a.cost, rank[i])
            if a.pre:
                f = min(a.pre, key=lambda x: (freq[x], x))
                self.buckets.setdefault(f, []).append(rec)
                trig |= 1 << f
            else:
                self.free.append(rec)
            ops_pre.append(tuple(a.pre))
            ops_add.append(tuple(f for f in a.add if rel >> f & 1))
            ops_cost.append(a.cost)
            ops_act.append(i)
            for p, q in a.cond_effects:
                if rel >> q & 1:
                    ops_pre.append(tuple(set(a.pre) | {p}))
                    ops_add.append((q,))
                    ops_cost.append(a.cost)
                    ops_act.append(i)
        self.trig = trig
        self.op_add = ops_add
        self.op_cost = ops_cost
        self.op_act = ops_act
        self.op_pre = ops_pre
        self.op_pre_mask = [sum(1 << f for f in p) for p in ops_pre]
        self.pre_count = [len(p) for p in ops_pre]
        self.free_ops = [k for k, p in enumerate(ops_pre) if not p]
        pre_of: dict[int, list[int]] = {}
        for k, pre in enumerate(ops_pre):
            for f in pre:
                pre_of.setdefault(f, []).append(k)
        self.pre_of = pre_of

    def successors(self, s: int):
        for f in iter_bits(s & self.trig):
            for rec in self.buckets[f]:
                pre = rec[1]
                if s & pre == pre:
                    yield rec
        yield from self.free

    @staticmethod
    def progress(s: int, rec) -> int:
        added = rec[2]
        for p, q in rec[4]:
            if s & p:
                added |= q
        return (s | added) & rec[3]

    def is_goal(self, s: int) -> bool:
        return s & self.goal_pos == self.goal_pos and not s & self.goal_neg

    def heuristic(self, s: int, additive: bool) -> float:
        return self._relaxed(s, additive, None)

    def heuristic_preferred(self, s: int) -> tuple[float, frozenset[int]]:
        """Additive estimate plus the applicable actions of the extracted relaxed plan."""
        sup: dict[int, int] = {}
        h = self._relaxed(s, True, sup)
        if h == INF or h == 0.0:
            return h, frozenset()
        chosen = set()
        stack = [f for f in self.goal_bits if not s >> f & 1]
        seen = set()
        while stack:
            f = stack.pop()
            if f in seen or s >> f & 1:
                continue
            seen.add(f)
            k = sup[f]
            if k not in chosen:
                chosen.add(k)
                stack.extend(self.op_pre[k])
        masks, acts = self.op_pre_mask, self.op_act
        return h, frozenset(acts[k] for k in chosen if s & masks[k] == masks[k])

    def _relaxed(self, s: int, additive: bool, sup: dict | None) -> float:
        if s & self.dead:
            return INF
        goals = self.goal_bits
        if not goals:
            return 0.0
        remaining = {f for f in goals if not s >> f & 1}
        if not remaining:
            return 0.0
        best: dict[int, float] = {}
        heap = []
        for f in iter_bits(s):
            best[f] = 0.0
            heap.append((0.0, f))
        unsat = self.pre_count[:]
        acc = [0.0] * len(unsat)
        op_add, op_cost, pre_of = self.op_add, self.op_cost, self.pre_of
        for k in self.free_ops:
            c = op_cost[k]
            for q in op_add[k]:
                if c < best.get(q, INF):
                    best[q] = c
                    if sup is not None:
                        sup[q] = k
                    heappush(heap, (c, q))
        total = 0.0
        while heap:
            c, f = heappop(heap)
            if best[f] < c:
                continue
            if f in remaining:
                remaining.discard(f)
                total = total + c if additive else c
                if not remaining:
                    break
            for k in pre_of.get(f, ()):
                if additive:
                    acc[k] += c
                elif c > acc[k]:
                    acc[k] = c
                unsat[k] -= 1
                if unsat[k] == 0:
                    nc = acc[k] + op_cost[k]
                    for q in op_add[k]:
                        if nc < best.get(q, INF):
                            best[q] = nc
                            if sup is not None:
                                sup[q] = k
                            heappush(heap, (nc, q))
        if remaining:
            return INF
        return total


class _Clock:
    def __init__(self, budget: SearchBudget):
        self.start = time.perf_counter()
        self.deadline = None if budget.wall_time_limit is None else self.start + budget.wall_time_limit
        self.limit = budget.expansion_limit
        self.expansions = 0

    def exhausted(self) -> bool:
        if self.limit is not None and self.expansions >= self.limit:
            return True
        if self.deadline is not None and (self.expansions & 63 == 0) and time.perf_counter() > self.deadline:
            return True
        return False

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def _extract(parents: dict, s: int) -> list[int]:
    steps = []
    while True:
        entry = parents[s]
        if entry is None:
            break
        s, a = entry
        steps.append(a)
    steps.reverse()
    return steps


def _astar(task: _Task, clock: _Clock, weight: float = 1.0, additive: bool = False, bound: float = INF):
    """Returns (steps, cost, exhausted)."""
    s0 = task.problem.init & task.rel
    h0 = task.heuristic(s0, additive)
    if h0 == INF:
        return None, INF, False
    g = {s0: 0.0}
    parents = {s0: None}
    closed = set()
    counter = 0
    open_ = [(weight * h0, 0.0, -1, 0, s0)]
    while open_:
        _, neg_g, _, _, s = heappop(open_)
        gs = -neg_g
        if s in closed or g[s] < gs:
            continue
        if task.is_goal(s):
            return _extract(parents, s), gs, False
        if clock.exhausted():
            return None, INF, True
        closed.add(s)
        clock.expansions += 1
        for rec in task.successors(s):
            t = task.progress(s, rec)
            gt = gs + rec[5]
            if gt >= bound or gt >= g.get(t, INF):
                continue
            h = task.heuristic(t, additive)
            if h == INF:
                continue
            g[t] = gt
            parents[t] = (s, rec[0])
            closed.discard(t)
            counter += 1
            heappush(open_, (gt + weight * h, -gt, rec[6], counter, t))
    return None, INF, False


def _lazy_gbfs(task: _Task, clock: _Clock):
    """Greedy best-first search with deferred evaluation.

    Children inherit the parent's h-value; among them, actions of the
    parent's relaxed plan (preferred operators) are tried first.
    """
    s0 = task.problem.init & task.rel
    parents = {s0: None}
    closed = set()
    counter = 0
    open_ = [(0.0, 0, 0.0, -1, 0, s0)]
    while open_:
        _, _, gs, _, _, s = heappop(open_)
        if s in closed:
            continue
        closed.add(s)
        if task.is_goal(s):
            return _extract(parents, s), gs, False
        h, preferred = task.heuristic_preferred(s)
        if h == INF:
            continue
        if clock.exhausted():
            return None, INF, True
        clock.expansions += 1
        for rec in task.successors(s):
            t = task.progress(s, rec)
            if t in parents:
                continue
            parents[t] = (s, rec[0])
            counter += 1
            heappush(open_, (h, 0 if rec[0] in preferred else 1, gs + rec[5], rec[6], counter, t))
    return None, INF, False


def eliminate_actions(problem: PlanningProblem, steps: Sequence[int]) -> list[int]:
    """Greedy action elimination.

    Repeatedly drops one action together with every later action that stops
    being applicable, keeping the change when the goal still holds and the
    plan got cheaper.  The input must be a valid plan.
    """
    acts = problem.actions
    goal = problem.goal
    steps = list(steps)
    improved = True
    while improved:
        improved = False
        state = problem.init
        i = 0
        while i < len(steps):
            kept = steps[:i]
            st = state
            for a in steps[i + 1:]:
                act = acts[a]
                if st & act.pre_mask == act.pre_mask:
                    st = _progress(st, act)
                    kept.append(a)
            if satisfies(st, goal) and problem.plan_cost(kept) < problem.plan_cost(steps):
                steps = kept
                improved = True
                continue
            state = _progress(state, acts[steps[i]])
            i += 1
    return steps


def _result(problem, steps, cost, clock, exhausted) -> PlanResult:
    if steps is not None:
        return PlanResult(Status.SOLVED, Plan(tuple(steps), problem.plan_cost(steps)), clock.expansions, clock.elapsed)
    status = Status.BUDGET_EXHAUSTED if exhausted else Status.UNSOLVABLE
    return PlanResult(status, None, clock.expansions, clock.elapsed)


def plan_optimal(problem: PlanningProblem, budget: SearchBudget = SearchBudget(), tie_seed: int | None = None) -> PlanResult:
    clock = _Clock(budget)
    if satisfies(problem.init, problem.goal):
        return _result(problem, [], 0.0, clock, False)
    task = _Task(problem, tie_seed)
    steps, cost, exhausted = _astar(task, clock)
    return _result(problem, steps, cost, clock, exhausted)


ANYTIME_WEIGHTS = (5.0, 3.0, 2.0, 1.0)


def plan_satisficing(
    problem: PlanningProblem,
    budget: SearchBudget = SearchBudget(),
    tie_seed: int | None = None,
    anytime: bool = True,
) -> PlanResult:
    """Greedy search for a first plan, then weighted A* passes bounded by the incumbent."""
    clock = _Clock(budget)
    if satisfies(problem.init, problem.goal):
        return _result(problem, [], 0.0, clock, False)
    task = _Task(problem, tie_seed)
    steps, cost, exhausted = _lazy_gbfs(task, clock)
    if steps is None:
        return _result(problem, None, INF, clock, exhausted)
    best = eliminate_actions(problem, steps)
    best_cost = problem.plan_cost(best)
    if anytime:
        for w in ANYTIME_WEIGHTS:
            found, c, exhausted = _astar(task, clock, weight=w, additive=True, bound=best_cost)
            if found is not None and c < best_cost:
                best, best_cost = found, c
            if exhausted:
                break
    return _result(problem, best, best_cost, clock, False)


def solve(problem: PlanningProblem, mode: str = "optimal", budget: SearchBudget = SearchBudget(), **kw) -> PlanResult:
    if mode == "optimal":
        return plan_optimal(problem, budget, **kw)
    if mode == "satisficing":
        return plan_satisficing(problem, budget, **kw)
    raise ValueError(f"unknown planning mode {mode!r}")


def h_max(problem: PlanningProblem, state: State | None = None) -> float:
    task = _Task(problem, prune=False)
    return task.heuristic(problem.init if state is None else state, additive=False)


def h_add(problem: PlanningProblem, state: State | None = None) -> float:
    task = _Task(problem, prune=False)
    return task.heuristic(problem.init if state is None else state, additive=True)
