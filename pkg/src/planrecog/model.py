"""Grounded STRIPS model with single-fluent conditional effects.

States are plain ``int`` bitsets over fluent ids: bit ``i`` is set iff fluent
``i`` is true.  Everything here is immutable once built, so grounded problems
can be shared freely between planner invocations.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Sequence

State = int


def make_state(fluent_ids: Iterable[int]) -> State:
    bits = 0
    for i in fluent_ids:
        bits |= 1 << i
    return bits


def state_ids(state: State) -> list[int]:
    """Return the ids of the true fluents in ascending order."""
    out = []
    while state:
        low = state & -state
        out.append(low.bit_length() - 1)
        state ^= low
    return out


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class InapplicableActionError(ValueError):
    def __init__(self, action: "GroundAction", index: int | None = None):
        where = "" if index is None else f" at step {index}"
        super().__init__(f"action {action.name} is not applicable{where}")
        self.action = action
        self.index = index


@dataclass(frozen=True)
class Fluent:
    id: int
    name: str


@dataclass(frozen=True)
class GroundAction:
    id: int
    name: str
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    cond_effects: tuple[tuple[int, int], ...] = ()
    cost: float = 1.0
    schema: str = ""
    args: tuple[str, ...] = ()

    def __post_init__(self):
        if self.add & self.delete:
            raise ValueError(f"{self.name}: add and delete lists overlap")
        if self.cost < 0:
            raise ValueError(f"{self.name}: negative cost {self.cost}")

    @cached_property
    def pre_mask(self) -> int:
        return make_state(self.pre)

    @cached_property
    def add_mask(self) -> int:
        return make_state(self.add)

    @cached_property
    def del_mask(self) -> int:
        return make_state(self.delete)

    @cached_property
    def cond_masks(self) -> tuple[tuple[int, int], ...]:
        return tuple((1 << p, 1 << q) for p, q in self.cond_effects)


@dataclass(frozen=True)
class GoalDescription:
    positive: frozenset[int] = frozenset()
    negative: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.positive & self.negative:
            raise ValueError("goal requires a fluent to be both true and false")

    @cached_property
    def pos_mask(self) -> int:
        return make_state(self.positive)

    @cached_property
    def neg_mask(self) -> int:
        return make_state(self.negative)

    def extended(self, positive: Iterable[int] = (), negative: Iterable[int] = ()) -> "GoalDescription":
        return GoalDescription(self.positive | frozenset(positive), self.negative | frozenset(negative))


@dataclass(frozen=True)
class Plan:
    steps: tuple[int, ...]
    cost: float

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PlanningProblem:
    fluents: tuple[Fluent, ...]
    actions: tuple[GroundAction, ...]
    init: State
    goal: GoalDescription = field(default_factory=GoalDescription)
    name: str = ""

    def __post_init__(self):
        n = len(self.fluents)
        for i, f in enumerate(self.fluents):
            if f.id != i:
                raise ValueError(f"fluent ids must be contiguous; {f.name} has id {f.id}, expected {i}")
        for i, a in enumerate(self.actions):
            if a.id != i:
                raise ValueError(f"action ids must be contiguous; {a.name} has id {a.id}, expected {i}")
            refs = a.pre | a.add | a.delete | {x for pq in a.cond_effects for x in pq}
            if refs and max(refs) >= n:
                raise ValueError(f"{a.name} references an unknown fluent")
        if self.init >> n:
            raise ValueError("initial state references an unknown fluent")
        goal_refs = self.goal.positive | self.goal.negative
        if goal_refs and max(goal_refs) >= n:
            raise ValueError("goal references an unknown fluent")

    @cached_property
    def fluent_index(self) -> dict[str, int]:
        return {f.name: f.id for f in self.fluents}

    @cached_property
    def action_index(self) -> dict[str, int]:
        return {a.name: a.id for a in self.actions}

    def fluent_id(self, name: str) -> int:
        return self.fluent_index[name]

    def action_by_name(self, name: str) -> GroundAction:
        return self.actions[self.action_index[name]]

    def with_goal(self, goal: GoalDescription) -> "PlanningProblem":
        return replace(self, goal=goal)

    def with_init(self, init: State) -> "PlanningProblem":
        return replace(self, init=init)

    def state_names(self, state: State) -> list[str]:
        return [self.fluents[i].name for i in state_ids(state)]

    def plan_cost(self, steps: Sequence[int]) -> float:
        return float(sum(self.actions[i].cost for i in steps))


def applicable(state: State, action: GroundAction) -> bool:
    pre = action.pre_mask
    return state & pre == pre


def apply(state: State, action: GroundAction) -> State:
    """Progress ``state`` through ``action``.

    Conditional effects test their condition against the state *before* the
    action, so a condition that the action itself deletes still fires.
    """
    if not applicable(state, action):
        raise InapplicableActionError(action)
    return _progress(state, action)


def force_apply(state: State, action: GroundAction) -> State:
    """Like :func:`apply` but ignores preconditions."""
    return _progress(state, action)


def _progress(state: State, action: GroundAction) -> State:
    added = action.add_mask
    for p, q in action.cond_masks:
        if state & p:
            added |= q
    return (state | added) & ~action.del_mask


def satisfies(state: State, goal: GoalDescription) -> bool:
    pos = goal.pos_mask
    return state & pos == pos and not state & goal.neg_mask


def execute(problem: PlanningProblem, steps: Iterable[int], state: State | None = None) -> State:
    s = problem.init if state is None else state
    for k, a in enumerate(steps):
        act = problem.actions[a]
        if not applicable(s, act):
            raise InapplicableActionError(act, k)
        s = _progress(s, act)
    return s
