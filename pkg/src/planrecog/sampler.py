"""Goal-biased synthetic observation sequences.

With probability ``p`` the agent follows the next step of its current optimal
plan; otherwise it takes a random applicable action weighted by per-goal
action-type and object scores, then replans from where it ended up.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import GoalDescription, PlanningProblem, State, applicable, apply, satisfies
from .planner import PlanResult, SearchBudget, solve
from .prap import ObservationSequence

log = logging.getLogger(__name__)

WEIGHT_LOW, WEIGHT_HIGH = 0.1, 1.0


class GoalUnreachableError(RuntimeError):
    pass


class TruncatedError(RuntimeError):
    def __init__(self, partial: list[int], limit: int):
        super().__init__(f"sequence exceeded max_length={limit} before reaching the goal")
        self.partial = partial
        self.limit = limit


@dataclass
class SamplerModel:
    action_type_weights: dict[str, float]
    object_weights: dict[str, float]
    action_type_of: tuple[str, ...]
    objects_of: tuple[tuple[str, ...], ...]

    def weight(self, action_id: int) -> float:
        w = self.action_type_weights.get(self.action_type_of[action_id], 0.0)
        for obj in self.objects_of[action_id]:
            w *= self.object_weights.get(obj, 0.0)
        return w

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weight(i) for i in range(len(self.action_type_of))], dtype=float)


def init_sampler_model(problem: PlanningProblem, goal: GoalDescription | None = None, seed: int = 0) -> SamplerModel:
    """Random weights in [0.1, 1.0).

    One model stands for one goal, so ``goal`` only documents intent; the
    draw depends on the seed and the (sorted) type and object names.
    """
    rng = np.random.default_rng(seed)
    types = sorted({a.schema or a.name for a in problem.actions})
    objects = sorted({o for a in problem.actions for o in a.args})
    tw = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=len(types))
    ow = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=len(objects))
    return SamplerModel(
        action_type_weights={t: float(w) for t, w in zip(types, tw)},
        object_weights={o: float(w) for o, w in zip(objects, ow)},
        action_type_of=tuple(a.schema or a.name for a in problem.actions),
        objects_of=tuple(tuple(a.args) for a in problem.actions),
    )


def action_weight(model: SamplerModel, action_id: int, goal: GoalDescription | None = None) -> float:
    return model.weight(action_id)


@dataclass(frozen=True)
class SamplerConfig:
    p_plan_action: float = 0.5
    seed: int = 0
    max_length: int | None = None  # default: 10x the initial optimal plan length
    replan_threshold: int = 10_000
    budget: SearchBudget = SearchBudget(30.0)
    anytime: bool = False  # only used when replanning is satisficing

    def __post_init__(self):
        if not 0.0 <= self.p_plan_action <= 1.0:
            raise ValueError("p_plan_action must lie in [0, 1]")
        if self.max_length is not None and self.max_length < 1:
            raise ValueError("max_length must be at least 1")


@dataclass
class _Replanner:
    problem: PlanningProblem
    goal: GoalDescription
    config: SamplerConfig
    cache: dict = field(default_factory=dict)

    def __call__(self, state: State) -> PlanResult:
        hit = self.cache.get(state)
        if hit is None:
            p = self.problem.with_init(state).with_goal(self.goal)
            if len(self.problem.actions) < self.config.replan_threshold:
                hit = solve(p, "optimal", self.config.budget)
            else:
                hit = solve(p, "satisficing", self.config.budget, anytime=self.config.anytime)
            self.cache[state] = hit
        return hit


def sample_sequence(
    problem: PlanningProblem,
    goal: GoalDescription,
    model: SamplerModel,
    config: SamplerConfig = SamplerConfig(),
    plan_cache: dict | None = None,
) -> ObservationSequence:
    """Sample one observation sequence that ends in a goal state.

    ``plan_cache`` maps states to planner results for this goal and may be
    shared between calls to save replanning.
    """
    rng = np.random.default_rng(config.seed)
    replan = _Replanner(problem, goal, config, plan_cache if plan_cache is not None else {})
    first = replan(problem.init)
    if not first.solved:
        raise GoalUnreachableError(f"goal unreachable from the initial state ({first.status.value})")
    plan = list(first.plan.steps)
    limit = config.max_length if config.max_length is not None else max(1, 10 * len(plan))
    weights = model.weight_vector()
    acts = problem.actions

    s = problem.init
    cursor = 0
    seq: list[int] = []
    while not satisfies(s, goal):
        if len(seq) >= limit:
            raise TruncatedError(seq, limit)
        if rng.random() < config.p_plan_action:
            a = plan[cursor]
            cursor += 1
            s = apply(s, acts[a])
        else:
            cands = [i for i in range(len(acts)) if weights[i] > 0 and applicable(s, acts[i])]
            chosen = None
            while cands:
                w = weights[cands]
                k = int(rng.choice(len(cands), p=w / w.sum()))
                nxt = apply(s, acts[cands[k]])
                res = replan(nxt)
                if res.solved:
                    chosen = (cands[k], nxt, res)
                    break
                log.debug("rejecting dead-end action %s", acts[cands[k]].name)
                cands.pop(k)
            if chosen is None:
                # every weighted option is a dead end; fall back to the plan
                a = plan[cursor]
                cursor += 1
                s = apply(s, acts[a])
            else:
                a, s, res = chosen
                plan = list(res.plan.steps)
                cursor = 0
        seq.append(a)
    return ObservationSequence(tuple(seq))


def sample_batch(
    problem: PlanningProblem,
    goal: GoalDescription,
    model: SamplerModel,
    p: float,
    seeds,
    **kw,
) -> list[ObservationSequence]:
    cache: dict = {}
    return [sample_sequence(problem, goal, model, SamplerConfig(p_plan_action=p, seed=s, **kw), cache) for s in seeds]


def length_stats(lengths) -> Mapping[str, float]:
    arr = np.asarray(list(lengths), dtype=float)
    if arr.size == 0:
        return {}
    return {"count": int(arr.size), "mean": float(arr.mean()), "median": float(np.median(arr)), "stddev": float(arr.std())}
