"""Plan recognition as planning: observation compilation (RG), goal mirroring (GM)
and the cost-difference posterior shared by both.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .model import (
    Fluent,
    GoalDescription,
    PlanningProblem,
    State,
    applicable,
    force_apply,
    apply as apply_action,
)
from .planner import INF, PlanResult, SearchBudget, Status, solve


class ObservationError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"observation {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class ObservationSequence:
    actions: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.actions)

    def prefix(self, t: int) -> "ObservationSequence":
        return ObservationSequence(self.actions[:t])


@dataclass(frozen=True)
class RecognitionTask:
    problem: PlanningProblem
    goals: tuple[GoalDescription, ...]
    priors: tuple[float, ...]
    observations: ObservationSequence
    goal_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.goals:
            raise ValueError("a recognition task needs at least one goal")
        if len(self.priors) != len(self.goals):
            raise ValueError("one prior per goal is required")
        if any(p < 0 for p in self.priors) or abs(sum(self.priors) - 1.0) > 1e-9:
            raise ValueError("priors must be non-negative and sum to 1")
        n = len(self.problem.actions)
        for k, a in enumerate(self.observations.actions):
            if not 0 <= a < n:
                raise ObservationError(k, f"unknown action id {a}")
        if not self.goal_names:
            object.__setattr__(self, "goal_names", tuple(f"g{i + 1}" for i in range(len(self.goals))))
        elif len(self.goal_names) != len(self.goals):
            raise ValueError("one name per goal is required")


def uniform_priors(k: int) -> tuple[float, ...]:
    return tuple([1.0 / k] * k)


@dataclass(frozen=True)
class CostPair:
    with_obs: float
    without_obs: float
    with_status: str = Status.SOLVED.value
    without_status: str = Status.SOLVED.value

    @property
    def delta(self) -> float:
        if self.with_obs == INF:
            return INF
        if self.without_obs == INF:
            return -INF
        return self.with_obs - self.without_obs


@dataclass(frozen=True)
class RecognitionConfig:
    beta: float = 1.0
    mode: str = "satisficing"
    budget: SearchBudget = SearchBudget(30.0)
    tie_epsilon: float = 1e-9
    anytime: bool = True
    force_apply: bool = False
    tie_seed: int | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.tie_epsilon <= 0:
            raise ValueError("tie_epsilon must be positive")
        if self.mode not in ("optimal", "satisficing"):
            raise ValueError(f"unknown planning mode {self.mode!r}")

    def planner_kwargs(self) -> dict:
        kw = {"tie_seed": self.tie_seed}
        if self.mode == "satisficing":
            kw["anytime"] = self.anytime
        return kw


@dataclass(frozen=True)
class GoalPosterior:
    probs: tuple[float, ...]
    log_normalizer: float = 0.0
    uniform_fallback: bool = False

    @property
    def normalizer(self) -> float:
        """Total unnormalized mass (the reciprocal of Bayes' alpha)."""
        return math.exp(self.log_normalizer)

    def argmax_set(self, tie_epsilon: float = 1e-9) -> frozenset[int]:
        return argmax_set(self.probs, tie_epsilon)


def argmax_set(probs: Sequence[float], tie_epsilon: float = 1e-9) -> frozenset[int]:
    top = max(probs)
    return frozenset(i for i, p in enumerate(probs) if top - p <= tie_epsilon)


def normalize_log(log_raw: np.ndarray) -> GoalPosterior:
    log_raw = np.asarray(log_raw, dtype=float)
    if np.all(np.isneginf(log_raw)):
        k = len(log_raw)
        return GoalPosterior(tuple([1.0 / k] * k), -INF, uniform_fallback=True)
    top = np.max(log_raw)
    log_z = top + math.log(float(np.sum(np.exp(log_raw - top))))
    probs = np.exp(log_raw - log_z)
    return GoalPosterior(tuple(float(p) for p in probs), float(log_z))


def posterior(deltas: Sequence[float], priors: Sequence[float], beta: float = 1.0) -> GoalPosterior:
    """Posterior from plan-cost differences.

    Each goal gets ``prior * exp(-beta*d) / (1 + exp(-beta*d))``, evaluated as
    ``prior / (1 + exp(beta*d))`` in log space.  ``d = +inf`` gives zero mass,
    ``d = -inf`` keeps the full prior.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    d = np.asarray(deltas, dtype=float)
    pri = np.asarray(priors, dtype=float)
    if d.shape != pri.shape:
        raise ValueError("one delta per prior is required")
    with np.errstate(divide="ignore"):
        log_prior = np.log(pri)
    scaled = np.where(np.isneginf(d), -INF, beta * np.where(np.isfinite(d), d, 0.0))
    scaled = np.where(np.isposinf(d), INF, scaled)
    log_lik = -np.logaddexp(0.0, scaled)
    return normalize_log(log_prior + log_lik)


def prior_posterior(priors: Sequence[float]) -> GoalPosterior:
    return GoalPosterior(tuple(float(p) for p in priors), 0.0)


# --- compilations -----------------------------------------------------------


@dataclass(frozen=True)
class RGCompilation:
    problem: PlanningProblem
    final_fluent: int
    origin: tuple[int, ...]

    def goal_pair(self, goal: GoalDescription) -> tuple[PlanningProblem, PlanningProblem]:
        with_obs = self.problem.with_goal(goal.extended(positive=[self.final_fluent]))
        without_obs = self.problem.with_goal(goal.extended(negative=[self.final_fluent]))
        return with_obs, without_obs

    def original_steps(self, steps: Iterable[int]) -> list[int]:
        return [self.origin[a] for a in steps]


def compile_rg_domain(problem: PlanningProblem, obs: ObservationSequence | Sequence[int]) -> RGCompilation:
    """Add one chain fluent per observation so plans can be forced to embed them.

    The first observed action adds ``obs_1``; the action of observation ``i``
    gets the conditional effect ``obs_(i-1) -> obs_i``.  Repeated actions are
    cloned (``name#k``) and the clone carries the chain effect.
    """
    steps = obs.actions if isinstance(obs, ObservationSequence) else tuple(obs)
    if not steps:
        raise ValueError("cannot compile an empty observation sequence")
    n = len(problem.fluents)
    taken = set(problem.fluent_index)
    chain_names = []
    for i in range(len(steps)):
        name = f"(obs-{i + 1})"
        while name in taken:
            name = name[:-1] + "_)"
        chain_names.append(name)
    fluents = problem.fluents + tuple(Fluent(n + i, nm) for i, nm in enumerate(chain_names))
    actions = list(problem.actions)
    origin = list(range(len(actions)))
    seen: dict[int, int] = {}
    for i, a in enumerate(steps):
        if not 0 <= a < len(problem.actions):
            raise ObservationError(i, f"unknown action id {a}")
        count = seen.get(a, 0) + 1
        seen[a] = count
        if count == 1:
            target = a
        else:
            src = problem.actions[a]
            target = len(actions)
            actions.append(replace(src, id=target, name=f"{src.name}#{count}"))
            origin.append(a)
        act = actions[target]
        if i == 0:
            actions[target] = replace(act, add=act.add | {n})
        else:
            actions[target] = replace(act, cond_effects=act.cond_effects + ((n + i - 1, n + i),))
    compiled = PlanningProblem(fluents, tuple(actions), problem.init, problem.goal, name=problem.name)
    return RGCompilation(compiled, n + len(steps) - 1, tuple(origin))


def compile_rg(problem, obs, goals: Sequence[GoalDescription]) -> list[tuple[PlanningProblem, PlanningProblem]]:
    """Per goal, the (embeds observations, avoids observations) planning problems."""
    comp = compile_rg_domain(problem, obs)
    return [comp.goal_pair(g) for g in goals]


def progress_observations(problem: PlanningProblem, obs, force: bool = False, state: State | None = None) -> State:
    s = problem.init if state is None else state
    steps = obs.actions if isinstance(obs, ObservationSequence) else tuple(obs)
    for i, a in enumerate(steps):
        act = problem.actions[a]
        if applicable(s, act):
            s = apply_action(s, act)
        elif force:
            s = force_apply(s, act)
        else:
            raise ObservationError(i, f"{act.name} is not applicable")
    return s


def transform_gm(problem: PlanningProblem, obs, force_apply: bool = False) -> tuple[PlanningProblem, float]:
    """Advance the initial state through the observations; return it with the prefix cost."""
    steps = obs.actions if isinstance(obs, ObservationSequence) else tuple(obs)
    s = progress_observations(problem, steps, force=force_apply)
    return problem.with_init(s), float(sum(problem.actions[a].cost for a in steps))


# --- online drivers ---------------------------------------------------------


@dataclass
class TraceStep:
    t: int
    posterior: GoalPosterior
    costs: tuple[CostPair, ...] | None
    planner_calls: int
    elapsed: float


@dataclass
class RecognitionTrace:
    method: str
    goal_names: tuple[str, ...]
    steps: list[TraceStep] = field(default_factory=list)
    cache_hits: int = 0

    @property
    def planner_calls(self) -> int:
        return self.steps[-1].planner_calls if self.steps else 0

    def posteriors(self) -> list[GoalPosterior]:
        return [s.posterior for s in self.steps]

    def to_dict(self, include_timing: bool = False) -> dict:
        out_steps = []
        for st in self.steps:
            rec = {
                "t": st.t,
                "probabilities": {g: p for g, p in zip(self.goal_names, st.posterior.probs)},
                "uniform_fallback": st.posterior.uniform_fallback,
                "planner_calls": st.planner_calls,
            }
            if st.costs is not None:
                rec["costs"] = {
                    g: {
                        "with_obs": _num(c.with_obs),
                        "without_obs": _num(c.without_obs),
                        "with_status": c.with_status,
                        "without_status": c.without_status,
                    }
                    for g, c in zip(self.goal_names, st.costs)
                }
            if include_timing:
                rec["elapsed"] = st.elapsed
            out_steps.append(rec)
        return {"method": self.method, "goals": list(self.goal_names), "steps": out_steps}


def _num(x: float):
    return None if x == INF else x


class PlanCache:
    """Memo of planner results keyed by (initial state, goal) for one action set.

    Only valid while the actions stay fixed, which holds for goal mirroring:
    every call differs from the original problem in init and goal only.
    """

    def __init__(self):
        self._store: dict[tuple, PlanResult] = {}
        self.hits = 0

    def get(self, problem: PlanningProblem, fn) -> PlanResult:
        key = (problem.init, problem.goal.pos_mask, problem.goal.neg_mask)
        hit = self._store.get(key)
        if hit is not None:
            self.hits += 1
            return hit
        res = fn(problem)
        self._store[key] = res
        return res

    def __len__(self) -> int:
        return len(self._store)


def recognize_online_rg(
    task: RecognitionTask,
    config: RecognitionConfig = RecognitionConfig(),
    timesteps: Iterable[int] | None = None,
) -> RecognitionTrace:
    """RG posterior after every prefix (or only at ``timesteps`` when given)."""
    start = time.perf_counter()
    wanted = None if timesteps is None else set(timesteps)
    trace = RecognitionTrace("rg", task.goal_names)
    trace.steps.append(TraceStep(0, prior_posterior(task.priors), None, 0, 0.0))
    calls = 0
    kw = config.planner_kwargs()
    for t in range(1, len(task.observations) + 1):
        if wanted is not None and t not in wanted:
            continue
        comp = compile_rg_domain(task.problem, task.observations.prefix(t))
        costs = []
        for g in task.goals:
            p_o, p_not_o = comp.goal_pair(g)
            r_o = solve(p_o, config.mode, config.budget, **kw)
            r_n = solve(p_not_o, config.mode, config.budget, **kw)
            calls += 2
            costs.append(CostPair(r_o.cost, r_n.cost, r_o.status.value, r_n.status.value))
        post = posterior([c.delta for c in costs], task.priors, config.beta)
        trace.steps.append(TraceStep(t, post, tuple(costs), calls, time.perf_counter() - start))
    return trace


def recognize_online_gm(
    task: RecognitionTask,
    config: RecognitionConfig = RecognitionConfig(),
    cache: PlanCache | None = None,
    timesteps: Iterable[int] | None = None,
) -> RecognitionTrace:
    """GM posterior after every prefix (or only at ``timesteps`` when given).

    Baselines are always computed, so a full run makes |G|*T + |G| calls.
    """
    start = time.perf_counter()
    wanted = None if timesteps is None else set(timesteps)
    kw = config.planner_kwargs()

    def run(p: PlanningProblem) -> PlanResult:
        if cache is None:
            return solve(p, config.mode, config.budget, **kw)
        return cache.get(p, lambda q: solve(q, config.mode, config.budget, **kw))

    hits0 = cache.hits if cache is not None else 0
    trace = RecognitionTrace("gm", task.goal_names)
    base = [run(task.problem.with_goal(g)) for g in task.goals]
    calls = len(task.goals)
    trace.steps.append(TraceStep(0, prior_posterior(task.priors), None, calls, time.perf_counter() - start))
    state = task.problem.init
    prefix_cost = 0.0
    for t, a in enumerate(task.observations.actions, start=1):
        act = task.problem.actions[a]
        if applicable(state, act):
            state = apply_action(state, act)
        elif config.force_apply:
            state = force_apply(state, act)
        else:
            raise ObservationError(t - 1, f"{act.name} is not applicable")
        prefix_cost += act.cost
        if wanted is not None and t not in wanted:
            continue
        advanced = task.problem.with_init(state)
        costs = []
        for g, b in zip(task.goals, base):
            r = run(advanced.with_goal(g))
            calls += 1
            costs.append(CostPair(prefix_cost + r.cost, b.cost, r.status.value, b.status.value))
        post = posterior([c.delta for c in costs], task.priors, config.beta)
        trace.steps.append(TraceStep(t, post, tuple(costs), calls, time.perf_counter() - start))
    if cache is not None:
        trace.cache_hits = cache.hits - hits0
    return trace


def recognize_online(task: RecognitionTask, method: str, config: RecognitionConfig = RecognitionConfig(), **kw) -> RecognitionTrace:
    if method == "rg":
        kw.pop("cache", None)
        return recognize_online_rg(task, config, **kw)
    if method == "gm":
        return recognize_online_gm(task, config, **kw)
    raise ValueError(f"unknown recognition method {method!r}")


def embeds_in_order(plan_steps: Sequence[int], obs: Sequence[int]) -> bool:
    """True iff ``obs`` is an in-order subsequence of ``plan_steps``."""
    it = iter(plan_steps)
    return all(any(a == b for b in it) for a in obs)
