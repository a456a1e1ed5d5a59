"""Meta-models mixing a planning-based posterior with the Naive Bayes one."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .prap import GoalPosterior, argmax_set


@dataclass(frozen=True)
class WeightScheduleParams:
    """NBM weight ``a / (1 + exp(-b * (t - (c*n + d))))``.

    ``fixed`` short-circuits the logistic and always returns that weight.
    """

    a: float
    b: float
    c: float
    d: float
    fixed: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("a must lie in [0, 1]")
        if self.fixed is not None and not 0.0 <= self.fixed <= 1.0:
            raise ValueError("a fixed weight must lie in [0, 1]")


PRESETS = {
    "cmu": WeightScheduleParams(0.5, -0.15, 4.0, 2.5),
    "acmu": WeightScheduleParams(0.5, -0.15, 5.0, 1.0),
    "log": WeightScheduleParams(0.2, -0.15, 0.0, 0.0),
}


def parse_schedule(text: str) -> WeightScheduleParams:
    key = text.strip().lower()
    if key in PRESETS:
        return PRESETS[key]
    if key.startswith("fixed:"):
        try:
            w = float(key.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad fixed weight in {text!r}") from None
        return WeightScheduleParams(1.0, 0.0, 0.0, 0.0, fixed=w)
    raise ValueError(f"unknown schedule {text!r}; use cmu, acmu, log or fixed:W")


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def nbm_weight(params: WeightScheduleParams, n: float, t: float) -> float:
    if params.fixed is not None:
        return params.fixed
    return params.a * _sigmoid(params.b * (t - (params.c * n + params.d)))


def combine_ws(p_s: GoalPosterior, p_d: GoalPosterior, w_d: float) -> GoalPosterior:
    if len(p_s.probs) != len(p_d.probs):
        raise ValueError("posteriors cover different goal sets")
    if not 0.0 <= w_d <= 1.0:
        raise ValueError("w_d must lie in [0, 1]")
    if w_d == 0.0:
        return p_s
    if w_d == 1.0:
        return p_d
    w_s = 1.0 - w_d
    return GoalPosterior(tuple(w_s * a + w_d * b for a, b in zip(p_s.probs, p_d.probs)), 0.0)


def combine_tb(p_s: GoalPosterior, p_d: GoalPosterior, w_d: float, tie_epsilon: float = 1e-9) -> GoalPosterior:
    if tie_epsilon <= 0:
        raise ValueError("tie_epsilon must be positive")
    if len(argmax_set(p_s.probs, tie_epsilon)) == 1:
        return p_s
    return combine_ws(p_s, p_d, w_d)


@dataclass(frozen=True)
class HybridConfig:
    meta: str = "ws"
    schedule: WeightScheduleParams = PRESETS["log"]
    tie_epsilon: float = 1e-9

    def __post_init__(self):
        if self.meta not in ("ws", "tb"):
            raise ValueError(f"unknown meta-model {self.meta!r}")
        if self.tie_epsilon <= 0:
            raise ValueError("tie_epsilon must be positive")


def combine(config: HybridConfig, p_s: GoalPosterior, p_d: GoalPosterior, n: float, t: float) -> GoalPosterior:
    w = nbm_weight(config.schedule, n, t)
    if config.meta == "ws":
        return combine_ws(p_s, p_d, w)
    return combine_tb(p_s, p_d, w, config.tie_epsilon)


def combine_series(
    config: HybridConfig, prap: Sequence[GoalPosterior], nbm: Sequence[GoalPosterior], n: float
) -> list[GoalPosterior]:
    """Combine two aligned per-timestep series (index = t)."""
    if len(prap) != len(nbm):
        raise ValueError("series lengths differ")
    return [combine(config, a, b, n, t) for t, (a, b) in enumerate(zip(prap, nbm))]
