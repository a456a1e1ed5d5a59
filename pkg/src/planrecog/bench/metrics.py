"""Online-recognition accuracy over a fixed grid of observation fractions."""
from __future__ import annotations

from typing import Sequence

from ..prap import GoalPosterior

# percentages; integers keep floor(T * lambda) exact
LAMBDA_PERCENTS: tuple[int, ...] = (1, 2, 3, 4, 5) + tuple(range(10, 100, 5))


def lambda_values() -> list[float]:
    return [p / 100 for p in LAMBDA_PERCENTS]


def eval_index(length: int, percent: int) -> int:
    """Timestep evaluated for a sequence of ``length`` observations at ``percent``%."""
    if length < 0 or not 0 <= percent <= 100:
        raise ValueError("bad length or percentage")
    return length * percent // 100


def percent_of(lam: float) -> int:
    pct = round(lam * 100)
    if abs(pct - lam * 100) > 1e-9:
        raise ValueError(f"lambda {lam} is not a whole percentage")
    return int(pct)


def uniquely_correct(post: GoalPosterior, true_goal: int, tie_epsilon: float = 1e-9) -> bool:
    return post.argmax_set(tie_epsilon) == frozenset([true_goal])


def accuracy(
    series: Sequence[Sequence[GoalPosterior]],
    true_goals: Sequence[int],
    lam: float,
    tie_epsilon: float = 1e-9,
) -> float:
    """Mean strict-argmax accuracy.

    ``series[r][t]`` is the posterior of problem ``r`` after ``t``
    observations (``len(series[r]) == T_r + 1``).
    """
    if len(series) != len(true_goals):
        raise ValueError("one true goal per problem is required")
    if not series:
        raise ValueError("no problems to score")
    pct = percent_of(lam)
    hits = 0
    for posts, g in zip(series, true_goals):
        t = eval_index(len(posts) - 1, pct)
        hits += uniquely_correct(posts[t], g, tie_epsilon)
    return hits / len(series)
