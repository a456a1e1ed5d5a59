"""Bernoulli Naive Bayes over planning-state fluents."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import PlanningProblem, State, apply, force_apply, applicable
from .prap import GoalPosterior, normalize_log

FORMAT_NAME = "planrecog-nbm"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class TrainingSequence:
    states: tuple[State, ...]
    goal_label: int

    def __post_init__(self):
        if not self.states:
            raise ValueError("training sequence has no states")
        if self.goal_label is None:
            raise ValueError("training sequence is unlabeled")


def states_along(problem: PlanningProblem, steps: Sequence[int], force: bool = False) -> tuple[State, ...]:
    """Init plus every state reached by applying ``steps`` in order."""
    s = problem.init
    out = [s]
    for a in steps:
        act = problem.actions[a]
        if not applicable(s, act) and force:
            s = force_apply(s, act)
        else:
            s = apply(s, act)
        out.append(s)
    return tuple(out)


def state_matrix(states: Sequence[State], n_fluents: int) -> np.ndarray:
    """Rows of 0/1 fluent values, one per state."""
    nbytes = max(1, (n_fluents + 7) // 8)
    buf = b"".join(int(s).to_bytes(nbytes, "little") for s in states)
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8).reshape(len(states), nbytes), axis=1, bitorder="little")
    return bits[:, :n_fluents]


@dataclass
class NaiveBayesModel:
    p_true: np.ndarray  # (goals, fluents) smoothed P(F_i = 1 | g)
    alpha: float
    class_counts: tuple[int, ...]
    n_sequences: int = 0
    goal_names: tuple[str, ...] = ()
    fluent_names: tuple[str, ...] = ()
    _log_true: np.ndarray = field(init=False, repr=False, compare=False)
    _log_false: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.p_true = np.asarray(self.p_true, dtype=float)
        if self.p_true.ndim != 2:
            raise ValueError("p_true must be a goals x fluents matrix")
        if np.any(self.p_true <= 0) or np.any(self.p_true >= 1):
            raise ValueError("parameters must lie strictly inside (0, 1)")
        if not self.goal_names:
            self.goal_names = tuple(f"g{i + 1}" for i in range(self.goal_count))
        self._log_true = np.log(self.p_true)
        self._log_false = np.log1p(-self.p_true)

    @property
    def goal_count(self) -> int:
        return self.p_true.shape[0]

    @property
    def fluent_count(self) -> int:
        return self.p_true.shape[1]

    @property
    def log_p_true(self) -> np.ndarray:
        return self._log_true

    @property
    def log_p_false(self) -> np.ndarray:
        return self._log_false

    def log_likelihoods(self, states: Sequence[State]) -> np.ndarray:
        """(states, goals) matrix of log P(state | g) over the full universe."""
        return self.log_likelihood_matrix(state_matrix(states, self.fluent_count))

    def log_likelihood_matrix(self, x: np.ndarray) -> np.ndarray:
        """Same as :meth:`log_likelihoods` for a precomputed 0/1 state matrix."""
        base = self._log_false.sum(axis=1)
        return base[None, :] + np.asarray(x, dtype=float) @ (self._log_true - self._log_false).T

    def predict_many(self, states: Sequence[State], priors: Sequence[float] | None = None) -> list[GoalPosterior]:
        if not states:
            return []
        with np.errstate(divide="ignore"):
            log_prior = np.log(np.asarray(self._priors(priors), dtype=float))
        ll = self.log_likelihoods(states) + log_prior[None, :]
        return [normalize_log(row) for row in ll]

    def predict(self, state: State, priors: Sequence[float] | None = None) -> GoalPosterior:
        return self.predict_many([state], priors)[0]

    def _priors(self, priors):
        if priors is None:
            return [1.0 / self.goal_count] * self.goal_count
        if len(priors) != self.goal_count:
            raise ValueError("one prior per goal is required")
        return priors

    # serialization
    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "alpha": self.alpha,
            "n_sequences": self.n_sequences,
            "class_counts": list(self.class_counts),
            "goal_names": list(self.goal_names),
            "fluent_names": list(self.fluent_names),
            "p_true": [[float(v) for v in row] for row in self.p_true],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NaiveBayesModel":
        if not isinstance(data, dict) or data.get("format") != FORMAT_NAME:
            raise ModelFormatError("not a Naive Bayes model file")
        if data.get("version") != FORMAT_VERSION:
            raise ModelVersionError(f"unsupported model version {data.get('version')!r} (expected {FORMAT_VERSION})")
        try:
            return cls(
                p_true=np.array(data["p_true"], dtype=float).reshape(len(data["goal_names"]), -1)
                if data["p_true"]
                else np.zeros((0, 0)),
                alpha=float(data["alpha"]),
                class_counts=tuple(int(c) for c in data["class_counts"]),
                n_sequences=int(data["n_sequences"]),
                goal_names=tuple(data["goal_names"]),
                fluent_names=tuple(data["fluent_names"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model: {exc}") from exc

    def __eq__(self, other) -> bool:
        if not isinstance(other, NaiveBayesModel):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.class_counts == other.class_counts
            and self.n_sequences == other.n_sequences
            and self.goal_names == other.goal_names
            and self.fluent_names == other.fluent_names
            and self.p_true.shape == other.p_true.shape
            and bool(np.array_equal(self.p_true, other.p_true))
        )


def fit(
    sequences: Sequence[TrainingSequence],
    n_fluents: int,
    alpha: float = 1.0,
    n_goals: int | None = None,
    goal_names: Sequence[str] = (),
    fluent_names: Sequence[str] = (),
) -> NaiveBayesModel:
    """Count-based fit; every state of every sequence is one training row."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not sequences:
        raise ValueError("at least one training sequence is required")
    if n_goals is None:
        n_goals = len(goal_names) if goal_names else max(s.goal_label for s in sequences) + 1
    counts = np.zeros((n_goals, n_fluents), dtype=np.int64)
    rows = np.zeros(n_goals, dtype=np.int64)
    for seq in sequences:
        g = seq.goal_label
        if not isinstance(g, (int, np.integer)) or not 0 <= g < n_goals:
            raise ValueError(f"unknown goal index {g!r}")
        x = state_matrix(seq.states, n_fluents)
        counts[g] += x.sum(axis=0, dtype=np.int64)
        rows[g] += len(seq.states)
    p = (counts + alpha) / (rows[:, None] + 2.0 * alpha)
    return NaiveBayesModel(
        p_true=p,
        alpha=float(alpha),
        class_counts=tuple(int(r) for r in rows),
        n_sequences=len(sequences),
        goal_names=tuple(goal_names),
        fluent_names=tuple(fluent_names),
    )


def predict(model: NaiveBayesModel, state: State, priors: Sequence[float] | None = None) -> GoalPosterior:
    return model.predict(state, priors)


def serialize(model: NaiveBayesModel) -> bytes:
    return (json.dumps(model.to_dict(), indent=1) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> NaiveBayesModel:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"unreadable model stream: {exc}") from exc
    return NaiveBayesModel.from_dict(obj)


def save(model: NaiveBayesModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load(path) -> NaiveBayesModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def constant_model(n_goals: int, n_fluents: int, value: float = 0.5, **kw) -> NaiveBayesModel:
    """A model with every parameter equal; its posterior is always the prior."""
    return NaiveBayesModel(np.full((n_goals, n_fluents), value), alpha=kw.pop("alpha", 1.0), class_counts=(0,) * n_goals, **kw)


__all__ = [
    "TrainingSequence", "NaiveBayesModel", "ModelFormatError", "ModelVersionError", "fit", "predict",
    "serialize", "deserialize", "save", "load", "states_along", "state_matrix", "constant_model",
]

