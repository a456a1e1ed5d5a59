"""Online-recognition evaluation over a dataset manifest with small-n CV folds."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..hybrid import PRESETS, WeightScheduleParams, nbm_weight
from ..io import dumps_json, load_setup, read_observations
from ..nbm import TrainingSequence, fit, state_matrix, states_along
from ..planner import SearchBudget
from ..prap import PlanCache, RecognitionConfig, RecognitionTask, recognize_online_gm, recognize_online_rg
from .cv import make_cv_plan
from .dataset import DatasetManifest, load_manifest, sequence_stats
from .metrics import LAMBDA_PERCENTS, eval_index

log = logging.getLogger(__name__)

PRAP_METHODS = ("rg", "gm")
HYBRID_METHODS = ("ws", "tb")
ALL_METHODS = PRAP_METHODS + ("nbm",) + HYBRID_METHODS


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: Path
    methods: tuple[str, ...] = ("gm", "nbm", "ws", "tb")
    n_values: tuple[int, ...] = (1, 3, 5)
    schedule: WeightScheduleParams = PRESETS["log"]
    seed: int = 0
    prap_base: str | None = None  # planning recognizer feeding ws/tb
    recognition: RecognitionConfig = RecognitionConfig(budget=SearchBudget(30.0), anytime=False)
    alpha: float = 1.0
    tie_epsilon: float = 1e-9
    jobs: int = 1

    def __post_init__(self):
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {', '.join(ALL_METHODS)}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n values must be positive")
        if self.prap_base is not None and self.prap_base not in PRAP_METHODS:
            raise ValueError("prap_base must be rg or gm")

    def base(self) -> str:
        if self.prap_base:
            return self.prap_base
        if "gm" in self.methods or "rg" not in self.methods:
            return "gm"
        return "rg"

    def prap_needed(self) -> list[str]:
        need = [m for m in PRAP_METHODS if m in self.methods]
        if any(m in HYBRID_METHODS for m in self.methods) and self.base() not in need:
            need.append(self.base())
        return need


@dataclass
class Cell:
    method: str
    n: int
    percent: int
    accuracy: float
    fold_count: int


@dataclass
class AccuracyReport:
    cells: list[Cell] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    planner_calls: dict[str, int] = field(default_factory=dict)
    cache_hits: dict[str, int] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["method,n,lambda,accuracy,fold_count"]
        for c in self.cells:
            lines.append(f"{c.method},{c.n},{c.percent / 100:.6f},{c.accuracy:.6f},{c.fold_count}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "meta": self.meta,
            "planner_calls": self.planner_calls,
            "cache_hits": self.cache_hits,
            "errors": self.errors,
            "sequence_stats": self.stats,
            "cells": [
                {"method": c.method, "n": c.n, "lambda": round(c.percent / 100, 6), "accuracy": c.accuracy, "fold_count": c.fold_count}
                for c in self.cells
            ],
        }

    def lookup(self, method: str, n: int) -> dict[int, float]:
        return {c.percent: c.accuracy for c in self.cells if c.method == method and c.n == n}


# --- planning traces (optionally in worker processes) -----------------------

_WORKER_STATE: dict = {}


def _setup_for(domain: str, problem: str, goals: str):
    key = (domain, problem, goals)
    if key not in _WORKER_STATE:
        _WORKER_STATE[key] = (load_setup(domain, problem, goals), PlanCache())
    return _WORKER_STATE[key]


def _prap_job(args):
    """Posterior rows for one problem: (probs matrix | None, calls, hits, error)."""
    method, domain, problem, goals, obs_path, timesteps, config = args
    try:
        setup, cache = _setup_for(domain, problem, goals)
        obs = read_observations(obs_path, setup.problem)
        task = RecognitionTask(setup.problem, setup.goals, setup.priors, obs, setup.goal_names)
        if method == "gm":
            trace = recognize_online_gm(task, config, cache=cache, timesteps=timesteps)
        else:
            trace = recognize_online_rg(task, config, timesteps=timesteps)
        by_t = {st.t: st.posterior.probs for st in trace.steps}
        probs = np.array([by_t[t] for t in timesteps], dtype=float)
        return probs, trace.planner_calls, trace.cache_hits, None
    except Exception as exc:  # recorded per problem, never dropped
        return None, 0, 0, f"{type(exc).__name__}: {exc}"


# --- vectorized scoring -----------------------------------------------------


def _correct(probs: np.ndarray, truth: np.ndarray, eps: float) -> np.ndarray:
    top = probs.max(axis=1)
    ties = (top[:, None] - probs <= eps).sum(axis=1)
    return (ties == 1) & (probs.argmax(axis=1) == truth)


def _unique(probs: np.ndarray, eps: float) -> np.ndarray:
    top = probs.max(axis=1)
    return (top[:, None] - probs <= eps).sum(axis=1) == 1


def _normalize_rows(log_raw: np.ndarray) -> np.ndarray:
    top = log_raw.max(axis=1, keepdims=True)
    z = top + np.log(np.exp(log_raw - top).sum(axis=1, keepdims=True))
    return np.exp(log_raw - z)


def run_experiment(config: ExperimentConfig) -> AccuracyReport:
    manifest: DatasetManifest = load_manifest(config.manifest)
    manifest.validate()
    entries = manifest.problems
    if len(entries) < 2:
        raise ValueError("at least two problems are needed for cross-validation")
    report = AccuracyReport()
    _WORKER_STATE.clear()  # each run plans from scratch
    domain = str(manifest.path(manifest.domain))
    groups = {(str(manifest.path(e.problem)), str(manifest.path(e.goals))) for e in entries}
    needs_nbm = any(m in ("nbm",) + HYBRID_METHODS for m in config.methods)
    if needs_nbm and len(groups) > 1:
        raise ValueError("NBM-based methods need every problem to share one problem template and goal set")

    setups = {g: load_setup(domain, *g) for g in sorted(groups)}
    R = len(entries)
    truth_by_problem = np.array([e.true_goal for e in entries])
    obs_seqs, lengths, bad = [], [], set()
    for r, e in enumerate(entries):
        setup = setups[(str(manifest.path(e.problem)), str(manifest.path(e.goals)))]
        try:
            obs = read_observations(manifest.path(e.observations), setup.problem)
        except Exception as exc:
            report.errors.append({"problem": e.id, "stage": "observations", "error": str(exc)})
            bad.add(r)
            obs = None
        obs_seqs.append(obs)
        lengths.append(len(obs) if obs is not None else 0)

    # rows: one per (problem, evaluated timestep)
    timesteps = [sorted({eval_index(T, p) for p in LAMBDA_PERCENTS}) for T in lengths]
    row_of: list[dict[int, int]] = []
    row_problem: list[int] = []
    row_t: list[int] = []
    for r, ts in enumerate(timesteps):
        row_of.append({})
        for t in ts:
            row_of[r][t] = len(row_t)
            row_problem.append(r)
            row_t.append(t)
    M = len(row_t)
    row_problem_arr = np.array(row_problem)
    truth = truth_by_problem[row_problem_arr]
    valid_row = np.array([r not in bad for r in row_problem], dtype=bool)
    goal_count = len(next(iter(setups.values())).goals)

    prap: dict[str, np.ndarray] = {}
    for method in config.prap_needed():
        mat = np.full((M, goal_count), np.nan)
        jobs = []
        for r, e in enumerate(entries):
            if r in bad:
                continue
            jobs.append((r, (method, domain, str(manifest.path(e.problem)), str(manifest.path(e.goals)),
                             str(manifest.path(e.observations)), timesteps[r], config.recognition)))
        if config.jobs > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(_prap_job, [j for _, j in jobs], chunksize=4))
        else:
            results = [_prap_job(j) for _, j in jobs]
        calls = hits = 0
        for (r, _), (probs, c, h, err) in zip(jobs, results):
            calls += c
            hits += h
            if err is not None:
                report.errors.append({"problem": entries[r].id, "stage": method, "error": err})
                continue
            for k, t in enumerate(timesteps[r]):
                mat[row_of[r][t]] = probs[k]
        prap[method] = mat
        report.planner_calls[method] = calls
        report.cache_hits[method] = hits
        log.info("%s traces done: %d planner calls (%d cache hits)", method, calls, hits)

    x_rows = None
    train_states: list[tuple | None] = [None] * R
    setup0 = next(iter(setups.values()))
    if needs_nbm:
        x_rows = np.zeros((M, len(setup0.problem.fluents)), dtype=np.uint8)
        for r, obs in enumerate(obs_seqs):
            if obs is None:
                continue
            try:
                states = states_along(setup0.problem, obs.actions)
            except Exception as exc:
                report.errors.append({"problem": entries[r].id, "stage": "states", "error": str(exc)})
                bad.add(r)
                continue
            train_states[r] = states
            sel = [row_of[r][t] for t in timesteps[r]]
            x_rows[sel] = state_matrix([states[t] for t in timesteps[r]], len(setup0.problem.fluents))
        valid_row = np.array([r not in bad for r in row_problem], dtype=bool)
    log_prior = np.log(np.asarray(setup0.priors, dtype=float)) if needs_nbm else None

    prap_correct = {}
    for m, mat in prap.items():
        ok = valid_row & ~np.isnan(mat).any(axis=1)
        safe = np.where(ok[:, None], mat, 0.0)
        prap_correct[m] = _correct(safe, truth, config.tie_epsilon) & ok

    for n in config.n_values:
        plan = make_cv_plan(R, n, config.seed)
        sums = {m: np.zeros(len(LAMBDA_PERCENTS)) for m in config.methods}
        weights = np.array([nbm_weight(config.schedule, n, t) for t in row_t]) if needs_nbm else None
        for fold in plan.folds:
            correct = {m: prap_correct[m] for m in PRAP_METHODS if m in config.methods}
            if needs_nbm:
                seqs = [TrainingSequence(train_states[r], int(entries[r].true_goal)) for r in fold.training if train_states[r] is not None]
                if not seqs:
                    raise ValueError("a fold has no usable training sequence")
                model = fit(seqs, len(setup0.problem.fluents), config.alpha, n_goals=goal_count)
                p_nbm = _normalize_rows(model.log_likelihood_matrix(x_rows) + log_prior[None, :])
                if "nbm" in config.methods:
                    correct["nbm"] = _correct(p_nbm, truth, config.tie_epsilon) & valid_row
                if any(m in HYBRID_METHODS for m in config.methods):
                    base = prap[config.base()]
                    ok = valid_row & ~np.isnan(base).any(axis=1)
                    p_s = np.where(ok[:, None], base, 0.0)
                    w = weights[:, None]
                    p_ws = (1.0 - w) * p_s + w * p_nbm
                    if "ws" in config.methods:
                        correct["ws"] = _correct(p_ws, truth, config.tie_epsilon) & ok
                    if "tb" in config.methods:
                        p_tb = np.where(_unique(p_s, config.tie_epsilon)[:, None], p_s, p_ws)
                        correct["tb"] = _correct(p_tb, truth, config.tie_epsilon) & ok
            val = fold.validation
            for j, pct in enumerate(LAMBDA_PERCENTS):
                rows = [row_of[r][eval_index(lengths[r], pct)] for r in val]
                for m in config.methods:
                    sums[m][j] += float(np.mean(correct[m][rows]))
        for m in config.methods:
            for j, pct in enumerate(LAMBDA_PERCENTS):
                report.cells.append(Cell(m, n, pct, float(sums[m][j] / plan.k), plan.k))

    order = {m: i for i, m in enumerate(config.methods)}
    report.cells.sort(key=lambda c: (order[c.method], config.n_values.index(c.n), c.percent))
    stats = sequence_stats(manifest, goal_count)
    names = setup0.goal_names
    report.stats = {names[g]: v for g, v in stats.items()}
    report.meta = {
        "manifest": manifest.name,
        "problems": R,
        "methods": list(config.methods),
        "n_values": list(config.n_values),
        "seed": config.seed,
        "prap_base": config.base() if any(m in HYBRID_METHODS for m in config.methods) else None,
        "mode": config.recognition.mode,
        "beta": config.recognition.beta,
        "alpha": config.alpha,
    }
    return report


def write_report(report: AccuracyReport, csv_path, json_path=None) -> None:
    Path(csv_path).write_text(report.to_csv(), encoding="utf-8")
    if json_path is not None:
        Path(json_path).write_text(dumps_json(report.to_dict()), encoding="utf-8")
