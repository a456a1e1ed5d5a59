"""Command-line entry point: ``planrecog <subcommand> ...``.

Exit status: 0 on success, 1 on domain errors (unsolvable goals, truncated
samples, malformed inputs), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .io import dumps_json, load_setup, read_observations
from .planner import SearchBudget, solve

log = logging.getLogger("planrecog")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class DomainFailure(Exception):
    pass


@dataclass(frozen=True)
class GlobalConfig:
    seed: int = 0
    timeout: float = 30.0
    expansions: int | None = None
    mode: str = "satisficing"
    verbosity: str = "WARNING"

    def budget(self) -> SearchBudget:
        return SearchBudget(self.timeout, self.expansions)

    @classmethod
    def from_args(cls, args) -> "GlobalConfig":
        timeout = getattr(args, "timeout", 30.0)
        expansions = getattr(args, "expansions", None)
        if timeout is not None and timeout < 0:
            raise UsageError("--timeout must be non-negative")
        if expansions is not None and expansions < 0:
            raise UsageError("--expansions must be non-negative")
        return cls(
            seed=getattr(args, "seed", 0),
            timeout=timeout,
            expansions=expansions,
            mode=getattr(args, "mode", "satisficing"),
            verbosity=os.environ.get("PLANRECOG_LOG", "WARNING").upper(),
        )


def _setup_logging(level: str) -> None:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("planrecog").setLevel(getattr(logging, level, logging.WARNING))


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _add_search(p: argparse.ArgumentParser, mode_default: str = "satisficing") -> None:
    p.add_argument("--mode", choices=("optimal", "satisficing"), default=mode_default)
    p.add_argument("--timeout", type=float, default=30.0, help="wall-clock seconds per planner call")
    p.add_argument("--expansions", type=int, default=None, help="expansion cap per planner call")
    p.add_argument("--anytime", action=argparse.BooleanOptionalAction, default=True,
                   help="keep improving satisficing plans until the budget runs out")


# --- subcommands ------------------------------------------------------------


def cmd_plan(args, cfg: GlobalConfig) -> int:
    from .pddl import load_grounded

    problem = load_grounded(args.domain, args.problem)
    kw = {"anytime": args.anytime} if cfg.mode == "satisficing" else {}
    res = solve(problem, cfg.mode, cfg.budget(), **kw)
    if not res.solved:
        print(f"; {res.status.value} after {res.expansions} expansions", file=sys.stderr)
        return EXIT_DOMAIN
    lines = [problem.actions[a].name for a in res.plan.steps]
    lines.append(f"; cost = {res.plan.cost:g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _recognition_config(args, cfg: GlobalConfig):
    from .prap import RecognitionConfig

    return RecognitionConfig(
        beta=args.beta,
        mode=cfg.mode,
        budget=cfg.budget(),
        tie_epsilon=args.tie_epsilon,
        anytime=args.anytime,
        force_apply=args.force_apply,
    )


def cmd_recognize(args, cfg: GlobalConfig) -> int:
    from .hybrid import HybridConfig, combine, parse_schedule
    from .nbm import load as load_model, states_along
    from .prap import RecognitionTask, recognize_online

    setup = load_setup(args.domain, args.problem_template, args.goals)
    obs = read_observations(args.obs, setup.problem)
    task = RecognitionTask(setup.problem, setup.goals, setup.priors, obs, setup.goal_names)
    rconf = _recognition_config(args, cfg)

    method = args.method
    base = args.prap_base if method in ("ws", "tb") else method
    out: dict = {}
    trace = None
    if base in ("rg", "gm"):
        trace = recognize_online(task, base, rconf)
        out = trace.to_dict(include_timing=args.timing)
    if method in ("nbm", "ws", "tb"):
        if not args.nbm_model:
            raise UsageError(f"--method {method} needs --nbm-model")
        model = load_model(args.nbm_model)
        if model.fluent_count != len(setup.problem.fluents) or model.goal_count != len(setup.goals):
            raise DomainFailure("NBM model does not match the grounded problem or goal set")
        nb = model.predict_many(states_along(setup.problem, obs.actions, force=args.force_apply), setup.priors)
        if method == "nbm":
            out = {"method": "nbm", "goals": list(setup.goal_names), "steps": []}
            for t, post in enumerate(nb):
                out["steps"].append({"t": t, "probabilities": dict(zip(setup.goal_names, post.probs))})
        else:
            hconf = HybridConfig(meta=method, schedule=parse_schedule(args.schedule), tie_epsilon=args.tie_epsilon)
            n = args.n if args.n is not None else model.n_sequences
            out["method"] = method
            out["prap_base"] = base
            for st, post_d in zip(out["steps"], nb):
                post_s = trace.steps[st["t"]].posterior
                mixed = combine(hconf, post_s, post_d, n, st["t"])
                st["prap_probabilities"] = st.pop("probabilities")
                st["nbm_probabilities"] = dict(zip(setup.goal_names, post_d.probs))
                st["probabilities"] = dict(zip(setup.goal_names, mixed.probs))
    _write_text(args.out, dumps_json(out))

    if trace is not None:
        unsolvable = _unsolvable_goals(trace, base)
        if len(unsolvable) == len(setup.goals):
            for name, why in unsolvable.items():
                print(f"goal {name}: {why}", file=sys.stderr)
            return EXIT_DOMAIN
    return EXIT_OK


def _unsolvable_goals(trace, method: str) -> dict[str, str]:
    """Goals for which no recorded planner call found a plan."""
    out = {}
    costed = [st for st in trace.steps if st.costs is not None]
    if not costed:
        return out
    for k, name in enumerate(trace.goal_names):
        pairs = [st.costs[k] for st in costed]
        if all(c.with_obs == float("inf") and c.without_obs == float("inf") for c in pairs):
            statuses = sorted({c.with_status for c in pairs} | {c.without_status for c in pairs})
            out[name] = "no plan found (" + ", ".join(statuses) + ")"
    return out


def cmd_train_nbm(args, cfg: GlobalConfig) -> int:
    from .bench.dataset import load_manifest
    from .nbm import TrainingSequence, fit, save, states_along

    manifest = load_manifest(args.dataset)
    manifest.validate()
    if not manifest.problems:
        raise DomainFailure("dataset has no sequences")
    setups = {}
    seqs = []
    for e in manifest.problems:
        key = (str(manifest.path(e.problem)), str(manifest.path(e.goals)))
        if key not in setups:
            setups[key] = load_setup(manifest.path(manifest.domain), *key)
        if len(setups) > 1:
            raise DomainFailure("all sequences must share one problem template and goal set")
        setup = setups[key]
        obs = read_observations(manifest.path(e.observations), setup.problem)
        seqs.append(TrainingSequence(states_along(setup.problem, obs.actions), e.true_goal))
    setup = next(iter(setups.values()))
    model = fit(
        seqs,
        len(setup.problem.fluents),
        args.alpha,
        n_goals=len(setup.goals),
        goal_names=setup.goal_names,
        fluent_names=[f.name for f in setup.problem.fluents],
    )
    save(model, args.out)
    log.info("trained on %d sequences", len(seqs))
    return EXIT_OK


def cmd_sample(args, cfg: GlobalConfig) -> int:
    from .bench.sampling import sample_to_dir
    from .io import load_goals

    if args.goal_index == "all":
        if not args.goals:
            raise UsageError("--goal-index all needs --goals")
        indices = list(range(len(load_goals(args.goals).names)))
    else:
        try:
            indices = [int(k) for k in args.goal_index.split(",")]
        except ValueError:
            raise UsageError(f"bad --goal-index {args.goal_index!r}") from None
    if not 0.0 <= args.p <= 1.0:
        raise UsageError("--p must lie in [0, 1]")
    if args.count < 1:
        raise UsageError("--count must be positive")
    path = sample_to_dir(
        args.domain,
        args.problem,
        args.out_dir,
        goals_path=args.goals,
        goal_indices=indices,
        p=args.p,
        seed=cfg.seed,
        count=args.count,
        replan=args.replan,
        max_length=args.max_length,
        budget=cfg.budget(),
    )
    log.info("manifest written to %s", path)
    return EXIT_OK


def cmd_eval(args, cfg: GlobalConfig) -> int:
    from .bench.experiment import ExperimentConfig, run_experiment, write_report
    from .hybrid import parse_schedule
    from .prap import RecognitionConfig

    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    try:
        n_values = tuple(int(x) for x in args.n.split(","))
    except ValueError:
        raise UsageError(f"bad --n list {args.n!r}") from None
    rconf = RecognitionConfig(
        beta=args.beta, mode=cfg.mode, budget=cfg.budget(), tie_epsilon=args.tie_epsilon, anytime=args.anytime
    )
    try:
        config = ExperimentConfig(
            manifest=Path(args.manifest),
            methods=methods,
            n_values=n_values,
            schedule=parse_schedule(args.schedule),
            seed=cfg.seed,
            prap_base=args.prap_base,
            recognition=rconf,
            alpha=args.alpha,
            tie_epsilon=args.tie_epsilon,
            jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(config)
    write_report(report, args.out, args.report_json)
    for err in report.errors:
        print(f"{err['problem']}: {err['stage']}: {err['error']}", file=sys.stderr)
    return EXIT_OK


def cmd_gen_domain(args, cfg: GlobalConfig) -> int:
    if args.kind == "buc":
        from .bench.buc import write_buc

        paths = write_buc(args.out_dir)
    else:
        from .bench.logistics import write_logistics

        paths = write_logistics(args.out_dir, num_goals=args.goals, seed=cfg.seed)
    for key, p in paths.items():
        log.info("%s: %s", key, p)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planrecog", description="Goal recognition toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("plan", help="solve a PDDL problem")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    _add_search(p, "optimal")
    p.add_argument("--out", default=None, help="plan file (default: stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("recognize", help="online goal recognition over an observation file")
    p.add_argument("--method", choices=("rg", "gm", "nbm", "ws", "tb"), required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--problem-template", required=True)
    p.add_argument("--goals", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    _add_search(p)
    p.add_argument("--tie-epsilon", type=float, default=1e-9)
    p.add_argument("--force-apply", action="store_true", help="apply inapplicable observations anyway")
    p.add_argument("--nbm-model", default=None)
    p.add_argument("--schedule", default="fixed:0.5", help="cmu | acmu | log | fixed:W")
    p.add_argument("--n", type=int, default=None, help="training-set size for the schedule (default: from model)")
    p.add_argument("--prap-base", choices=("rg", "gm"), default="gm")
    p.add_argument("--timing", action="store_true", help="include wall-clock times in the trace")
    p.add_argument("--out", default=None, help="trace JSON (default: stdout)")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("train-nbm", help="fit a Naive Bayes model on a dataset")
    p.add_argument("--dataset", required=True, help="manifest JSON")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_nbm)

    p = sub.add_parser("sample", help="sample observation sequences")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--goals", default=None, help="goal set (default: the problem's own goal)")
    p.add_argument("--goal-index", default="0", help="index, comma list, or 'all'")
    p.add_argument("--p", type=float, default=0.5, help="probability of following the plan")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-length", type=int, default=None)
    p.add_argument("--replan", choices=("auto", "optimal", "satisficing"), default="auto")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--expansions", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="cross-validated online accuracy report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--methods", default="gm,nbm,ws,tb")
    p.add_argument("--n", default="1,3,5")
    p.add_argument("--schedule", default="log")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tie-epsilon", type=float, default=1e-9)
    p.add_argument("--prap-base", choices=("rg", "gm"), default=None)
    p.add_argument("--mode", choices=("optimal", "satisficing"), default="satisficing")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--expansions", type=int, default=None)
    p.add_argument("--anytime", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV report")
    p.add_argument("--report-json", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-domain", help="write a built-in benchmark")
    p.add_argument("kind", choices=("buc", "logistics"))
    p.add_argument("--goals", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen_domain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    from .bench.dataset import ManifestError
    from .nbm import ModelFormatError
    from .pddl import GroundingError, PddlError
    from .prap import ObservationError
    from .sampler import GoalUnreachableError, TruncatedError

    try:
        cfg = GlobalConfig.from_args(args)
        _setup_logging(cfg.verbosity)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"planrecog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"planrecog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PddlError, GroundingError, ObservationError, ManifestError, ModelFormatError,
            TruncatedError, GoalUnreachableError, DomainFailure, ValueError) as exc:
        print(f"planrecog: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
