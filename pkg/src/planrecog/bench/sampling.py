"""Write sampled observation sequences plus manifest entries to a directory."""
from __future__ import annotations

import logging
import os
from pathlib import Path

import numpy as np

from ..io import GoalSpec, load_goals, save_goals, write_observations
from ..model import GoalDescription
from ..pddl import atom_name, ground, load_domain, load_problem
from ..sampler import SamplerConfig, init_sampler_model, sample_sequence
from .dataset import DatasetManifest, ProblemEntry, load_manifest, save_manifest

log = logging.getLogger(__name__)

REPLAN_THRESHOLDS = {"optimal": 2**62, "satisficing": 0, "auto": 10_000}


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _rel(path: Path, base: Path) -> str:
    return Path(os.path.relpath(Path(path).resolve(), base.resolve())).as_posix()


def sample_to_dir(
    domain_path,
    problem_path,
    out_dir,
    goals_path=None,
    goal_indices=(0,),
    p: float = 0.5,
    seed: int = 0,
    count: int = 1,
    replan: str = "auto",
    max_length: int | None = None,
    manifest_name: str = "manifest.json",
    budget=None,
) -> Path:
    """Sample ``count`` sequences per goal index; returns the manifest path.

    Files are named ``seq_K_S_i.txt``.  An existing manifest in ``out_dir``
    is extended (entries with the same id are replaced).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dom = load_domain(domain_path)
    prob = load_problem(problem_path, dom)
    if goals_path is None:
        spec = GoalSpec(
            ("goal",),
            (tuple(atom_name(a.pred, a.args) for a in prob.goal_pos),),
            (tuple(atom_name(a.pred, a.args) for a in prob.goal_neg),),
        )
        goals_path = out / "goals.json"
        save_goals(goals_path, spec)
    else:
        spec = load_goals(goals_path)
    grounded = ground(dom, prob, extra_atoms=spec.atoms())
    goals = spec.resolve(grounded)
    grounded = grounded.with_goal(GoalDescription(frozenset(), frozenset()))

    manifest_path = out / manifest_name
    if manifest_path.exists():
        manifest = load_manifest(manifest_path)
    else:
        manifest = DatasetManifest(domain=_rel(domain_path, out), name=out.name, generator_seed=seed, base_dir=out)
    extra = {} if budget is None else {"budget": budget}
    entries = []
    for k in goal_indices:
        if not 0 <= k < len(goals):
            raise ValueError(f"goal index {k} outside the goal set (size {len(goals)})")
        model = init_sampler_model(grounded, goals[k], derive_seed(seed, k))
        plan_cache: dict = {}
        for i in range(count):
            cfg = SamplerConfig(
                p_plan_action=p,
                seed=derive_seed(seed, k, i),
                max_length=max_length,
                replan_threshold=REPLAN_THRESHOLDS[replan],
                **extra,
            )
            seq = sample_sequence(grounded, goals[k], model, cfg, plan_cache)
            name = f"seq_{k}_{seed}_{i}"
            write_observations(out / f"{name}.txt", grounded, seq, header=f"goal {spec.names[k]} p={p} seed={seed}")
            entries.append(ProblemEntry(name, _rel(problem_path, out), _rel(goals_path, out), k, f"{name}.txt"))
            log.info("%s: %d observations", name, len(seq))
    manifest = manifest.merged(entries)
    save_manifest(manifest_path, manifest)
    return manifest_path
