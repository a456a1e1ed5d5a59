"""Dataset manifests and sequence-length statistics.

Manifest schema (JSON, version 1; paths relative to the manifest file)::

    {
      "version": 1,
      "name": "...",
      "generator_seed": 7,
      "domain": "domain.pddl",
      "problems": [
        {"id": "seq_0_7_0", "problem": "problem.pddl", "goals": "goals.json",
         "true_goal": 0, "observations": "seq_0_7_0.txt"}
      ]
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..io import write_json

MANIFEST_VERSION = 1


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemEntry:
    id: str
    problem: str
    goals: str
    true_goal: int
    observations: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "problem": self.problem,
            "goals": self.goals,
            "true_goal": self.true_goal,
            "observations": self.observations,
        }


@dataclass
class DatasetManifest:
    domain: str
    problems: list[ProblemEntry] = field(default_factory=list)
    name: str = "dataset"
    generator_seed: int | None = None
    base_dir: Path = Path(".")

    def path(self, rel: str) -> Path:
        return (self.base_dir / rel).resolve()

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "name": self.name,
            "generator_seed": self.generator_seed,
            "domain": self.domain,
            "problems": [p.to_dict() for p in self.problems],
        }

    def validate(self) -> None:
        if not self.path(self.domain).is_file():
            raise ManifestError(f"domain file not found: {self.domain}")
        ids = set()
        for p in self.problems:
            if p.id in ids:
                raise ManifestError(f"duplicate problem id {p.id}")
            ids.add(p.id)
            for rel in (p.problem, p.goals, p.observations):
                if not self.path(rel).is_file():
                    raise ManifestError(f"{p.id}: file not found: {rel}")
            goals = json.loads(self.path(p.goals).read_text(encoding="utf-8")).get("goals", [])
            if not 0 <= p.true_goal < len(goals):
                raise ManifestError(f"{p.id}: true goal {p.true_goal} outside the goal set")

    def merged(self, entries) -> "DatasetManifest":
        """Copy with ``entries`` added (same id replaces), sorted by id."""
        by_id = {p.id: p for p in self.problems}
        for e in entries:
            by_id[e.id] = e
        return replace(self, problems=[by_id[k] for k in sorted(by_id, key=_natural_key)])


def _natural_key(text: str):
    return [int(part) if part.isdigit() else part for part in text.replace("-", "_").split("_")]


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    if data.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {data.get('version')!r}")
    try:
        problems = [
            ProblemEntry(str(p["id"]), p["problem"], p["goals"], int(p["true_goal"]), p["observations"])
            for p in data["problems"]
        ]
        return DatasetManifest(
            domain=data["domain"],
            problems=problems,
            name=data.get("name", "dataset"),
            generator_seed=data.get("generator_seed"),
            base_dir=path.parent,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: malformed manifest ({exc})") from exc


def save_manifest(path, manifest: DatasetManifest) -> None:
    write_json(path, manifest.to_dict())


def observation_length(path) -> int:
    n = 0
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.split("#", 1)[0].strip():
            n += 1
    return n


def sequence_stats(manifest: DatasetManifest, goal_count: int | None = None) -> dict[int, dict | None]:
    """Per true-goal index: count, mean, median and population stddev of lengths.

    Goals without sequences map to ``None`` when ``goal_count`` is given.
    """
    buckets: dict[int, list[int]] = {}
    for p in manifest.problems:
        buckets.setdefault(p.true_goal, []).append(observation_length(manifest.path(p.observations)))
    keys = range(goal_count) if goal_count is not None else sorted(buckets)
    out: dict[int, dict | None] = {}
    for g in keys:
        lengths = buckets.get(g)
        if not lengths:
            out[g] = None
            continue
        arr = np.asarray(lengths, dtype=float)
        out[g] = {
            "count": len(lengths),
            "mean": float(arr.mean()),
            "median": float(np.median(arr)),
            "stddev": float(arr.std()),
        }
    return out
