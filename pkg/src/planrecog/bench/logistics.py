"""Parameterized logistics benchmark: trucks drive within cities, airplanes fly
between airports, goals are package delivery configurations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..io import GoalSpec, write_json

DOMAIN = """\
; logistics with typed vehicles and explicit road / air links
(define (domain logistics)
  (:requirements :strips :typing)
  (:types truck airplane - vehicle
          package vehicle - physobj
          airport - location
          location city - object)
  (:predicates
    (at ?x - physobj ?l - location)
    (in ?p - package ?v - vehicle)
    (in-city ?l - location ?c - city)
    (road ?from ?to - location)
    (air-link ?from ?to - airport))

  (:action load-truck
    :parameters (?p - package ?t - truck ?l - location)
    :precondition (and (at ?t ?l) (at ?p ?l))
    :effect (and (in ?p ?t) (not (at ?p ?l))))

  (:action unload-truck
    :parameters (?p - package ?t - truck ?l - location)
    :precondition (and (at ?t ?l) (in ?p ?t))
    :effect (and (at ?p ?l) (not (in ?p ?t))))

  (:action load-airplane
    :parameters (?p - package ?a - airplane ?l - airport)
    :precondition (and (at ?a ?l) (at ?p ?l))
    :effect (and (in ?p ?a) (not (at ?p ?l))))

  (:action unload-airplane
    :parameters (?p - package ?a - airplane ?l - airport)
    :precondition (and (at ?a ?l) (in ?p ?a))
    :effect (and (at ?p ?l) (not (in ?p ?a))))

  (:action drive-truck
    :parameters (?t - truck ?from ?to - location ?c - city)
    :precondition (and (at ?t ?from) (road ?from ?to) (in-city ?from ?c) (in-city ?to ?c))
    :effect (and (at ?t ?to) (not (at ?t ?from))))

  (:action fly-airplane
    :parameters (?a - airplane ?from ?to - airport)
    :precondition (and (at ?a ?from) (air-link ?from ?to))
    :effect (and (at ?a ?to) (not (at ?a ?from))))
)
"""


@dataclass(frozen=True)
class LogisticsParams:
    cities: int = 2
    locations_per_city: int = 5  # the first one is the airport
    trucks_per_city: int = 3
    airplanes: int = 1
    packages: int = 3
    min_deliveries: int = 2
    max_deliveries: int = 3


@dataclass(frozen=True)
class LogisticsBenchmark:
    domain: str
    problem: str
    goals: GoalSpec


def _loc(c: int, k: int) -> str:
    return f"apt{c + 1}" if k == 0 else f"loc{c + 1}-{k}"


def gen_logistics(num_goals: int = 10, seed: int = 0, params: LogisticsParams = LogisticsParams()) -> LogisticsBenchmark:
    if num_goals < 1:
        raise ValueError("num_goals must be positive")
    rng = np.random.default_rng(seed)
    P = params
    cities = [f"city{c + 1}" for c in range(P.cities)]
    locs = {c: [_loc(c, k) for k in range(P.locations_per_city)] for c in range(P.cities)}
    all_locs = [l for c in range(P.cities) for l in locs[c]]
    airports = [locs[c][0] for c in range(P.cities)]
    trucks = [f"truck{c + 1}-{k + 1}" for c in range(P.cities) for k in range(P.trucks_per_city)]
    planes = [f"plane{k + 1}" for k in range(P.airplanes)]
    packages = [f"pkg{k + 1}" for k in range(P.packages)]

    facts = []
    for c in range(P.cities):
        facts += [f"(in-city {l} {cities[c]})" for l in locs[c]]
        facts += [f"(road {a} {b})" for a, b in itertools.permutations(locs[c], 2)]
    facts += [f"(air-link {a} {b})" for a, b in itertools.permutations(airports, 2)]
    for c in range(P.cities):
        for k in range(P.trucks_per_city):
            facts.append(f"(at truck{c + 1}-{k + 1} {locs[c][int(rng.integers(P.locations_per_city))]})")
    for a in planes:
        facts.append(f"(at {a} {airports[int(rng.integers(len(airports)))]})")
    start = {}
    for p in packages:
        start[p] = all_locs[int(rng.integers(len(all_locs)))]
        facts.append(f"(at {p} {start[p]})")

    objects = (
        f"{' '.join(cities)} - city {' '.join(airports)} - airport "
        f"{' '.join(l for l in all_locs if l not in airports)} - location "
        f"{' '.join(trucks)} - truck {' '.join(planes)} - airplane {' '.join(packages)} - package"
    )
    body = "\n    ".join(facts)
    problem = (
        f"(define (problem logistics-s{seed})\n  (:domain logistics)\n  (:objects {objects})\n"
        f"  (:init\n    {body})\n  (:goal (and))\n)\n"
    )

    goals: list[tuple[str, ...]] = []
    seen = set()
    attempts = 0
    while len(goals) < num_goals:
        attempts += 1
        if attempts > 10_000:
            raise ValueError("could not draw enough distinct goals; enlarge the problem")
        k = int(rng.integers(P.min_deliveries, min(P.max_deliveries, P.packages) + 1))
        chosen = sorted(rng.choice(P.packages, size=k, replace=False).tolist())
        atoms = []
        for i in chosen:
            p = packages[i]
            dest = [l for l in all_locs if l != start[p]]
            atoms.append(f"(at {p} {dest[int(rng.integers(len(dest)))]})")
        key = tuple(sorted(atoms))
        if key in seen:
            continue
        seen.add(key)
        goals.append(key)
    names = tuple(f"g{i + 1}" for i in range(num_goals))
    spec = GoalSpec(names, tuple(goals), ((),) * num_goals, None)
    return LogisticsBenchmark(DOMAIN, problem, spec)


def write_logistics(out_dir, num_goals: int = 10, seed: int = 0, params: LogisticsParams = LogisticsParams()) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = gen_logistics(num_goals, seed, params)
    paths = {"domain": out / "domain.pddl", "problem": out / "problem.pddl", "goals": out / "goals.json"}
    paths["domain"].write_text(b.domain, encoding="utf-8")
    paths["problem"].write_text(b.problem, encoding="utf-8")
    write_json(paths["goals"], b.goals.to_dict())
    return paths
