"""PDDL frontend: reader, parser, printer and grounder."""
from __future__ import annotations

from pathlib import Path

from .grounding import DEFAULT_MAX_ACTIONS, GroundingError, atom_name, ground, parse_atom_name
from .parser import ActionSchema, Atom, DomainAst, ProblemAst, parse_domain, parse_problem
from .printer import format_domain, format_problem
from .sexpr import PddlError, PddlSemanticError, PddlSyntaxError, UnsupportedFeatureError

__all__ = [
    "ActionSchema", "Atom", "DomainAst", "ProblemAst", "PddlError", "PddlSemanticError",
    "PddlSyntaxError", "UnsupportedFeatureError", "GroundingError", "DEFAULT_MAX_ACTIONS",
    "parse_domain", "parse_problem", "format_domain", "format_problem", "ground",
    "atom_name", "parse_atom_name", "load_domain", "load_problem", "load_grounded",
]


def load_domain(path) -> DomainAst:
    path = Path(path)
    return parse_domain(path.read_text(encoding="utf-8"), source=str(path))


def load_problem(path, domain: DomainAst | None = None) -> ProblemAst:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), source=str(path), domain=domain)


def load_grounded(domain_path, problem_path, extra_atoms=(), max_actions: int = DEFAULT_MAX_ACTIONS):
    dom = load_domain(domain_path)
    prob = load_problem(problem_path, dom)
    return ground(dom, prob, max_actions=max_actions, extra_atoms=extra_atoms)
