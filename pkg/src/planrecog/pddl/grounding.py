"""Instantiate action schemas over typed objects and prune by relaxed reachability."""
from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque
from typing import Iterable

from ..model import Fluent, GoalDescription, GroundAction, PlanningProblem, make_state
from .parser import Atom, DomainAst, ProblemAst, check_problem
from .sexpr import PddlSemanticError

DEFAULT_MAX_ACTIONS = 5_000_000


class GroundingError(Exception):
    pass


def atom_name(pred: str, args: Iterable[str]) -> str:
    return "(" + " ".join((pred, *args)) + ")"


def parse_atom_name(name: str) -> Atom:
    """Inverse of :func:`atom_name` (``"(at a b)"`` -> ``Atom("at", ("a", "b"))``)."""
    text = name.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ValueError(f"not a ground atom: {name!r}")
    parts = text[1:-1].lower().split()
    if not parts:
        raise ValueError(f"empty atom: {name!r}")
    return Atom(parts[0], tuple(parts[1:]))


def objects_by_type(domain: DomainAst, problem: ProblemAst) -> dict[str, list[str]]:
    objs = dict(domain.constants)
    objs.update(problem.objects)
    out: dict[str, list[str]] = defaultdict(list)
    for obj, typ in sorted(objs.items()):
        seen = set()
        t = typ
        while t not in seen:
            seen.add(t)
            out[t].append(obj)
            if t == "object":
                break
            t = domain.types.get(t, "object")
    return out


def _sub(atom: Atom, binding: dict[str, str]) -> tuple[str, tuple[str, ...]]:
    return atom.pred, tuple(binding.get(a, a) for a in atom.args)


def ground(
    domain: DomainAst,
    problem: ProblemAst,
    max_actions: int = DEFAULT_MAX_ACTIONS,
    extra_atoms: Iterable[str] = (),
) -> PlanningProblem:
    """Ground ``problem`` into a :class:`PlanningProblem`.

    Fluent and action ids follow lexicographic order of their names.  Facts of
    predicates that no action changes are compiled away; ``extra_atoms`` (names
    like ``"(at a b)"``) are forced into the fluent universe, which is how
    goal sets from outside the problem file get ids.
    """
    check_problem(problem, domain)
    by_type = objects_by_type(domain, problem)
    dynamic = set()
    for s in domain.actions:
        dynamic.update(a.pred for a in s.add)
        dynamic.update(a.pred for a in s.delete)
        dynamic.update(q.pred for _, q in s.cond)
    init = {(a.pred, a.args) for a in problem.init}
    static_true = {a for a in init if a[0] not in dynamic}

    total = 0
    for s in domain.actions:
        total += math.prod(len(by_type.get(t, ())) for _, t in s.params)
    if total > max_actions:
        raise GroundingError(f"grounding would create {total} actions (cap {max_actions})")

    candidates = []
    for s in domain.actions:
        names = [v for v, _ in s.params]
        domains = [by_type.get(t, []) for _, t in s.params]
        for combo in itertools.product(*domains):
            binding = dict(zip(names, combo))
            pre = []
            ok = True
            for atom in s.pre:
                g = _sub(atom, binding)
                if g[0] in dynamic:
                    pre.append(g)
                elif g not in static_true:
                    ok = False
                    break
            if not ok:
                continue
            cond = []
            adds = [_sub(a, binding) for a in s.add]
            for p, q in s.cond:
                gp, gq = _sub(p, binding), _sub(q, binding)
                if gp[0] in dynamic:
                    cond.append((gp, gq))
                elif gp in static_true:
                    adds.append(gq)
            if s.cost is None:
                cost = 1.0
            elif isinstance(s.cost, Atom):
                key = Atom(*_sub(s.cost, binding))
                if key not in problem.numeric_init:
                    raise PddlSemanticError(f"no value for {key} in :init", s.line, 0, problem.source)
                cost = problem.numeric_init[key]
            else:
                cost = float(s.cost)
            candidates.append(
                (s.name, combo, pre, adds, [_sub(a, binding) for a in s.delete], cond, cost)
            )

    reached = _relaxed_reachable({a for a in init if a[0] in dynamic}, candidates)
    live = [c for c in candidates if all(p in reached for p in c[2])]

    universe = set(reached)
    goal_atoms = [(a.pred, a.args) for a in problem.goal_pos]
    neg_atoms = [(a.pred, a.args) for a in problem.goal_neg]
    goal_pos_keep = [g for g in goal_atoms if not (g[0] not in dynamic and g in static_true)]
    neg_keep = [g for g in neg_atoms if g[0] in dynamic or g in static_true]
    universe.update(goal_pos_keep)
    universe.update(neg_keep)
    for name in extra_atoms:
        atom = parse_atom_name(name)
        if atom.pred not in domain.predicates:
            raise PddlSemanticError(f"undeclared predicate {atom.pred} in {name}", 0, 0, problem.source)
        universe.add((atom.pred, atom.args))

    fluent_names = sorted(atom_name(*a) for a in universe)
    fid = {n: i for i, n in enumerate(fluent_names)}

    def ids(atoms):
        return frozenset(fid[n] for n in (atom_name(*a) for a in atoms) if n in fid)

    ground_actions = []
    for schema, combo, pre, adds, dels, cond, cost in live:
        add = ids(adds)
        ground_actions.append(
            (
                atom_name(schema, combo),
                schema,
                combo,
                ids(pre),
                add,
                ids(dels) - add,
                tuple(
                    sorted(
                        (fid[atom_name(*p)], fid[atom_name(*q)])
                        for p, q in cond
                        if atom_name(*p) in fid and atom_name(*q) in fid
                    )
                ),
                cost,
            )
        )
    ground_actions.sort(key=lambda a: a[0])
    actions = tuple(
        GroundAction(id=i, name=n, pre=pre, add=add, delete=dele, cond_effects=cond, cost=cost, schema=sch, args=tuple(args))
        for i, (n, sch, args, pre, add, dele, cond, cost) in enumerate(ground_actions)
    )
    fluents = tuple(Fluent(i, n) for i, n in enumerate(fluent_names))
    init_ids = [fid[atom_name(*a)] for a in init if atom_name(*a) in fid]
    goal = GoalDescription(ids(goal_pos_keep), ids(neg_keep))
    return PlanningProblem(fluents, actions, make_state(init_ids), goal, name=problem.name)


def _relaxed_reachable(init_atoms, candidates):
    """Fixpoint of add effects (conditional ones included) ignoring deletes."""
    reached = set(init_atoms)
    waiting = defaultdict(list)
    unsat = []
    # relaxed ops: (preconditions, effects)
    ops = []
    for _, _, pre, adds, _, cond, _ in candidates:
        ops.append((set(pre), list(adds)))
        for p, q in cond:
            ops.append((set(pre) | {p}, [q]))
    queue = deque()
    for k, (pre, effs) in enumerate(ops):
        missing = [p for p in pre if p not in reached]
        unsat.append(len(missing))
        for p in missing:
            waiting[p].append(k)
        if not missing:
            queue.extend(effs)
    while queue:
        atom = queue.popleft()
        if atom in reached:
            # init atoms are already marked; their waiters were never registered
            continue
        reached.add(atom)
        for k in waiting.pop(atom, ()):
            unsat[k] -= 1
            if unsat[k] == 0:
                queue.extend(ops[k][1])
    return reached
