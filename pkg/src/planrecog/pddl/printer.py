"""Pretty-printers producing PDDL that :mod:`.parser` reads back identically."""
from __future__ import annotations

from .parser import ActionSchema, Atom, DomainAst, ProblemAst


def _typed(pairs) -> str:
    return " ".join(f"{name} - {typ}" for name, typ in pairs)


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _conj(parts: list[str], indent: str) -> str:
    if not parts:
        return "(and)"
    if len(parts) == 1:
        return parts[0]
    return "(and\n" + "".join(f"{indent}  {p}\n" for p in parts) + f"{indent})"


def format_action(a: ActionSchema) -> str:
    effects = [str(x) for x in a.add]
    effects += [f"(not {x})" for x in a.delete]
    effects += [f"(when {p} {q})" for p, q in a.cond]
    if a.cost is not None:
        amount = str(a.cost) if isinstance(a.cost, Atom) else _fmt_num(a.cost)
        effects.append(f"(increase (total-cost) {amount})")
    return (
        f"  (:action {a.name}\n"
        f"    :parameters ({_typed(a.params)})\n"
        f"    :precondition {_conj([str(x) for x in a.pre], '    ')}\n"
        f"    :effect {_conj(effects, '    ')})\n"
    )


def format_domain(d: DomainAst) -> str:
    out = [f"(define (domain {d.name})\n"]
    if d.requirements:
        out.append(f"  (:requirements {' '.join(d.requirements)})\n")
    if d.types:
        out.append(f"  (:types {_typed(d.types.items())})\n")
    if d.constants:
        out.append(f"  (:constants {_typed(d.constants.items())})\n")
    preds = " ".join(f"({name}{' ' if params else ''}{_typed(params)})" for name, params in d.predicates.items())
    out.append(f"  (:predicates {preds})\n")
    if d.functions:
        funcs = " ".join(f"({name}{' ' if params else ''}{_typed(params)})" for name, params in d.functions.items())
        out.append(f"  (:functions {funcs} - number)\n")
    out.extend(format_action(a) for a in d.actions)
    out.append(")\n")
    return "".join(out)


def format_problem(p: ProblemAst) -> str:
    out = [f"(define (problem {p.name})\n", f"  (:domain {p.domain_name})\n"]
    if p.objects:
        out.append(f"  (:objects {_typed(p.objects.items())})\n")
    facts = [str(a) for a in p.init]
    facts += [f"(= {f} {_fmt_num(v)})" for f, v in p.numeric_init.items()]
    out.append("  (:init\n" + "".join(f"    {f}\n" for f in facts) + "  )\n")
    goal = [str(a) for a in p.goal_pos] + [f"(not {a})" for a in p.goal_neg]
    out.append(f"  (:goal {_conj(goal, '  ')})\n")
    if p.metric:
        out.append("  (:metric minimize (total-cost))\n")
    out.append(")\n")
    return "".join(out)
