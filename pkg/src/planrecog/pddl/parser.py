"""Parser for the supported PDDL subset.

Supported requirements: ``:strips :typing :negative-preconditions`` (negated
literals in goals only), ``:conditional-effects`` (``(when (p ..) (q ..))``
with one positive literal on each side) and ``:action-costs``.  Anything else
is rejected with :class:`UnsupportedFeatureError`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .sexpr import (
    PddlSemanticError,
    PddlSyntaxError,
    SList,
    Sym,
    UnsupportedFeatureError,
    read,
)

SUPPORTED_REQUIREMENTS = frozenset(
    {":strips", ":typing", ":negative-preconditions", ":conditional-effects", ":action-costs"}
)
_UNSUPPORTED_KEYWORDS = {
    "or", "forall", "exists", "imply", "either", "decrease", "assign", "scale-up", "scale-down",
    ":durative-action", ":derived", ":constraints", ":process", ":event",
    "preference", "sometime", "always",
}


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.pred,) + self.args) + ")"


CostTerm = Union[float, Atom]


@dataclass
class ActionSchema:
    name: str
    params: list[tuple[str, str]]
    pre: list[Atom] = field(default_factory=list)
    add: list[Atom] = field(default_factory=list)
    delete: list[Atom] = field(default_factory=list)
    cond: list[tuple[Atom, Atom]] = field(default_factory=list)
    cost: CostTerm | None = None
    line: int = 0


@dataclass
class DomainAst:
    name: str
    requirements: list[str] = field(default_factory=list)
    types: dict[str, str] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)
    predicates: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    functions: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    actions: list[ActionSchema] = field(default_factory=list)
    source: str = "<string>"


@dataclass
class ProblemAst:
    name: str
    domain_name: str
    objects: dict[str, str] = field(default_factory=dict)
    init: list[Atom] = field(default_factory=list)
    numeric_init: dict[Atom, float] = field(default_factory=dict)
    goal_pos: list[Atom] = field(default_factory=list)
    goal_neg: list[Atom] = field(default_factory=list)
    metric: str | None = None
    source: str = "<string>"


class _Reader:
    def __init__(self, source: str):
        self.source = source

    def syntax(self, msg, node) -> PddlSyntaxError:
        return PddlSyntaxError(msg, getattr(node, "line", 0), getattr(node, "col", 0), self.source)

    def unsupported(self, feature, node) -> UnsupportedFeatureError:
        return UnsupportedFeatureError(feature, getattr(node, "line", 0), getattr(node, "col", 0), self.source)

    def semantic(self, msg, node) -> PddlSemanticError:
        return PddlSemanticError(msg, getattr(node, "line", 0), getattr(node, "col", 0), self.source)

    def expect_list(self, node, what) -> SList:
        if not isinstance(node, list):
            raise self.syntax(f"expected {what}, found '{node}'", node)
        return node

    def expect_sym(self, node, what) -> Sym:
        if isinstance(node, list):
            raise self.syntax(f"expected {what}, found a list", node)
        return node

    def header(self, tree, kind):
        tree = self.expect_list(tree, "(define ...)")
        if len(tree) < 2 or tree[0] != "define":
            raise self.syntax("expected (define ...)", tree)
        head = self.expect_list(tree[1], f"({kind} <name>)")
        if len(head) != 2 or head[0] != kind:
            raise self.syntax(f"expected ({kind} <name>)", head)
        return self.expect_sym(head[1], "a name"), tree[2:]

    def typed_list(self, items, allow_vars: bool) -> list[tuple[str, str]]:
        out: list[tuple[str, str]] = []
        pending: list[Sym] = []
        i = 0
        while i < len(items):
            tok = items[i]
            if isinstance(tok, list):
                if tok and tok[0] == "either":
                    raise self.unsupported("either", tok)
                raise self.syntax("unexpected list in typed list", tok)
            if tok == "-":
                if i + 1 >= len(items):
                    raise self.syntax("missing type after '-'", tok)
                typ = items[i + 1]
                if isinstance(typ, list):
                    if typ and typ[0] == "either":
                        raise self.unsupported("either", typ)
                    raise self.syntax("expected a type name", typ)
                if not pending:
                    raise self.syntax("'-' without preceding names", tok)
                out.extend((p, str(typ)) for p in pending)
                pending = []
                i += 2
                continue
            if allow_vars != tok.startswith("?"):
                kind = "variable" if allow_vars else "name"
                raise self.syntax(f"expected a {kind}, found '{tok}'", tok)
            pending.append(tok)
            i += 1
        out.extend((p, "object") for p in pending)
        return out

    def atom(self, node, variables: set[str] | None) -> Atom:
        node = self.expect_list(node, "an atom")
        if not node:
            raise self.syntax("empty atom", node)
        head = node[0]
        if isinstance(head, list):
            raise self.syntax("atom must start with a predicate name", node)
        if head in _UNSUPPORTED_KEYWORDS:
            raise self.unsupported(str(head), head)
        if head == "=":
            raise self.unsupported("equality", head)
        if head in ("and", "not", "when", "increase"):
            raise self.syntax(f"'{head}' not allowed here", head)
        args = []
        for a in node[1:]:
            a = self.expect_sym(a, "an argument")
            if a.startswith("?") and variables is not None and a not in variables:
                raise self.semantic(f"undeclared variable {a}", a)
            if a.startswith("?") and variables is None:
                raise self.syntax(f"variable {a} outside an action", a)
            args.append(str(a))
        return Atom(str(head), tuple(args))

    def conjuncts(self, node):
        if isinstance(node, list) and node and node[0] == "and":
            out = []
            for child in node[1:]:
                out.extend(self.conjuncts(child))
            return out
        if isinstance(node, list) and not node:
            return []
        return [node]

    def literal(self, node, variables):
        """Return (atom, negated)."""
        node = self.expect_list(node, "a literal")
        if node and node[0] == "not":
            if len(node) != 2:
                raise self.syntax("(not ...) takes exactly one argument", node)
            return self.atom(node[1], variables), True
        return self.atom(node, variables), False


def parse_domain(text: str, source: str = "<string>") -> DomainAst:
    r = _Reader(source)
    name, sections = r.header(read(text, source), "domain")
    dom = DomainAst(name=str(name), source=source)
    for sec in sections:
        sec = r.expect_list(sec, "a domain section")
        if not sec:
            raise r.syntax("empty section", sec)
        key = sec[0]
        if key == ":requirements":
            for req in sec[1:]:
                req = r.expect_sym(req, "a requirement")
                if req not in SUPPORTED_REQUIREMENTS:
                    raise r.unsupported(str(req), req)
                dom.requirements.append(str(req))
        elif key == ":types":
            for child, parent in r.typed_list(sec[1:], allow_vars=False):
                dom.types[str(child)] = parent
        elif key == ":constants":
            for obj, typ in r.typed_list(sec[1:], allow_vars=False):
                dom.constants[str(obj)] = typ
        elif key == ":predicates":
            for p in sec[1:]:
                p = r.expect_list(p, "a predicate declaration")
                if not p:
                    raise r.syntax("empty predicate declaration", p)
                dom.predicates[str(p[0])] = [(str(v), t) for v, t in r.typed_list(p[1:], allow_vars=True)]
        elif key == ":functions":
            _parse_functions(r, dom, sec)
        elif key == ":action":
            dom.actions.append(_parse_action(r, dom, sec))
        elif key in _UNSUPPORTED_KEYWORDS:
            raise r.unsupported(str(key), key)
        else:
            raise r.syntax(f"unknown domain section '{key}'", key)
    _check_domain(r, dom)
    return dom


def _parse_functions(r: _Reader, dom: DomainAst, sec) -> None:
    items = sec[1:]
    i = 0
    while i < len(items):
        f = items[i]
        if isinstance(f, list):
            if not f:
                raise r.syntax("empty function declaration", f)
            dom.functions[str(f[0])] = [(str(v), t) for v, t in r.typed_list(f[1:], allow_vars=True)]
            i += 1
        elif f == "-":
            typ = items[i + 1] if i + 1 < len(items) else None
            if typ != "number":
                raise r.unsupported(f"function type {typ}", f)
            i += 2
        else:
            raise r.syntax("expected a function declaration", f)


def _parse_action(r: _Reader, dom: DomainAst, sec) -> ActionSchema:
    if len(sec) < 2:
        raise r.syntax("action without a name", sec)
    name = r.expect_sym(sec[1], "an action name")
    schema = ActionSchema(name=str(name), params=[], line=sec.line)
    fields = sec[2:]
    if len(fields) % 2:
        raise r.syntax("action fields must be :keyword value pairs", sec)
    variables: set[str] = set()
    for key, value in zip(fields[::2], fields[1::2]):
        if key == ":parameters":
            value = r.expect_list(value, "a parameter list")
            schema.params = [(str(v), t) for v, t in r.typed_list(value, allow_vars=True)]
            variables = {v for v, _ in schema.params}
        elif key == ":precondition":
            for lit in r.conjuncts(value):
                lit = r.expect_list(lit, "a precondition literal")
                if lit and lit[0] == "not":
                    raise UnsupportedFeatureError(
                        "negative-preconditions in action preconditions", lit.line, lit.col, r.source
                    )
                schema.pre.append(r.atom(lit, variables))
        elif key == ":effect":
            for eff in r.conjuncts(value):
                _parse_effect(r, schema, eff, variables)
        else:
            raise r.syntax(f"unknown action field '{key}'", key)
    return schema


def _parse_effect(r: _Reader, schema: ActionSchema, eff, variables) -> None:
    eff = r.expect_list(eff, "an effect")
    if not eff:
        raise r.syntax("empty effect", eff)
    head = eff[0]
    if head == "when":
        if len(eff) != 3:
            raise r.syntax("(when <condition> <effect>) expected", eff)
        conds = r.conjuncts(eff[1])
        effs = r.conjuncts(eff[2])
        if len(conds) != 1 or len(effs) != 1:
            raise UnsupportedFeatureError(
                "conditional effect with more than one literal", eff.line, eff.col, r.source
            )
        cond, cneg = r.literal(conds[0], variables)
        res, rneg = r.literal(effs[0], variables)
        if cneg or rneg:
            raise UnsupportedFeatureError(
                "negated literal in a conditional effect", eff.line, eff.col, r.source
            )
        schema.cond.append((cond, res))
    elif head == "increase":
        if len(eff) != 3:
            raise r.syntax("(increase (total-cost) <amount>) expected", eff)
        target = r.expect_list(eff[1], "(total-cost)")
        if len(target) != 1 or target[0] != "total-cost":
            raise UnsupportedFeatureError(f"numeric fluent {target[0] if target else '()'}", eff.line, eff.col, r.source)
        amount = eff[2]
        if isinstance(amount, list):
            term = r.atom(amount, variables)
        else:
            try:
                term = float(amount)
            except ValueError:
                raise r.syntax(f"bad cost amount '{amount}'", amount) from None
            if term < 0:
                raise r.semantic("negative action cost", amount)
        if schema.cost is not None:
            raise r.semantic("action increases total-cost twice", eff)
        schema.cost = term
    elif head == "not":
        atom, _ = r.literal(eff, variables)
        schema.delete.append(atom)
    elif head in _UNSUPPORTED_KEYWORDS:
        raise r.unsupported(str(head), head)
    else:
        schema.add.append(r.atom(eff, variables))


def _check_domain(r: _Reader, dom: DomainAst) -> None:
    known_types = {"object"} | set(dom.types) | set(dom.types.values())
    for t in list(dom.types.values()) + list(dom.constants.values()):
        if t not in known_types:
            raise r.semantic(f"unknown type {t}", None)
    for schema in dom.actions:
        for _, t in schema.params:
            if t not in known_types:
                raise PddlSemanticError(f"unknown type {t} in action {schema.name}", schema.line, 0, r.source)
        atoms = schema.pre + schema.add + schema.delete + [a for pq in schema.cond for a in pq]
        for atom in atoms:
            decl = dom.predicates.get(atom.pred)
            if decl is None:
                raise PddlSemanticError(f"undeclared predicate {atom.pred} in action {schema.name}", schema.line, 0, r.source)
            if len(decl) != len(atom.args):
                raise PddlSemanticError(
                    f"predicate {atom.pred} expects {len(decl)} arguments, got {len(atom.args)}",
                    schema.line, 0, r.source,
                )
            for arg in atom.args:
                if not arg.startswith("?") and arg not in dom.constants:
                    raise PddlSemanticError(f"undeclared constant {arg} in action {schema.name}", schema.line, 0, r.source)
        if isinstance(schema.cost, Atom) and schema.cost.pred not in dom.functions:
            raise PddlSemanticError(f"undeclared function {schema.cost.pred}", schema.line, 0, r.source)


def parse_problem(text: str, source: str = "<string>", domain: DomainAst | None = None) -> ProblemAst:
    """Parse a problem file.  With ``domain`` given, objects and predicates are checked too."""
    r = _Reader(source)
    name, sections = r.header(read(text, source), "problem")
    prob = ProblemAst(name=str(name), domain_name="", source=source)
    init_nodes = []
    for sec in sections:
        sec = r.expect_list(sec, "a problem section")
        if not sec:
            raise r.syntax("empty section", sec)
        key = sec[0]
        if key == ":domain":
            prob.domain_name = str(r.expect_sym(sec[1], "a domain name"))
        elif key == ":requirements":
            for req in sec[1:]:
                if req not in SUPPORTED_REQUIREMENTS:
                    raise r.unsupported(str(req), req)
        elif key == ":objects":
            for obj, typ in r.typed_list(sec[1:], allow_vars=False):
                prob.objects[str(obj)] = typ
        elif key == ":init":
            for fact in sec[1:]:
                fact = r.expect_list(fact, "an initial fact")
                if fact and fact[0] == "=":
                    if len(fact) != 3:
                        raise r.syntax("(= (<function> ...) <number>) expected", fact)
                    fterm = r.atom(fact[1], None)
                    try:
                        prob.numeric_init[fterm] = float(fact[2])
                    except (TypeError, ValueError):
                        raise r.syntax("numeric value expected", fact) from None
                elif fact and fact[0] == "not":
                    raise r.syntax("negated facts are not allowed in :init", fact)
                else:
                    prob.init.append(r.atom(fact, None))
                    init_nodes.append(fact)
        elif key == ":goal":
            if len(sec) != 2:
                raise r.syntax("(:goal <formula>) expected", sec)
            for lit in r.conjuncts(sec[1]):
                atom, neg = r.literal(lit, None)
                (prob.goal_neg if neg else prob.goal_pos).append(atom)
        elif key == ":metric":
            if len(sec) != 3 or sec[1] != "minimize" or sec[2] != ["total-cost"]:
                raise UnsupportedFeatureError("metric other than (minimize (total-cost))", sec.line, sec.col, source)
            prob.metric = "minimize total-cost"
        elif key in _UNSUPPORTED_KEYWORDS:
            raise r.unsupported(str(key), key)
        else:
            raise r.syntax(f"unknown problem section '{key}'", key)
    if not prob.domain_name:
        raise r.syntax("problem does not name its domain", None)
    if domain is not None:
        check_problem(prob, domain, init_nodes)
    return prob


def check_problem(prob: ProblemAst, domain: DomainAst, nodes=None) -> None:
    known = set(prob.objects) | set(domain.constants)
    known_types = {"object"} | set(domain.types) | set(domain.types.values())
    for obj, typ in prob.objects.items():
        if typ not in known_types:
            raise PddlSemanticError(f"object {obj} has unknown type {typ}", 0, 0, prob.source)
    if prob.domain_name != domain.name:
        raise PddlSemanticError(
            f"problem is for domain {prob.domain_name}, not {domain.name}", 0, 0, prob.source
        )
    atoms = prob.init + prob.goal_pos + prob.goal_neg
    for k, atom in enumerate(atoms):
        node = nodes[k] if nodes is not None and k < len(nodes) else None
        line = getattr(node, "line", 0)
        col = getattr(node, "col", 0)
        decl = domain.predicates.get(atom.pred)
        if decl is None:
            raise PddlSemanticError(f"undeclared predicate {atom.pred}", line, col, prob.source)
        if len(decl) != len(atom.args):
            raise PddlSemanticError(f"predicate {atom.pred} expects {len(decl)} arguments", line, col, prob.source)
        for arg in atom.args:
            if arg not in known:
                raise PddlSemanticError(f"undeclared object {arg} in {atom}", line, col, prob.source)
