"""Parser for the ``:strips`` + ``:typing`` fragment of PDDL.

Anything outside that fragment is rejected with :class:`UnsupportedFeature`
rather than silently mis-read. Identifiers are lower-cased; the original
spelling of object and action names is kept for display.
"""

from __future__ import annotations

import re
from typing import Iterator

from ..errors import DomainMismatch, PDDLSyntaxError, PDDLTypeError, UnsupportedFeature
from .model import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    Domain,
    Literal,
    PredicateSignature,
    ProblemInstance,
    TypeHierarchy,
)

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})

# keyword -> requirement flag reported to the user
_UNSUPPORTED_SECTIONS = {
    ":constants": ":constants",
    ":functions": ":numeric-fluents",
    ":durative-action": ":durative-actions",
    ":derived": ":derived-predicates",
    ":axiom": ":derived-predicates",
    ":metric": ":numeric-fluents",
    ":constraints": ":constraints",
    ":timed-initial-literals": ":timed-initial-literals",
}
_UNSUPPORTED_PRE = {
    "not": ":negative-preconditions",
    "or": ":disjunctive-preconditions",
    "imply": ":disjunctive-preconditions",
    "exists": ":existential-preconditions",
    "forall": ":universal-preconditions",
    "=": ":equality",
    "<": ":numeric-fluents",
    ">": ":numeric-fluents",
    "<=": ":numeric-fluents",
    ">=": ":numeric-fluents",
}
_UNSUPPORTED_EFF = {
    "when": ":conditional-effects",
    "forall": ":conditional-effects",
    "increase": ":numeric-fluents",
    "decrease": ":numeric-fluents",
    "assign": ":numeric-fluents",
    "scale-up": ":numeric-fluents",
    "scale-down": ":numeric-fluents",
}

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


class Sym(str):
    """A symbol token remembering its source position and original spelling."""

    line: int
    col: int
    raw: str

    def __new__(cls, raw: str, line: int, col: int):
        obj = super().__new__(cls, raw.lower())
        obj.raw = raw
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group()
        col = m.start() - line_start + 1
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        yield tok, line, col


def read_sexpr(text: str) -> SList:
    """Read exactly one top-level s-expression."""
    stack: list[SList] = []
    top: SList | None = None
    last = (1, 1)
    for tok, line, col in _tokens(text):
        last = (line, col)
        if tok == "(":
            node = SList()
            node.line, node.col = line, col
            if stack:
                stack[-1].append(node)
            elif top is not None:
                raise PDDLSyntaxError("unexpected content after top-level expression", line, col, "end of input")
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced ')'", line, col, "'('")
            node = stack.pop()
            if not stack:
                top = node
        else:
            if not stack:
                raise PDDLSyntaxError(f"unexpected token {tok!r}", line, col, "'('")
            stack[-1].append(Sym(tok, line, col))
    if stack:
        raise PDDLSyntaxError("unexpected end of input", *last, expected="')'")
    if top is None:
        raise PDDLSyntaxError("empty input", 1, 1, "'(define'")
    return top


def _pos(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _expect_list(node, what: str, parent=None) -> SList:
    if not isinstance(node, SList):
        raise PDDLSyntaxError(f"expected {what}", *_pos(node if node is not None else parent), expected="'('")
    return node


def _expect_sym(node, what: str, parent=None) -> Sym:
    if not isinstance(node, Sym):
        raise PDDLSyntaxError(f"expected {what}", *_pos(node if node is not None else parent), expected=what)
    return node


def _head(node: SList) -> str:
    return node[0] if node and isinstance(node[0], Sym) else ""


def _typed_list(items, variables: bool) -> list[tuple[Sym, str]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out: list[tuple[Sym, str]] = []
    pending: list[Sym] = []
    i = 0
    while i < len(items):
        item = _expect_sym(items[i], "name")
        if item == "-":
            if i + 1 >= len(items):
                raise PDDLSyntaxError("dangling '-' in typed list", item.line, item.col, "type name")
            typ = items[i + 1]
            if isinstance(typ, SList):
                if _head(typ) == "either":
                    raise UnsupportedFeature("either", typ.line, typ.col)
                raise PDDLSyntaxError("expected type name", typ.line, typ.col, "type name")
            if not pending:
                raise PDDLSyntaxError("type without names", item.line, item.col, "name")
            out.extend((p, str(typ)) for p in pending)
            pending = []
            i += 2
            continue
        if variables and not item.startswith("?"):
            raise PDDLSyntaxError(f"expected variable, got {item.raw!r}", item.line, item.col, "?variable")
        if not variables and item.startswith("?"):
            raise PDDLSyntaxError(f"unexpected variable {item.raw!r}", item.line, item.col, "name")
        pending.append(item)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _check_header(tree: SList, kind: str) -> tuple[Sym, list]:
    if _head(tree) != "define":
        raise PDDLSyntaxError("expected (define ...)", tree.line, tree.col, "'define'")
    if len(tree) < 2:
        raise PDDLSyntaxError("missing header", tree.line, tree.col, f"({kind} <name>)")
    header = _expect_list(tree[1], f"({kind} <name>)", tree)
    if len(header) != 2 or _head(header) != kind:
        raise PDDLSyntaxError(f"malformed {kind} header", header.line, header.col, f"({kind} <name>)")
    return _expect_sym(header[1], f"{kind} name", header), tree[2:]


def _requirements(section: SList) -> tuple[str, ...]:
    reqs = []
    for r in section[1:]:
        r = _expect_sym(r, "requirement flag", section)
        if r not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedFeature(str(r), r.line, r.col)
        reqs.append(str(r))
    return tuple(reqs)


# -- domain ------------------------------------------------------------------------


def parse_domain(text: str) -> Domain:
    """Parse a PDDL domain in the supported STRIPS fragment."""
    tree = read_sexpr(text)
    name, sections = _check_header(tree, "domain")
    requirements: tuple[str, ...] = (":strips",)
    parents: dict[str, str | None] = {}
    predicates: dict[str, PredicateSignature] = {}
    raw_actions: list[SList] = []

    for sec in sections:
        sec = _expect_list(sec, "domain section", tree)
        key = _head(sec)
        if key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(_UNSUPPORTED_SECTIONS[key], sec.line, sec.col)
        if key == ":requirements":
            requirements = _requirements(sec)
        elif key == ":types":
            for tname, sup in _typed_list(sec[1:], variables=False):
                if tname == ROOT_TYPE:
                    if sup != ROOT_TYPE:
                        raise PDDLTypeError("type 'object' cannot have a supertype", tname.line, tname.col)
                    continue
                if sup != ROOT_TYPE and sup not in parents:
                    parents[sup] = ROOT_TYPE  # implicitly declared supertype
                current = parents.get(tname)
                if current is None or current == ROOT_TYPE:
                    parents[str(tname)] = sup
                elif sup not in (current, ROOT_TYPE):
                    raise PDDLTypeError(f"type {tname!r} declared with two supertypes", tname.line, tname.col)
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration", sec)
                pname = _expect_sym(p[0] if p else None, "predicate name", p)
                if pname in predicates:
                    raise PDDLTypeError(f"predicate {pname!r} declared twice", pname.line, pname.col)
                params = _typed_list(p[1:], variables=True)
                predicates[str(pname)] = PredicateSignature(
                    str(pname), tuple(t for _, t in params), tuple(str(v) for v, _ in params)
                )
        elif key == ":action":
            raw_actions.append(sec)
        else:
            raise PDDLSyntaxError(f"unknown domain section {key or '()'!r}", sec.line, sec.col, "domain section keyword")

    try:
        types = TypeHierarchy(parents)
    except PDDLTypeError as exc:
        raise PDDLTypeError(str(exc), tree.line, tree.col) from None
    for sig in predicates.values():
        for t in sig.param_types:
            if t not in types:
                raise PDDLTypeError(f"predicate {sig.name!r} uses undeclared type {t!r}")

    actions: list[ActionSchema] = []
    seen: set[str] = set()
    for sec in raw_actions:
        act = _parse_action(sec, types, predicates)
        if act.name in seen:
            raise PDDLTypeError(f"action {act.name!r} declared twice", sec.line, sec.col)
        seen.add(act.name)
        actions.append(act)

    return Domain(
        name=str(name),
        types=types,
        predicates=tuple(predicates.values()),
        actions=tuple(actions),
        requirements=requirements,
    )


def _parse_action(sec: SList, types: TypeHierarchy, predicates: dict[str, PredicateSignature]) -> ActionSchema:
    aname = _expect_sym(sec[1] if len(sec) > 1 else None, "action name", sec)
    fields: dict[str, object] = {}
    i = 2
    while i < len(sec):
        key = _expect_sym(sec[i], "action keyword", sec)
        if key not in (":parameters", ":precondition", ":effect"):
            raise PDDLSyntaxError(f"unknown action keyword {key.raw!r}", key.line, key.col, ":parameters, :precondition or :effect")
        if i + 1 >= len(sec):
            raise PDDLSyntaxError(f"missing value for {key}", key.line, key.col, "'('")
        fields[str(key)] = sec[i + 1]
        i += 2

    params: list[tuple[str, str]] = []
    var_types: dict[str, str] = {}
    if ":parameters" in fields:
        plist = _expect_list(fields[":parameters"], "parameter list", sec)
        for var, typ in _typed_list(plist, variables=True):
            if typ not in types:
                raise PDDLTypeError(f"undeclared type {typ!r} for {var.raw}", var.line, var.col)
            if var in var_types:
                raise PDDLTypeError(f"duplicate parameter {var.raw}", var.line, var.col)
            var_types[str(var)] = typ
            params.append((str(var), typ))

    def make_literal(node: SList) -> Literal:
        pname = _expect_sym(node[0] if node else None, "predicate name", node)
        if pname not in predicates:
            raise PDDLTypeError(f"undeclared predicate {pname.raw!r}", pname.line, pname.col)
        sig = predicates[pname]
        args = node[1:]
        if len(args) != sig.arity:
            raise PDDLTypeError(
                f"predicate {pname!r} takes {sig.arity} arguments, got {len(args)}", node.line, node.col
            )
        arg_types = []
        for a, expected in zip(args, sig.param_types):
            a = _expect_sym(a, "variable", node)
            if not a.startswith("?"):
                raise UnsupportedFeature(":constants", a.line, a.col)
            if a not in var_types:
                raise PDDLTypeError(f"variable {a.raw} is not a parameter of {aname.raw!r}", a.line, a.col)
            if not types.compatible(var_types[a], expected):
                raise PDDLTypeError(
                    f"{a.raw} of type {var_types[a]!r} does not fit {expected!r} in {pname!r}", a.line, a.col
                )
            arg_types.append(var_types[a])
        return Literal(str(pname), tuple(str(a) for a in args), tuple(arg_types))

    pre: list[Literal] = []
    if ":precondition" in fields:
        for node in _conjuncts(fields[":precondition"], sec):
            if _head(node) in _UNSUPPORTED_PRE:
                raise UnsupportedFeature(_UNSUPPORTED_PRE[_head(node)], node.line, node.col)
            lit = make_literal(node)
            if lit not in pre:
                pre.append(lit)

    adds: list[Literal] = []
    dels: list[Literal] = []
    if ":effect" in fields:
        for node in _conjuncts(fields[":effect"], sec):
            head = _head(node)
            if head in _UNSUPPORTED_EFF:
                raise UnsupportedFeature(_UNSUPPORTED_EFF[head], node.line, node.col)
            if head == "not":
                if len(node) != 2:
                    raise PDDLSyntaxError("malformed (not ...)", node.line, node.col, "(not (<atom>))")
                inner = _expect_list(node[1], "atom", node)
                lit = make_literal(inner)
                if lit not in dels:
                    dels.append(lit)
            else:
                lit = make_literal(node)
                if lit not in adds:
                    adds.append(lit)
    clash = set(adds) & set(dels)
    if clash:
        lit = sorted(clash, key=str)[0]
        raise PDDLTypeError(f"{lit} is both added and deleted by {aname.raw!r}", sec.line, sec.col)

    return ActionSchema(
        name=str(aname),
        params=tuple(params),
        preconditions=tuple(pre),
        add_effects=tuple(adds),
        del_effects=tuple(dels),
        display_name=aname.raw,
    )


def _conjuncts(node, parent) -> list[SList]:
    node = _expect_list(node, "formula", parent)
    if not node:
        return []
    if _head(node) == "and":
        out: list[SList] = []
        for child in node[1:]:
            out.extend(_conjuncts(child, node))
        return out
    return [node]


# -- problem -------------------------------------------------------------------------


def parse_problem(text: str, domain: Domain) -> ProblemInstance:
    """Parse a problem against an already-parsed domain, type-checking every atom."""
    tree = read_sexpr(text)
    name, sections = _check_header(tree, "problem")
    domain_name: Sym | None = None
    objects: dict[str, str] = {}
    display: dict[str, str] = {}
    init_nodes: list[SList] = []
    goal_nodes: list[SList] = []
    seen_goal = False

    for sec in sections:
        sec = _expect_list(sec, "problem section", tree)
        key = _head(sec)
        if key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(_UNSUPPORTED_SECTIONS[key], sec.line, sec.col)
        if key == ":domain":
            domain_name = _expect_sym(sec[1] if len(sec) > 1 else None, "domain name", sec)
        elif key == ":requirements":
            _requirements(sec)
        elif key == ":objects":
            for obj, typ in _typed_list(sec[1:], variables=False):
                if typ not in domain.types:
                    raise PDDLTypeError(f"undeclared type {typ!r} for object {obj.raw}", obj.line, obj.col)
                if obj in objects:
                    raise PDDLTypeError(f"object {obj.raw} declared twice", obj.line, obj.col)
                objects[str(obj)] = typ
                display[str(obj)] = obj.raw
        elif key == ":init":
            for node in sec[1:]:
                node = _expect_list(node, "init atom", sec)
                head = _head(node)
                if head == "=":
                    raise UnsupportedFeature(":numeric-fluents", node.line, node.col)
                if head == "not":
                    raise UnsupportedFeature(":negative-preconditions", node.line, node.col)
                init_nodes.append(node)
        elif key == ":goal":
            seen_goal = True
            if len(sec) > 2:
                raise PDDLSyntaxError("goal takes a single formula", sec.line, sec.col, "')'")
            if len(sec) == 2:
                for node in _conjuncts(sec[1], sec):
                    if _head(node) in _UNSUPPORTED_PRE:
                        raise UnsupportedFeature(_UNSUPPORTED_PRE[_head(node)], node.line, node.col)
                    goal_nodes.append(node)
        else:
            raise PDDLSyntaxError(f"unknown problem section {key or '()'!r}", sec.line, sec.col, "problem section keyword")

    if domain_name is None:
        raise PDDLSyntaxError("missing (:domain ...)", tree.line, tree.col, "(:domain <name>)")
    if domain_name != domain.name:
        raise DomainMismatch(f"problem is for domain {domain_name.raw!r}, got domain {domain.name!r}")
    if not seen_goal:
        raise PDDLSyntaxError("missing (:goal ...)", tree.line, tree.col, "(:goal ...)")

    def make_atom(node: SList) -> Atom:
        pname = _expect_sym(node[0] if node else None, "predicate name", node)
        if not domain.has_predicate(pname):
            raise PDDLTypeError(f"undeclared predicate {pname.raw!r}", pname.line, pname.col)
        sig = domain.predicate(pname)
        args = node[1:]
        if len(args) != sig.arity:
            raise PDDLTypeError(f"predicate {pname!r} takes {sig.arity} arguments, got {len(args)}", node.line, node.col)
        for a, expected in zip(args, sig.param_types):
            a = _expect_sym(a, "object name", node)
            if a.startswith("?"):
                raise PDDLSyntaxError(f"variable {a.raw} in ground atom", a.line, a.col, "object name")
            if a not in objects:
                raise PDDLTypeError(f"undeclared object {a.raw!r}", a.line, a.col)
            if not domain.types.is_subtype(objects[a], expected):
                raise PDDLTypeError(
                    f"object {a.raw!r} of type {objects[a]!r} is not a {expected!r} in {pname!r}", a.line, a.col
                )
        return Atom(str(pname), tuple(str(a) for a in args))

    return ProblemInstance(
        name=str(name),
        domain_name=domain.name,
        objects=objects,
        init=frozenset(make_atom(n) for n in init_nodes),
        goal=frozenset(make_atom(n) for n in goal_nodes),
        display=display,
    )


def check_atom(atom: Atom, instance: ProblemInstance, domain: Domain) -> None:
    """Raise :class:`PDDLTypeError` unless ``atom`` is a well-typed ground atom of the instance."""
    sig = domain.predicate(atom.predicate)
    if len(atom.args) != sig.arity:
        raise PDDLTypeError(f"{atom}: {atom.predicate!r} takes {sig.arity} arguments")
    for a, expected in zip(atom.args, sig.param_types):
        if a not in instance.objects:
            raise PDDLTypeError(f"{atom}: undeclared object {a!r}")
        if not domain.types.is_subtype(instance.objects[a], expected):
            raise PDDLTypeError(f"{atom}: object {a!r} is not a {expected!r}")
