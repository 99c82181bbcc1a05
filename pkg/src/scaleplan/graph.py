"""Domain-level action graph: strict and relaxed enablement edges between schemas.

Edges are computed over lifted schemas, never over ground actions, so a graph
is built once per domain and reused for every problem instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ArityMismatch, UnknownTerminal
from .pddl.model import ActionSchema, Domain, Literal, TypeHierarchy


class EdgeKind(str, Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    kind: EdgeKind


def covers(eff: Literal, pre: Literal, types: TypeHierarchy) -> bool:
    """Whether an add-effect can supply a precondition, ignoring variable identity."""
    if eff.predicate != pre.predicate:
        return False
    if len(eff.args) != len(pre.args):
        raise ArityMismatch(
            f"predicate {eff.predicate!r} used with arities {len(eff.args)} and {len(pre.args)}"
        )
    return all(types.compatible(a, b) for a, b in zip(eff.types, pre.types))


@dataclass(frozen=True)
class ActionGraph:
    nodes: tuple[str, ...]
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        preds: dict[str, list[Edge]] = {n: [] for n in self.nodes}
        for e in sorted(self.edges):
            preds[e.dst].append(e)
        object.__setattr__(self, "_incoming", preds)

    def incoming(self, node: str) -> list[Edge]:
        return self._incoming[node]

    def edge(self, src: str, dst: str) -> Edge | None:
        for e in self._incoming.get(dst, ()):
            if e.src == src:
                return e
        return None

    def count(self, kind: EdgeKind) -> int:
        return sum(1 for e in self.edges if e.kind is kind)

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"from": e.src, "to": e.dst, "kind": e.kind.value} for e in sorted(self.edges)],
        }

    @classmethod
    def from_json(cls, data) -> "ActionGraph":
        return cls(
            tuple(data["nodes"]),
            frozenset(Edge(e["from"], e["to"], EdgeKind(e["kind"])) for e in data.get("edges", ())),
        )


def _overlap(a1: ActionSchema, a2: ActionSchema, types: TypeHierarchy) -> tuple[bool, bool]:
    """(every precondition of a2 covered by a1's adds, some precondition covered)."""
    if not a2.preconditions:
        return False, False
    by_pred: dict[str, list[Literal]] = {}
    for eff in a1.add_effects:
        by_pred.setdefault(eff.predicate, []).append(eff)
    hits = [any(covers(e, p, types) for e in by_pred.get(p.predicate, ())) for p in a2.preconditions]
    return all(hits), any(hits)


def build_graph(domain: Domain) -> ActionGraph:
    """Strict edges first; relaxed edges in a second pass, gated on the strict ones."""
    types = domain.types
    _check_arities(domain)
    actions = domain.actions
    overlap = {(a1.name, a2.name): _overlap(a1, a2, types) for a1 in actions for a2 in actions}

    strict = {pair for pair, (full, _) in overlap.items() if full}
    has_in = {dst for _, dst in strict}
    has_out = {src for src, _ in strict}
    edges = {Edge(s, d, EdgeKind.STRICT) for s, d in strict}
    for (src, dst), (_, partial) in overlap.items():
        if partial and (src, dst) not in strict and (dst not in has_in or src not in has_out):
            edges.add(Edge(src, dst, EdgeKind.RELAXED))
    return ActionGraph(tuple(a.name for a in actions), frozenset(edges))


def _check_arities(domain: Domain) -> None:
    seen: dict[str, int] = {}
    for a in domain.actions:
        for lit in (*a.preconditions, *a.add_effects, *a.del_effects):
            n = seen.setdefault(lit.predicate, len(lit.args))
            if n != len(lit.args):
                raise ArityMismatch(f"predicate {lit.predicate!r} used with arities {n} and {len(lit.args)}")


@dataclass(frozen=True)
class ReachableSet:
    terminals: frozenset[str]
    members: frozenset[str]
    witness_edges: frozenset[Edge] = field(default=frozenset())


def backward_reachable(graph: ActionGraph, terminals: Iterable[str]) -> ReachableSet:
    """All nodes with a directed path into some terminal (iterative DFS over reversed edges)."""
    terminals = list(dict.fromkeys(terminals))
    for t in terminals:
        if t not in graph._incoming:
            raise UnknownTerminal(t)
    visited: set[str] = set()
    witnesses: set[Edge] = set()
    stack = list(reversed(terminals))
    while stack:
        node = stack.pop()
        if node in visited:
            continue
        visited.add(node)
        for e in graph.incoming(node):
            witnesses.add(e)
            if e.src not in visited:
                stack.append(e.src)
    return ReachableSet(frozenset(terminals), frozenset(visited), frozenset(witnesses))


def to_dot(graph: ActionGraph) -> str:
    """DOT digraph; strict edges solid, relaxed dashed, lexicographic order throughout."""
    if not graph.nodes:
        return "digraph actions { }\n"
    lines = ["digraph actions {"]
    lines += [f"  {json.dumps(n)};" for n in sorted(graph.nodes)]
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst)):
        style = "solid" if e.kind is EdgeKind.STRICT else "dashed"
        lines.append(f"  {json.dumps(e.src)} -> {json.dumps(e.dst)} [style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
