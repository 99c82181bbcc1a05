"""Immutable data model for typed STRIPS domains and problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

from ..errors import PDDLTypeError, UnknownSchema

ROOT_TYPE = "object"


class Atom(NamedTuple):
    """A ground atom, e.g. ``Atom("at", ("r1", "loca"))``."""

    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"

    @classmethod
    def parse(cls, text: str) -> "Atom":
        """Parse ``"(at r1 loca)"`` or ``"at r1 loca"`` into an atom (lower-cased)."""
        parts = text.strip().strip("()").split()
        if not parts:
            raise ValueError(f"empty atom: {text!r}")
        return cls(parts[0].lower(), tuple(p.lower() for p in parts[1:]))


State = frozenset  # frozenset[Atom]; closed world


class TypeHierarchy:
    """Single-inheritance type tree rooted at ``object``."""

    __slots__ = ("_parent", "_ancestors")

    def __init__(self, parents: Mapping[str, str | None] | None = None):
        parent: dict[str, str | None] = {ROOT_TYPE: None}
        for name, sup in (parents or {}).items():
            if name == ROOT_TYPE:
                if sup not in (None, ROOT_TYPE):
                    raise PDDLTypeError(f"type {ROOT_TYPE!r} cannot have a supertype")
                continue
            parent[name] = sup if sup is not None else ROOT_TYPE
        for name, sup in parent.items():
            if sup is not None and sup not in parent:
                raise PDDLTypeError(f"type {name!r} has undeclared supertype {sup!r}")
        ancestors: dict[str, tuple[str, ...]] = {}
        for name in parent:
            chain = [name]
            seen = {name}
            cur = parent[name]
            while cur is not None:
                if cur in seen:
                    raise PDDLTypeError(f"cyclic type declaration involving {name!r}")
                seen.add(cur)
                chain.append(cur)
                cur = parent[cur]
            ancestors[name] = tuple(chain)
        self._parent = parent
        self._ancestors = ancestors

    @property
    def types(self) -> tuple[str, ...]:
        return tuple(self._parent)

    def declared(self) -> dict[str, str]:
        """Declared non-root types mapped to their supertype, in declaration order."""
        return {t: p for t, p in self._parent.items() if p is not None}

    def __contains__(self, name: object) -> bool:
        return name in self._parent

    def parent(self, name: str) -> str | None:
        return self._parent[name]

    def ancestors(self, name: str) -> tuple[str, ...]:
        try:
            return self._ancestors[name]
        except KeyError:
            raise PDDLTypeError(f"undeclared type {name!r}") from None

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def compatible(self, a: str, b: str) -> bool:
        """True if the two types unify: equal, or one is a subtype of the other."""
        return self.is_subtype(a, b) or self.is_subtype(b, a)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeHierarchy):
            return NotImplemented
        return self._parent == other._parent

    def __hash__(self) -> int:
        return hash(frozenset(self._parent.items()))

    def __repr__(self) -> str:
        return f"TypeHierarchy({self.declared()!r})"


@dataclass(frozen=True)
class PredicateSignature:
    name: str
    param_types: tuple[str, ...] = ()
    param_names: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True)
class Literal:
    """A lifted literal: predicate applied to variables, each carrying its declared type."""

    predicate: str
    args: tuple[str, ...] = ()
    types: tuple[str, ...] = ()
    negated: bool = False

    def __str__(self) -> str:
        body = f"({self.predicate}{''.join(' ' + a for a in self.args)})"
        return f"(not {body})" if self.negated else body

    def ground(self, binding: Mapping[str, str]) -> Atom:
        return Atom(self.predicate, tuple(binding[a] for a in self.args))


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    preconditions: tuple[Literal, ...] = ()
    add_effects: tuple[Literal, ...] = ()
    del_effects: tuple[Literal, ...] = ()
    display_name: str = field(default="", compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.params)

    @property
    def param_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.params)

    @property
    def predicates_used(self) -> frozenset[str]:
        return frozenset(
            lit.predicate for lit in (*self.preconditions, *self.add_effects, *self.del_effects)
        )

    def signature(self) -> str:
        inner = " ".join(f"{v} - {t}" for v, t in self.params)
        return f"({self.name} {inner})" if inner else f"({self.name})"


@dataclass(frozen=True)
class Domain:
    name: str
    types: TypeHierarchy = field(default_factory=TypeHierarchy)
    predicates: tuple[PredicateSignature, ...] = ()
    actions: tuple[ActionSchema, ...] = ()
    requirements: tuple[str, ...] = (":strips", ":typing")

    @cached_property
    def _predicate_index(self) -> dict[str, PredicateSignature]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def _action_index(self) -> dict[str, ActionSchema]:
        return {a.name: a for a in self.actions}

    @property
    def action_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions)

    def predicate(self, name: str) -> PredicateSignature:
        try:
            return self._predicate_index[name]
        except KeyError:
            raise PDDLTypeError(f"undeclared predicate {name!r}") from None

    def has_predicate(self, name: str) -> bool:
        return name in self._predicate_index

    def action(self, name: str) -> ActionSchema:
        try:
            return self._action_index[name]
        except KeyError:
            raise UnknownSchema(f"unknown action schema {name!r}") from None

    def has_action(self, name: str) -> bool:
        return name in self._action_index

    def restrict(self, action_names: Iterable[str]) -> "Domain":
        """The same domain with only the named schemas kept (declaration order preserved)."""
        keep = set(action_names)
        return Domain(
            name=self.name,
            types=self.types,
            predicates=self.predicates,
            actions=tuple(a for a in self.actions if a.name in keep),
            requirements=self.requirements,
        )


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    domain_name: str
    objects: Mapping[str, str] = field(default_factory=dict)
    init: frozenset[Atom] = frozenset()
    goal: frozenset[Atom] = frozenset()
    task_text: str | None = None
    display: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)

    def objects_of_type(self, type_name: str, types: TypeHierarchy) -> list[str]:
        return [o for o, t in self.objects.items() if types.is_subtype(t, type_name)]

    def display_name(self, obj: str) -> str:
        return self.display.get(obj, obj)

    def restrict_objects(self, keep: Iterable[str], *, name: str | None = None) -> "ProblemInstance":
        """Drop objects not in ``keep`` together with every init atom mentioning them.

        Goal atoms are left untouched; callers check them.
        """
        keep = set(keep)
        return ProblemInstance(
            name=name or self.name,
            domain_name=self.domain_name,
            objects={o: t for o, t in self.objects.items() if o in keep},
            init=frozenset(a for a in self.init if all(x in keep for x in a.args)),
            goal=self.goal,
            task_text=self.task_text,
            display={o: d for o, d in self.display.items() if o in keep},
        )

    def with_goal(self, goal: Iterable[Atom], *, init: Iterable[Atom] | None = None) -> "ProblemInstance":
        return ProblemInstance(
            name=self.name,
            domain_name=self.domain_name,
            objects=dict(self.objects),
            init=frozenset(init) if init is not None else self.init,
            goal=frozenset(goal),
            task_text=self.task_text,
            display=dict(self.display),
        )


@dataclass(frozen=True)
class GroundAction:
    """A schema applied to objects. ``pre``/``add``/``delete`` are filled in by grounding."""

    schema: str
    args: tuple[str, ...] = ()
    pre: frozenset[Atom] | None = field(default=None, compare=False, repr=False)
    add: frozenset[Atom] | None = field(default=None, compare=False, repr=False)
    delete: frozenset[Atom] | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{self.schema}({', '.join(self.args)})"

    def to_json(self) -> dict:
        return {"action": self.schema, "args": list(self.args)}

    @classmethod
    def from_json(cls, data: Mapping) -> "GroundAction":
        return cls(str(data["action"]).lower(), tuple(str(a).lower() for a in data.get("args", ())))


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Plan":
        return cls(tuple(GroundAction.from_json(s) for s in data.get("steps", ())))
