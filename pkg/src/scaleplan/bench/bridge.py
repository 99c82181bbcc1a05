"""Translate between the symbolic world and atoms of the shipped household domain."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

from ..pddl.model import Atom, Domain, ProblemInstance
from ..pddl.parser import parse_domain
from .records import GroundTruthCondition
from .world import AFFORDANCES, CLOSED, OPEN, ActionSemantics, WorldState

ROBOT, ITEM = "robot", "item"

# state tag -> unary predicate; OPEN/CLOSED live in WorldState.open_state
TAG_PREDICATES = {
    "CLEANED": "cleaned",
    "SLICED": "sliced",
    "COOKED": "cooked",
    "BROKEN": "broken",
    "ON": "is-on",
    "OFF": "is-off",
}
_PRED_TAGS = {v: k for k, v in TAG_PREDICATES.items()}
DERIVED = frozenset({"accessible", *AFFORDANCES})


def data_text(name: str) -> str:
    return resources.files("scaleplan.data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def household_domain() -> Domain:
    """The twelve-schema household domain shipped with the package."""
    return parse_domain(data_text("household.pddl"))


def world_to_atoms(world: WorldState, semantics: ActionSemantics | None = None) -> tuple[dict[str, str], frozenset[Atom]]:
    """Objects with types, and the atoms that hold in ``world``.

    Affordances become static unary atoms; ``accessible`` holds for every
    receptacle that is not closed.
    """
    sem = semantics or ActionSemantics()
    objects: dict[str, str] = {r: ROBOT for r in world.robots}
    objects.update({o: ITEM for o in world.objects})
    atoms: set[Atom] = set()
    for o in world.objects:
        for tag in world.object_states[o]:
            if tag not in TAG_PREDICATES:
                raise ValueError(f"state tag {tag!r} of {o} has no household predicate")
            atoms.add(Atom(TAG_PREDICATES[tag], (o,)))
        for aff in sem.tags(o):
            atoms.add(Atom(aff, (o,)))
        if o in world.open_state:
            atoms.add(Atom("is-open" if world.open_state[o] == OPEN else "is-closed", (o,)))
        if (sem.affords(o, "container") or sem.affords(o, "surface")) and world.open_state.get(o) != CLOSED:
            atoms.add(Atom("accessible", (o,)))
    for c, items in world.containment.items():
        atoms.update(Atom("in", (x, c)) for x in items)
    for r in world.robots:
        held = world.held[r]
        atoms.add(Atom("holding", (r, held)) if held else Atom("hand-empty", (r,)))
        atoms.update(Atom("near", (r, o)) for o in world.near.get(r, ()))
    return objects, frozenset(atoms)


def atoms_to_world(objects: Mapping[str, str], atoms: Iterable[Atom]) -> WorldState:
    """Inverse of :func:`world_to_atoms`; static and derived atoms are ignored."""
    w = WorldState()
    for o, t in objects.items():
        if t == ROBOT:
            w.held[o] = None
            w.near[o] = set()
        else:
            w.object_states[o] = set()
    for a in atoms:
        p, args = a.predicate, a.args
        if p in _PRED_TAGS:
            w.object_states[args[0]].add(_PRED_TAGS[p])
        elif p == "is-open":
            w.open_state[args[0]] = OPEN
        elif p == "is-closed":
            w.open_state[args[0]] = CLOSED
        elif p == "in":
            w.containment.setdefault(args[1], set()).add(args[0])
        elif p == "holding":
            w.held[args[0]] = args[1]
        elif p == "near":
            w.near[args[0]].add(args[1])
    return w


def conditions_to_goal(conditions: Sequence[GroundTruthCondition], world: WorldState) -> frozenset[Atom]:
    """Goal atoms for the planner.

    For ``num_contains`` conditions the objects already inside are preferred,
    then the remaining ones in listed order.
    """
    goal: set[Atom] = set()
    for cond in conditions:
        if cond.state:
            tag = cond.state.upper()
            if tag == "OPEN":
                goal.add(Atom("is-open", (cond.name,)))
            elif tag == "CLOSED":
                goal.add(Atom("is-closed", (cond.name,)))
            elif tag in TAG_PREDICATES:
                goal.add(Atom(TAG_PREDICATES[tag], (cond.name,)))
            else:
                raise ValueError(f"state tag {tag!r} has no household predicate")
        inside = world.containment.get(cond.name, set())
        ranked = sorted(cond.contains, key=lambda o: (o not in inside, cond.contains.index(o)))
        goal.update(Atom("in", (o, cond.name)) for o in ranked[: cond.required])
    return frozenset(goal)


def world_to_problem(
    world: WorldState,
    goal: Iterable[Atom] = (),
    *,
    semantics: ActionSemantics | None = None,
    name: str = "scene",
    task_text: str | None = None,
    domain: Domain | None = None,
) -> ProblemInstance:
    """Problem over ``domain`` (the household domain by default).

    Affordance atoms whose predicate the domain does not declare are dropped.
    """
    domain = domain or household_domain()
    objects, atoms = world_to_atoms(world, semantics)
    atoms = frozenset(a for a in atoms if domain.has_predicate(a.predicate))
    return ProblemInstance(
        name=name,
        domain_name=domain.name,
        objects=objects,
        init=atoms,
        goal=frozenset(goal),
        task_text=task_text,
    )
