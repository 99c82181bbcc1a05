"""Reduce a problem instance to the schemas and objects relevant to its seeds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptySeeds, FilterTooAggressive
from .graph import ActionGraph, backward_reachable
from .pddl.model import Atom, Domain, ProblemInstance
from .pddl.writer import domain_to_json, domain_to_pddl, problem_to_json, problem_to_pddl

WILDCARD = "*"


@dataclass(frozen=True)
class SeedAction:
    """A (possibly partially bound) schema proposed as a terminal of the graph search."""

    schema: str
    args: tuple[str, ...] = ()

    @property
    def objects(self) -> tuple[str, ...]:
        return tuple(a for a in self.args if a != WILDCARD)

    def __str__(self) -> str:
        return f"{self.schema}({', '.join(self.args)})"

    def to_json(self) -> dict:
        return {"action": self.schema, "args": list(self.args)}

    @classmethod
    def from_json(cls, data) -> "SeedAction":
        return cls(str(data["action"]).lower(), tuple(str(a).lower() for a in data.get("args", ())))


@dataclass(frozen=True)
class FilteredInstance:
    base: ProblemInstance
    kept_actions: frozenset[str]
    kept_objects: frozenset[str]
    kept_init: frozenset[Atom]
    goal: frozenset[Atom]
    task_text: str | None = None

    def problem(self) -> ProblemInstance:
        """The reduced instance as a standalone problem (object order of the original)."""
        base = self.base
        return ProblemInstance(
            name=f"{base.name}-filtered",
            domain_name=base.domain_name,
            objects={o: t for o, t in base.objects.items() if o in self.kept_objects},
            init=self.kept_init,
            goal=self.goal,
            task_text=self.task_text,
            display={o: d for o, d in base.display.items() if o in self.kept_objects},
        )

    def domain(self, domain: Domain) -> Domain:
        return domain.restrict(self.kept_actions)

    def to_pddl(self, domain: Domain) -> tuple[str, str]:
        """(pruned domain, reduced problem) as PDDL text for external planners."""
        return domain_to_pddl(self.domain(domain)), problem_to_pddl(self.problem())

    def to_json(self, domain: Domain) -> dict:
        return {
            "kept_actions": sorted(self.kept_actions),
            "kept_objects": sorted(self.kept_objects),
            "domain": domain_to_json(self.domain(domain)),
            "problem": problem_to_json(self.problem()),
        }


def filter_actions(domain: Domain, graph: ActionGraph, seeds: Sequence[SeedAction]) -> frozenset[str]:
    if not seeds:
        raise EmptySeeds("at least one seed action is required")
    return backward_reachable(graph, [s.schema for s in seeds]).members


def relevance_closure(
    instance: ProblemInstance,
    domain: Domain,
    kept_actions: Iterable[str],
    seed_objects: Iterable[str],
) -> frozenset[str]:
    """Objects linked to the seeds through initial-state atoms of relevant predicates.

    Starting from ``seed_objects``, any init atom whose predicate some kept
    schema mentions and which contains a kept object pulls in all its
    arguments, until nothing changes. Afterwards every parameter type of a
    kept schema that still has no kept object admits all objects of that type.
    """
    kept_actions = [domain.action(a) for a in kept_actions]
    predicates = frozenset().union(*(a.predicates_used for a in kept_actions)) if kept_actions else frozenset()
    atoms = [a for a in instance.init if a.predicate in predicates and a.args]
    kept = set(seed_objects)

    # worklist over objects; each atom is consumed once
    touching: dict[str, list[Atom]] = {}
    for atom in atoms:
        for o in set(atom.args):
            touching.setdefault(o, []).append(atom)
    frontier = list(kept)
    while frontier:
        obj = frontier.pop()
        for atom in touching.get(obj, ()):
            for other in atom.args:
                if other not in kept:
                    kept.add(other)
                    frontier.append(other)

    types = domain.types
    for schema in kept_actions:
        for ptype in schema.param_types:
            if not any(types.is_subtype(instance.objects[o], ptype) for o in kept if o in instance.objects):
                kept.update(instance.objects_of_type(ptype, types))
    return frozenset(kept)


def robot_objects(instance: ProblemInstance, domain: Domain, robot_type: str = "robot") -> list[str]:
    if robot_type not in domain.types:
        return []
    return instance.objects_of_type(robot_type, domain.types)


def build_filtered_instance(
    instance: ProblemInstance,
    domain: Domain,
    graph: ActionGraph,
    seeds: Sequence[SeedAction],
    *,
    robot_type: str = "robot",
) -> FilteredInstance:
    """Compose action filtering and object closure into the reduced instance.

    Raises :class:`FilterTooAggressive` when the kept schemas cannot possibly
    produce some goal atom; the caller chooses whether to fall back.
    """
    kept_actions = filter_actions(domain, graph, seeds)
    seed_objects = {o for s in seeds for o in s.objects}
    seed_objects.update(o for g in instance.goal for o in g.args)
    seed_objects.update(robot_objects(instance, domain, robot_type))
    kept_objects = relevance_closure(instance, domain, kept_actions, seed_objects)
    kept_init = frozenset(a for a in instance.init if all(o in kept_objects for o in a.args))

    for g in sorted(instance.goal):
        if not all(o in kept_objects for o in g.args):
            raise FilterTooAggressive(f"goal atom {g} mentions a filtered-out object", [g])
    unreachable = [g for g in sorted(instance.goal) if g not in kept_init and not _producible(g, kept_actions, domain, instance)]
    if unreachable:
        raise FilterTooAggressive(
            "no kept action can achieve goal atom(s) " + ", ".join(map(str, unreachable)), unreachable
        )
    return FilteredInstance(
        base=instance,
        kept_actions=frozenset(kept_actions),
        kept_objects=kept_objects,
        kept_init=kept_init,
        goal=instance.goal,
        task_text=instance.task_text,
    )


def _producible(atom: Atom, kept_actions: Iterable[str], domain: Domain, instance: ProblemInstance) -> bool:
    types = domain.types
    for name in kept_actions:
        for eff in domain.action(name).add_effects:
            if eff.predicate == atom.predicate and all(
                types.is_subtype(instance.objects[o], t) for o, t in zip(atom.args, eff.types)
            ):
                return True
    return False
