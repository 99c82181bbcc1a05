"""Grounding with delete-relaxed reachability pruning."""

from __future__ import annotations

import itertools
from typing import Iterator

from .model import ActionSchema, Atom, Domain, GroundAction, Literal, ProblemInstance


def _candidates(schema: ActionSchema, instance: ProblemInstance, domain: Domain) -> list[list[str]]:
    return [instance.objects_of_type(t, domain.types) for t in schema.param_types]


def naive_groundings(instance: ProblemInstance, domain: Domain) -> list[GroundAction]:
    """Every type-consistent binding of every schema, without any pruning."""
    out = []
    for schema in domain.actions:
        for args in itertools.product(*_candidates(schema, instance, domain)):
            out.append(_make(schema, args))
    return out


def _make(schema: ActionSchema, args: tuple[str, ...]) -> GroundAction:
    binding = dict(zip(schema.variables, args))
    return GroundAction(
        schema.name,
        tuple(args),
        frozenset(l.ground(binding) for l in schema.preconditions),
        frozenset(l.ground(binding) for l in schema.add_effects),
        frozenset(l.ground(binding) for l in schema.del_effects),
    )


def _checks_by_depth(schema: ActionSchema) -> list[list[Literal]]:
    """Preconditions grouped by the parameter index at which they become fully bound."""
    index = {v: i for i, v in enumerate(schema.variables)}
    groups: list[list[Literal]] = [[] for _ in range(max(schema.arity, 1))]
    for lit in schema.preconditions:
        depth = max((index[a] for a in lit.args), default=0)
        groups[depth].append(lit)
    return groups


def _bindings(
    schema: ActionSchema,
    candidates: list[list[str]],
    checks: list[list[Literal]],
    reached: set[Atom],
) -> Iterator[tuple[str, ...]]:
    """Backtracking enumeration in itertools.product order, pruned by ``reached``."""
    variables = schema.variables
    if not variables:
        if all(Atom(l.predicate, ()) in reached for l in checks[0]):
            yield ()
        return
    binding: dict[str, str] = {}
    args: list[str] = []

    def rec(i: int) -> Iterator[tuple[str, ...]]:
        for obj in candidates[i]:
            binding[variables[i]] = obj
            if all(l.ground(binding) in reached for l in checks[i]):
                args.append(obj)
                if i + 1 == len(variables):
                    yield tuple(args)
                else:
                    yield from rec(i + 1)
                args.pop()
        binding.pop(variables[i], None)

    yield from rec(0)


def relaxed_reachable_atoms(instance: ProblemInstance, domain: Domain) -> set[Atom]:
    """Fixpoint of the add-only (delete-relaxed) progression from the initial state."""
    reached = set(instance.init)
    plan = [(s, _candidates(s, instance, domain), _checks_by_depth(s)) for s in domain.actions]
    changed = True
    while changed:
        changed = False
        for schema, candidates, checks in plan:
            for args in _bindings(schema, candidates, checks, reached):
                binding = dict(zip(schema.variables, args))
                for lit in schema.add_effects:
                    atom = lit.ground(binding)
                    if atom not in reached:
                        reached.add(atom)
                        changed = True
    return reached


def ground_instance(instance: ProblemInstance, domain: Domain) -> list[GroundAction]:
    """Ground actions whose preconditions are reachable under delete relaxation.

    Order is deterministic: schema declaration order, then bindings in
    object declaration order (the order ``itertools.product`` would give).
    """
    reached = relaxed_reachable_atoms(instance, domain)
    out = []
    for schema in domain.actions:
        candidates = _candidates(schema, instance, domain)
        checks = _checks_by_depth(schema)
        for args in _bindings(schema, candidates, checks, reached):
            out.append(_make(schema, args))
    return out
