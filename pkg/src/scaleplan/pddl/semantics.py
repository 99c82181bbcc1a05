"""State-transition semantics: applicability, progression and plan validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..errors import NotApplicable, PDDLTypeError, ScalePlanError
from .model import Atom, Domain, GroundAction, Plan, ProblemInstance


def instantiate(action: GroundAction, domain: Domain) -> tuple[frozenset[Atom], frozenset[Atom], frozenset[Atom]]:
    """Ground preconditions, add effects and delete effects of ``action``.

    Uses the sets cached on the action by grounding when present.
    """
    if action.pre is not None and action.add is not None and action.delete is not None:
        return action.pre, action.add, action.delete
    schema = domain.action(action.schema)
    if len(action.args) != schema.arity:
        raise PDDLTypeError(f"{action}: {schema.name!r} takes {schema.arity} arguments, got {len(action.args)}")
    binding = dict(zip(schema.variables, action.args))
    return (
        frozenset(l.ground(binding) for l in schema.preconditions),
        frozenset(l.ground(binding) for l in schema.add_effects),
        frozenset(l.ground(binding) for l in schema.del_effects),
    )


def bind(action: GroundAction, domain: Domain) -> GroundAction:
    """Return ``action`` with its ground precondition/effect sets attached."""
    pre, add, delete = instantiate(action, domain)
    return GroundAction(action.schema, action.args, pre, add, delete)


def applicable(state: frozenset[Atom], action: GroundAction, domain: Domain) -> bool:
    pre, _, _ = instantiate(action, domain)
    return pre <= state


def missing_preconditions(state: frozenset[Atom], action: GroundAction, domain: Domain) -> list[Atom]:
    schema = domain.action(action.schema)
    binding = dict(zip(schema.variables, action.args))
    # schema order, so "first unsatisfied precondition" is well defined
    return [a for a in (l.ground(binding) for l in schema.preconditions) if a not in state]


def apply(state: frozenset[Atom], action: GroundAction, domain: Domain) -> frozenset[Atom]:
    """Successor state ``(state - del) | add``; raises :class:`NotApplicable`."""
    pre, add, delete = instantiate(action, domain)
    if not pre <= state:
        raise NotApplicable(action, missing_preconditions(state, action, domain)[0])
    return (state - delete) | add


@dataclass(frozen=True)
class StepCheck:
    index: int
    action: GroundAction
    applicable: bool
    missing: tuple[Atom, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    steps: tuple[StepCheck, ...]
    final_state: frozenset[Atom]
    goal_satisfied: bool
    unmet_goals: tuple[Atom, ...] = ()
    failed_step: int | None = None

    def describe(self) -> str:
        if self.valid:
            return f"valid plan of {len(self.steps)} steps"
        if self.failed_step is not None:
            step = self.steps[self.failed_step]
            why = step.error or "precondition " + ", ".join(map(str, step.missing)) + " does not hold"
            return f"step {self.failed_step} {step.action}: {why}"
        return "goal not satisfied: " + ", ".join(map(str, self.unmet_goals))

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "goal_satisfied": self.goal_satisfied,
            "failed_step": self.failed_step,
            "unmet_goals": [str(g) for g in self.unmet_goals],
            "steps": [
                {
                    "index": s.index,
                    "action": s.action.to_json(),
                    "applicable": s.applicable,
                    "missing": [str(m) for m in s.missing],
                    "error": s.error,
                }
                for s in self.steps
            ],
        }


def validate_plan(instance: ProblemInstance, plan: Plan | Iterable[GroundAction], domain: Domain) -> ValidationReport:
    """Execute ``plan`` from the initial state. Failures are reported, never raised.

    Execution stops at the first inapplicable step; later steps are not checked.
    """
    state = instance.init
    checks: list[StepCheck] = []
    for i, action in enumerate(plan):
        try:
            if any(a not in instance.objects for a in action.args):
                unknown = next(a for a in action.args if a not in instance.objects)
                raise PDDLTypeError(f"unknown object {unknown!r}")
            schema = domain.action(action.schema)
            if len(action.args) != schema.arity:
                raise PDDLTypeError(f"{schema.name!r} takes {schema.arity} arguments")
            for (var, typ), obj in zip(schema.params, action.args):
                if not domain.types.is_subtype(instance.objects[obj], typ):
                    raise PDDLTypeError(f"{obj!r} is not a {typ!r} (parameter {var})")
        except (ScalePlanError, KeyError) as exc:
            checks.append(StepCheck(i, action, False, (), str(exc)))
            return ValidationReport(False, tuple(checks), state, False, tuple(sorted(instance.goal - state)), i)
        missing = missing_preconditions(state, action, domain)
        if missing:
            checks.append(StepCheck(i, action, False, tuple(missing)))
            return ValidationReport(False, tuple(checks), state, False, tuple(sorted(instance.goal - state)), i)
        checks.append(StepCheck(i, action, True))
        state = apply(state, action, domain)
    unmet = tuple(sorted(instance.goal - state))
    return ValidationReport(not unmet, tuple(checks), state, not unmet, unmet, None)
