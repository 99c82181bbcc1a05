"""Typed STRIPS PDDL: parsing, serialization, grounding and execution semantics."""

from .grounding import ground_instance, naive_groundings, relaxed_reachable_atoms
from .model import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    Domain,
    GroundAction,
    Literal,
    Plan,
    PredicateSignature,
    ProblemInstance,
    State,
    TypeHierarchy,
)
from .parser import check_atom, parse_domain, parse_problem
from .semantics import (
    StepCheck,
    ValidationReport,
    applicable,
    apply,
    bind,
    instantiate,
    missing_preconditions,
    validate_plan,
)
from .writer import (
    domain_from_json,
    domain_to_json,
    domain_to_pddl,
    problem_from_json,
    problem_to_json,
    problem_to_pddl,
)

__all__ = [
    "ROOT_TYPE",
    "ActionSchema",
    "Atom",
    "Domain",
    "GroundAction",
    "Literal",
    "Plan",
    "PredicateSignature",
    "ProblemInstance",
    "State",
    "StepCheck",
    "TypeHierarchy",
    "ValidationReport",
    "applicable",
    "apply",
    "bind",
    "check_atom",
    "domain_from_json",
    "domain_to_json",
    "domain_to_pddl",
    "ground_instance",
    "instantiate",
    "missing_preconditions",
    "naive_groundings",
    "parse_domain",
    "parse_problem",
    "problem_from_json",
    "problem_to_json",
    "problem_to_pddl",
    "relaxed_reachable_atoms",
    "validate_plan",
]
