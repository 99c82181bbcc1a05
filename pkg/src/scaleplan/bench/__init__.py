"""Symbolic household benchmark: world model, executor, records and metrics."""

from .bridge import (
    atoms_to_world,
    conditions_to_goal,
    household_domain,
    world_to_atoms,
    world_to_problem,
)
from .metrics import Metrics, TaskScore, aggregate, compute_metrics, format_table, score_task
from .records import (
    CATEGORIES,
    GroundTruthCondition,
    TaskRecord,
    check_condition,
    load_benchmark,
    parse_benchmark,
    parse_condition,
)
from .world import (
    ActionSemantics,
    ExecutionTrace,
    StepRecord,
    WorldState,
    execute_plan,
    execute_step,
    object_class,
)

pddl_bridge = world_to_problem

__all__ = [
    "CATEGORIES",
    "ActionSemantics",
    "ExecutionTrace",
    "GroundTruthCondition",
    "Metrics",
    "StepRecord",
    "TaskRecord",
    "TaskScore",
    "WorldState",
    "aggregate",
    "atoms_to_world",
    "check_condition",
    "compute_metrics",
    "conditions_to_goal",
    "execute_plan",
    "execute_step",
    "format_table",
    "household_domain",
    "load_benchmark",
    "object_class",
    "parse_benchmark",
    "parse_condition",
    "pddl_bridge",
    "score_task",
    "world_to_atoms",
    "world_to_problem",
]
