"""Benchmark records with ground-truth containment/state conditions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import BenchmarkParseError, SchemaError, UnknownObject
from .world import WorldState

CATEGORIES = ("simple", "complex", "vague")


@dataclass(frozen=True)
class GroundTruthCondition:
    """``name`` must be in ``state`` and contain at least ``num_contains`` of ``contains``."""

    name: str
    contains: tuple[str, ...] = ()
    state: str | None = None
    num_contains: int | None = None

    def __post_init__(self):
        if self.num_contains is not None and not 1 <= self.num_contains <= len(self.contains):
            raise ValueError(f"num_contains must lie in [1, {len(self.contains)}], got {self.num_contains}")

    @property
    def required(self) -> int:
        return len(self.contains) if self.num_contains is None else self.num_contains

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "contains": list(self.contains), "state": self.state}
        if self.num_contains is not None:
            out["num_contains"] = self.num_contains
        return out


@dataclass(frozen=True)
class TaskRecord:
    id: str
    category: str
    description: str
    scene: WorldState = field(compare=False)
    ground_truth: tuple[GroundTruthCondition, ...]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "description": self.description,
            "scene": self.scene.to_json(),
            "ground_truth": [c.to_json() for c in self.ground_truth],
        }


def check_condition(world: WorldState, cond: GroundTruthCondition) -> bool:
    if cond.name not in world.object_states:
        raise UnknownObject(cond.name)
    if cond.state is not None and cond.state.upper() not in world.tags(cond.name):
        return False
    inside = world.containment.get(cond.name, set())
    return len(set(cond.contains) & inside) >= cond.required


def parse_condition(data: Any, path: str, index: int | None = None) -> GroundTruthCondition:
    if not isinstance(data, Mapping):
        raise SchemaError("condition must be an object", index, path)
    if "name" not in data:
        raise SchemaError("missing field", index, f"{path}.name")
    name = data["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("must be a non-empty string", index, f"{path}.name")
    contains = data.get("contains", [])
    if not isinstance(contains, list) or not all(isinstance(c, str) for c in contains):
        raise SchemaError("must be a list of strings", index, f"{path}.contains")
    state = data.get("state")
    if state is not None and not isinstance(state, str):
        raise SchemaError("must be a string or null", index, f"{path}.state")
    num = data.get("num_contains")
    if num is not None:
        if isinstance(num, bool) or not isinstance(num, int):
            raise SchemaError("must be an integer", index, f"{path}.num_contains")
        if not 1 <= num <= len(contains):
            raise SchemaError(f"must lie in [1, {len(contains)}]", index, f"{path}.num_contains")
    return GroundTruthCondition(
        name.lower(), tuple(c.lower() for c in contains), state.upper() if state else None, num
    )


def parse_record(data: Any, index: int) -> TaskRecord:
    if not isinstance(data, Mapping):
        raise SchemaError("record must be an object", index, "")
    for key in ("id", "category", "description", "scene", "ground_truth"):
        if key not in data:
            raise SchemaError("missing field", index, key)
    category = str(data["category"]).lower()
    if category not in CATEGORIES:
        raise SchemaError(f"must be one of {', '.join(CATEGORIES)}", index, "category")
    gt = data["ground_truth"]
    if not isinstance(gt, list) or not gt:
        raise SchemaError("must be a non-empty list", index, "ground_truth")
    conditions = tuple(parse_condition(c, f"ground_truth[{i}]", index) for i, c in enumerate(gt))
    try:
        scene = WorldState.from_json(data["scene"])
    except (ValueError, AttributeError, TypeError) as exc:
        raise SchemaError(str(exc), index, "scene") from None
    return TaskRecord(str(data["id"]), category, str(data["description"]), scene, conditions)


def parse_benchmark(data: Any) -> list[TaskRecord]:
    if isinstance(data, Mapping):
        data = data.get("tasks")
    if not isinstance(data, list):
        raise SchemaError("benchmark must be a list of records or {\"tasks\": [...]}", None, "")
    records = [parse_record(r, i) for i, r in enumerate(data)]
    ids = [r.id for r in records]
    for i, rid in enumerate(ids):
        if rid in ids[:i]:
            raise SchemaError(f"duplicate id {rid!r}", i, "id")
    return records


def load_benchmark(path: str | Path) -> list[TaskRecord]:
    """Read and validate a benchmark JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BenchmarkParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_benchmark(data)
