"""Task completion, goal-condition recall and executability over a benchmark run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import LengthMismatch
from .records import CATEGORIES, TaskRecord, check_condition
from .world import ExecutionTrace


@dataclass(frozen=True)
class TaskScore:
    id: str
    category: str
    satisfied: int
    conditions: int
    steps_ok: int
    steps: int

    @property
    def success(self) -> bool:
        return self.satisfied == self.conditions

    @property
    def gcr(self) -> float:
        return self.satisfied / self.conditions

    @property
    def er(self) -> float:
        return self.steps_ok / self.steps if self.steps else 0.0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "success": self.success,
            "satisfied": self.satisfied,
            "conditions": self.conditions,
            "gcr": self.gcr,
            "steps_ok": self.steps_ok,
            "steps": self.steps,
            "er": self.er,
        }


@dataclass(frozen=True)
class Metrics:
    tcr: float
    gcr: float
    er: float
    per_task: tuple[TaskScore, ...] = field(default=())

    @property
    def er_task_mean(self) -> float:
        return _mean([t.er for t in self.per_task])

    def subset(self, category: str) -> "Metrics":
        return aggregate([t for t in self.per_task if t.category == category])

    def to_json(self) -> dict:
        return {
            "tcr": self.tcr,
            "gcr": self.gcr,
            "er": self.er,
            "er_task_mean": self.er_task_mean,
            "per_task": [t.to_json() for t in self.per_task],
        }


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def score_task(record: TaskRecord, trace: ExecutionTrace) -> TaskScore:
    world = trace.final_world
    ok = sum(1 for c in record.ground_truth if check_condition(world, c))
    return TaskScore(record.id, record.category, ok, len(record.ground_truth), trace.succeeded, trace.total)


def aggregate(scores: Sequence[TaskScore]) -> Metrics:
    """TCR and GCR averaged over tasks; ER pooled over all executed steps."""
    total_steps = sum(s.steps for s in scores)
    return Metrics(
        tcr=_mean([1.0 if s.success else 0.0 for s in scores]),
        gcr=_mean([s.gcr for s in scores]),
        er=sum(s.steps_ok for s in scores) / total_steps if total_steps else 0.0,
        per_task=tuple(scores),
    )


def compute_metrics(records: Sequence[TaskRecord], traces: Sequence[ExecutionTrace]) -> Metrics:
    if len(records) != len(traces):
        raise LengthMismatch(f"{len(records)} records but {len(traces)} traces")
    return aggregate([score_task(r, t) for r, t in zip(records, traces)])


def format_table(metrics: Metrics, planning_time: Mapping[str, float] | None = None) -> str:
    """Per-category rows (tasks, TCR, GCR, ER as percentages) plus an overall row.

    ``planning_time`` maps task id to seconds; when given, a mean planning
    time column is added.
    """
    head = f"{'Category':<10} {'Tasks':>5} {'TCR':>7} {'GCR':>7} {'ER':>7}"
    if planning_time is not None:
        head += f" {'Plan(s)':>8}"
    lines = [head, "-" * len(head)]
    groups = [(c.capitalize(), metrics.subset(c)) for c in CATEGORIES]
    groups.append(("Overall", metrics))
    for label, m in groups:
        n = len(m.per_task)
        if n == 0 and label != "Overall":
            continue
        row = f"{label:<10} {n:>5} {100 * m.tcr:>6.1f}% {100 * m.gcr:>6.1f}% {100 * m.er:>6.1f}%"
        if planning_time is not None:
            times = [planning_time[t.id] for t in m.per_task if t.id in planning_time]
            row += f" {_mean(times):>8.3f}"
        lines.append(row)
    return "\n".join(lines) + "\n"
