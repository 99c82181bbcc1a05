"""End-to-end runs: seed, filter, decompose, solve, allocate, integrate, execute."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .bench.bridge import conditions_to_goal, household_domain, world_to_problem
from .bench.metrics import Metrics, compute_metrics
from .bench.records import TaskRecord
from .bench.world import ActionSemantics, ExecutionTrace, execute_plan
from .errors import (
    FilterTooAggressive,
    HallucinationRejected,
    MalformedResponse,
    ScalePlanError,
    TransportError,
    Unsolvable,
)
from .graph import ActionGraph, build_graph
from .multiagent import (
    Allocation,
    IntegratedPlan,
    Robot,
    Subtask,
    allocate,
    decompose,
    integrate,
    linearize_keys,
    makespan,
    replan_for_allocation,
    solve_subtasks,
)
from .pddl.grounding import ground_instance
from .pddl.model import Domain, Plan, ProblemInstance
from .pddl.semantics import validate_plan
from .planner import SearchConfig
from .relevance import FilteredInstance, build_filtered_instance, robot_objects
from .seeder import ChatClient, SeederConfig, SeedProposal, lexical_seed, llm_seed

log = logging.getLogger(__name__)


class StageError(ScalePlanError):
    """A pipeline stage failed; ``cause`` is the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage}: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class RunOptions:
    seeder: str = "lexical"  # lexical | llm
    llm: SeederConfig | None = None
    fallback: bool = False  # llm seeding failures fall back to the lexical seeder
    use_filter: bool = True
    decompose_mode: str = "rule"
    search: SearchConfig = SearchConfig()
    robot_type: str = "robot"


@dataclass
class RunResult:
    instance: ProblemInstance
    proposal: SeedProposal | None
    filtered: FilteredInstance | None
    subtasks: list[Subtask]
    allocation: Allocation
    plan: IntegratedPlan
    ground_actions: int
    expanded: int
    generated: int
    planning_time: float
    plan_valid: bool
    notes: list[str] = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return makespan(self.plan)

    def stats_json(self) -> dict:
        return {
            "ground_actions": self.ground_actions,
            "expanded": self.expanded,
            "generated": self.generated,
            "planning_time": self.planning_time,
            "plan_steps": self.plan.size,
            "makespan": self.makespan,
            "plan_valid": self.plan_valid,
            "filtered": self.filtered is not None,
            "kept_actions": sorted(self.filtered.kept_actions) if self.filtered else None,
            "kept_objects": len(self.filtered.kept_objects) if self.filtered else len(self.instance.objects),
            "notes": list(self.notes),
        }

    def to_json(self) -> dict:
        return {
            "seeds": self.proposal.to_json() if self.proposal else None,
            "subtasks": [s.to_json() for s in self.subtasks],
            "allocation": self.allocation.to_json(),
            "plan": self.plan.to_json(),
            "stats": self.stats_json(),
        }


def default_team(instance: ProblemInstance, domain: Domain, robot_type: str = "robot") -> list[Robot]:
    """Every robot object in the instance, each able to run every schema."""
    caps = frozenset(domain.action_names)
    return [Robot(r, caps, r) for r in robot_objects(instance, domain, robot_type)]


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScalePlanError as exc:
        raise StageError(name, exc) from exc


def propose_seeds(
    instance: ProblemInstance, domain: Domain, options: RunOptions, client: ChatClient | None = None
) -> tuple[SeedProposal, list[str]]:
    text = instance.task_text or ""
    if options.seeder == "lexical":
        return lexical_seed(text, domain, instance), []
    if options.seeder != "llm":
        raise ValueError(f"unknown seeder {options.seeder!r}")
    try:
        return llm_seed(text, domain, instance, options.llm or SeederConfig(), client=client), []
    except (TransportError, MalformedResponse, HallucinationRejected) as exc:
        if not options.fallback:
            raise
        note = f"llm seeder failed ({type(exc).__name__}: {exc}); used lexical seeds"
        log.warning(note)
        return lexical_seed(text, domain, instance), [note]


def run_pipeline(
    instance: ProblemInstance,
    domain: Domain,
    team: Sequence[Robot] | None = None,
    options: RunOptions = RunOptions(),
    *,
    graph: ActionGraph | None = None,
    client: ChatClient | None = None,
) -> RunResult:
    """Plan ``instance`` for ``team``.

    Failing stages raise :class:`StageError`. A filter that is too aggressive,
    or a filtered instance that turns out unsolvable, falls back to the
    unfiltered instance and leaves a note.
    """
    start = time.perf_counter()
    team = list(team) if team is not None else default_team(instance, domain, options.robot_type)
    notes: list[str] = []
    proposal = None
    filtered = None

    if options.use_filter:
        proposal, extra = _stage("seeder", propose_seeds, instance, domain, options, client)
        notes += extra
        graph = graph or _stage("graph", build_graph, domain)
        try:
            filtered = build_filtered_instance(instance, domain, graph, proposal.seeds, robot_type=options.robot_type)
        except FilterTooAggressive as exc:
            notes.append(f"filter too aggressive ({exc}); planning on the unfiltered instance")
            log.warning(notes[-1])

    def plan_on(work: ProblemInstance, wdomain: Domain):
        wteam = [r for r in team if r.home_object in work.objects]
        subtasks = _stage(
            "decompose",
            decompose,
            work,
            wdomain,
            options.decompose_mode,
            robot_type=options.robot_type,
            llm_config=options.llm,
            client=client,
        )
        subtasks = _stage("solve", solve_subtasks, subtasks, work, wdomain, wteam, options.search)
        first = [s.stats for s in subtasks]
        allocation = _stage("allocate", allocate, subtasks, wteam, filtered, wdomain)
        subtasks, allocation = _stage(
            "solve", replan_for_allocation, subtasks, allocation, work, wdomain, wteam, options.search
        )
        stats = [s for s in first + [s.stats for s in subtasks] if s is not None]
        plan = _stage("integrate", integrate, subtasks, allocation, work, wdomain)
        return subtasks, allocation, plan, stats, len(ground_instance(work, wdomain))

    if filtered is not None:
        try:
            result = plan_on(filtered.problem(), filtered.domain(domain))
        except StageError as exc:
            if not isinstance(exc.cause, Unsolvable):
                raise
            notes.append(f"filtered instance unsolvable ({exc.cause}); planning on the unfiltered instance")
            log.warning(notes[-1])
            filtered = None
    if filtered is None:
        result = plan_on(instance, domain)
    subtasks, allocation, plan, stats, n_ground = result

    order = [plan.tracks[r][i] for r, i in linearize_keys(plan)]
    report = validate_plan(instance, Plan(tuple(order)), domain)
    if not report.valid:
        notes.append("integrated plan failed validation: " + report.describe())
    return RunResult(
        instance=instance,
        proposal=proposal,
        filtered=filtered,
        subtasks=subtasks,
        allocation=allocation,
        plan=plan,
        ground_actions=n_ground,
        expanded=sum(s.expanded for s in stats),
        generated=sum(s.generated for s in stats),
        planning_time=time.perf_counter() - start,
        plan_valid=report.valid,
        notes=notes,
    )


# -- benchmark harness ------------------------------------------------------------------


def record_instance(record: TaskRecord, domain: Domain | None = None, semantics: ActionSemantics | None = None):
    domain = domain or household_domain()
    goal = conditions_to_goal(record.ground_truth, record.scene)
    instance = world_to_problem(
        record.scene, goal, semantics=semantics, name=record.id, task_text=record.description, domain=domain
    )
    return instance, domain


@dataclass
class RecordOutcome:
    record: TaskRecord
    result: RunResult | None
    trace: ExecutionTrace
    error: str | None = None
    unfiltered: RunResult | None = None

    def to_json(self) -> dict:
        out = {
            "id": self.record.id,
            "category": self.record.category,
            "error": self.error,
            "stats": self.result.stats_json() if self.result else None,
            "trace": self.trace.to_json(),
        }
        if self.unfiltered is not None:
            out["unfiltered_stats"] = self.unfiltered.stats_json()
        return out


@dataclass
class BenchReport:
    outcomes: list[RecordOutcome]
    metrics: Metrics

    @property
    def planning_time(self) -> dict[str, float]:
        return {o.record.id: o.result.planning_time for o in self.outcomes if o.result is not None}

    def to_json(self) -> dict:
        return {"metrics": self.metrics.to_json(), "records": [o.to_json() for o in self.outcomes]}


def run_record(
    record: TaskRecord,
    team: Sequence[Robot] | None = None,
    options: RunOptions = RunOptions(),
    *,
    domain: Domain | None = None,
    semantics: ActionSemantics | None = None,
    client: ChatClient | None = None,
    filter_compare: bool = False,
) -> RecordOutcome:
    """Plan and execute one record; failures become an empty trace, never an exception."""
    semantics = semantics or ActionSemantics()
    try:
        instance, dom = record_instance(record, domain, semantics)
        result = run_pipeline(instance, dom, team, options, client=client)
        trace = execute_plan(record.scene, result.plan, semantics)
        unfiltered = None
        if filter_compare:
            unfiltered = run_pipeline(
                instance, dom, team, RunOptions(**{**options.__dict__, "use_filter": False}), client=client
            )
        return RecordOutcome(record, result, trace, None, unfiltered)
    except (ScalePlanError, ValueError) as exc:
        log.warning("record %s failed: %s", record.id, exc)
        return RecordOutcome(record, None, ExecutionTrace([], record.scene.copy()), f"{type(exc).__name__}: {exc}")


def run_benchmark(
    records: Sequence[TaskRecord],
    team: Sequence[Robot] | None = None,
    options: RunOptions = RunOptions(),
    *,
    workers: int = 4,
    domain: Domain | None = None,
    semantics: ActionSemantics | None = None,
    client: ChatClient | None = None,
    filter_compare: bool = False,
) -> BenchReport:
    """Evaluate every record on a bounded pool; results are ordered by record id."""
    if not records:
        raise ValueError("no records")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(
            pool.map(
                lambda r: run_record(
                    r, team, options, domain=domain, semantics=semantics, client=client, filter_compare=filter_compare
                ),
                records,
            )
        )
    outcomes.sort(key=lambda o: o.record.id)
    metrics = compute_metrics([o.record for o in outcomes], [o.trace for o in outcomes])
    return BenchReport(outcomes, metrics)
