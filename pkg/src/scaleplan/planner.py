"""Forward state-space search over grounded STRIPS tasks.

GBFS with the additive delete-relaxation heuristic is the default satisficing
configuration; BFS gives shortest plans. Both break ties first-in first-out and
generate successors in grounding order, so runs are reproducible down to the
expansion count.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import Exhausted, FilterTooAggressive, Unsolvable
from .pddl.grounding import ground_instance
from .pddl.model import Atom, Domain, GroundAction, Plan, ProblemInstance
from .pddl.semantics import validate_plan
from .relevance import FilteredInstance

INF = math.inf


@dataclass(frozen=True)
class SearchConfig:
    strategy: str = "gbfs"  # gbfs | bfs
    heuristic: str = "hadd"  # hadd | goalcount | zero
    max_expansions: int = 200_000
    tie_break: str = "fifo"

    def __post_init__(self):
        if self.strategy not in ("gbfs", "bfs"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.heuristic not in ("hadd", "goalcount", "zero"):
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.max_expansions <= 0:
            raise ValueError("max_expansions must be positive")
        if self.tie_break != "fifo":
            raise ValueError("only fifo tie-breaking is supported")


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    ground_actions: int = 0
    wall_time: float = 0.0
    plan_length: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SearchResult:
    plan: Plan
    stats: SearchStats


class CompiledTask:
    """Integer-indexed view of a grounded task used by search and heuristics."""

    def __init__(self, init: Iterable[Atom], goal: Iterable[Atom], actions: Sequence[GroundAction]):
        self.actions = list(actions)
        index: dict[Atom, int] = {}

        def ids(atoms: Iterable[Atom]) -> tuple[int, ...]:
            return tuple(index.setdefault(a, len(index)) for a in atoms)

        self.init = frozenset(ids(init))
        self.goal = frozenset(ids(goal))
        self.pre = [frozenset(ids(sorted(a.pre))) for a in self.actions]
        self.add = [frozenset(ids(sorted(a.add))) for a in self.actions]
        self.delete = [frozenset(ids(sorted(a.delete))) for a in self.actions]
        self.atoms = index
        n_atoms = len(index)

        # achiever/consumer tables for the relaxed cost propagation
        self.consumers: list[list[int]] = [[] for _ in range(n_atoms)]
        for i, pre in enumerate(self.pre):
            for p in pre:
                self.consumers[p].append(i)
        self.pre_count = [len(p) for p in self.pre]
        self.free_actions = [i for i, p in enumerate(self.pre) if not p]

        # successor index: each action hangs off its least-shared precondition
        share = [len(c) for c in self.consumers]
        self.by_trigger: list[list[int]] = [[] for _ in range(n_atoms)]
        for i, pre in enumerate(self.pre):
            if pre:
                self.by_trigger[min(pre, key=lambda p: (share[p], p))].append(i)

        # flat arrays for the vectorised relaxed fixpoint
        n_actions = len(self.actions)
        pre_flat = [p for pre in self.pre for p in sorted(pre)]
        self._pre_flat = np.array(pre_flat, dtype=np.int64)
        self._pre_off = np.array(
            np.cumsum([0] + [len(p) for p in self.pre])[:-1], dtype=np.int64
        )
        self._pre_nonempty = np.array([bool(p) for p in self.pre], dtype=bool)
        pairs = sorted((q, i) for i, add in enumerate(self.add) for q in add)
        self._add_act = np.array([i for _, i in pairs], dtype=np.int64)
        atoms_sorted = np.array([q for q, _ in pairs], dtype=np.int64)
        if len(pairs):
            starts = np.flatnonzero(np.r_[True, atoms_sorted[1:] != atoms_sorted[:-1]])
        else:
            starts = np.zeros(0, dtype=np.int64)
        self._add_starts = starts
        self._add_atoms = atoms_sorted[starts] if len(pairs) else atoms_sorted
        self._goal_arr = np.array(sorted(self.goal), dtype=np.int64)
        self._n_actions = n_actions

    def successors(self, state: frozenset[int]) -> list[int]:
        cands = list(self.free_actions)
        for atom in state:
            cands.extend(self.by_trigger[atom])
        cands.sort()
        pre = self.pre
        return [i for i in cands if pre[i] <= state]

    def progress(self, state: frozenset[int], i: int) -> frozenset[int]:
        return (state - self.delete[i]) | self.add[i]

    def h_add(self, state: frozenset[int]) -> float:
        """Additive heuristic as the fixpoint of ``cost(p) = min over achievers of 1 + sum(pre)``.

        Vectorised with numpy; agrees with :meth:`h_add_reference`.
        """
        if self.goal <= state:
            return 0
        n = len(self.atoms)
        if not self._n_actions or not len(self._add_atoms):
            return INF
        cost = np.full(n, INF)
        cost[np.fromiter(state, dtype=np.int64, count=len(state))] = 0.0
        act = np.ones(self._n_actions)
        has_pre = self._pre_nonempty
        while True:
            if len(self._pre_flat):
                sums = np.add.reduceat(cost[self._pre_flat], self._pre_off[has_pre])
                act[has_pre] = sums + 1.0
            best = np.minimum.reduceat(act[self._add_act], self._add_starts)
            current = cost[self._add_atoms]
            better = best < current
            if not better.any():
                break
            cost[self._add_atoms[better]] = best[better]
        total = float(cost[self._goal_arr].sum())
        return INF if math.isinf(total) else int(total)

    def h_add_reference(self, state: frozenset[int]) -> float:
        """Dijkstra-style additive heuristic; slower, kept as an independent check."""
        goal = self.goal
        if goal <= state:
            return 0
        remaining = len(goal)
        cost: dict[int, float] = dict.fromkeys(state, 0)
        heap: list[tuple[float, int]] = [(0, a) for a in state]
        heapq.heapify(heap)
        counters = self.pre_count[:]
        acc = [0] * len(self.actions)
        add = self.add
        consumers = self.consumers
        for i in self.free_actions:
            for q in add[i]:
                if q not in cost or 1 < cost[q]:
                    cost[q] = 1
                    heapq.heappush(heap, (1, q))
        done: set[int] = set()
        total = 0
        while heap:
            c, atom = heapq.heappop(heap)
            if atom in done:
                continue
            done.add(atom)
            if atom in goal:
                total += c
                remaining -= 1
                if not remaining:
                    return total
            for i in consumers[atom]:
                acc[i] += c
                counters[i] -= 1
                if counters[i] == 0:
                    ac = acc[i] + 1
                    for q in add[i]:
                        if ac < cost.get(q, INF):
                            cost[q] = ac
                            heapq.heappush(heap, (ac, q))
        return INF

    def goal_count(self, state: frozenset[int]) -> int:
        return len(self.goal - state)


def h_add(state: Iterable[Atom], goal: Iterable[Atom], ground_actions: Sequence[GroundAction]) -> float:
    """Additive delete-relaxation estimate of the cost of reaching ``goal`` from ``state``."""
    task = CompiledTask(state, goal, ground_actions)
    return task.h_add(task.init)


def _heuristic(task: CompiledTask, name: str):
    if name == "hadd":
        return task.h_add
    if name == "goalcount":
        return task.goal_count
    return lambda state: 0


def _extract(task: CompiledTask, parents: dict, state) -> Plan:
    steps = []
    while True:
        parent, action = parents[state]
        if parent is None:
            break
        steps.append(task.actions[action])
        state = parent
    steps.reverse()
    return Plan(tuple(steps))


def search(task: CompiledTask, config: SearchConfig = SearchConfig()) -> SearchResult:
    stats = SearchStats(ground_actions=len(task.actions))
    start = time.perf_counter()
    try:
        if config.strategy == "bfs":
            plan = _bfs(task, config, stats)
        else:
            plan = _gbfs(task, config, stats)
    finally:
        stats.wall_time = time.perf_counter() - start
    stats.plan_length = len(plan)
    return SearchResult(plan, stats)


def _gbfs(task: CompiledTask, config: SearchConfig, stats: SearchStats) -> Plan:
    h = _heuristic(task, config.heuristic)
    root = task.init
    h0 = h(root)
    if h0 == INF:
        raise Unsolvable("goal unreachable under delete relaxation", stats)
    parents: dict[frozenset[int], tuple] = {root: (None, None)}
    counter = 0
    heap = [(h0, counter, root)]
    goal = task.goal
    while heap:
        _, _, state = heapq.heappop(heap)
        if goal <= state:
            return _extract(task, parents, state)
        if stats.expanded >= config.max_expansions:
            raise Exhausted(f"expansion limit {config.max_expansions} reached", stats)
        stats.expanded += 1
        for i in task.successors(state):
            child = task.progress(state, i)
            stats.generated += 1
            if child in parents:
                continue
            parents[child] = (state, i)
            hc = h(child)
            if hc == INF:
                continue
            counter += 1
            heapq.heappush(heap, (hc, counter, child))
    raise Unsolvable(stats=stats)


def _bfs(task: CompiledTask, config: SearchConfig, stats: SearchStats) -> Plan:
    root = task.init
    goal = task.goal
    parents: dict[frozenset[int], tuple] = {root: (None, None)}
    if goal <= root:
        return Plan()
    queue = deque([root])
    while queue:
        state = queue.popleft()
        if stats.expanded >= config.max_expansions:
            raise Exhausted(f"expansion limit {config.max_expansions} reached", stats)
        stats.expanded += 1
        for i in task.successors(state):
            child = task.progress(state, i)
            stats.generated += 1
            if child in parents:
                continue
            parents[child] = (state, i)
            if goal <= child:
                return _extract(task, parents, child)
            queue.append(child)
    raise Unsolvable(stats=stats)


def solve(
    instance: ProblemInstance,
    domain: Domain,
    config: SearchConfig = SearchConfig(),
    *,
    actions: Sequence[GroundAction] | None = None,
) -> SearchResult:
    """Ground (unless ``actions`` is given) and search. Raises Unsolvable or Exhausted."""
    if actions is None:
        actions = ground_instance(instance, domain)
    task = CompiledTask(instance.init, instance.goal, actions)
    result = search(task, config)
    report = validate_plan(instance, result.plan, domain)
    if not report.valid:  # pragma: no cover - guards search invariants
        raise AssertionError(f"planner produced an invalid plan: {report.describe()}")
    return result


@dataclass
class RunSide:
    stats: SearchStats | None = None
    plan: Plan | None = None
    error: str | None = None
    fell_back: bool = False

    def to_json(self) -> dict:
        return {
            "stats": self.stats.to_json() if self.stats else None,
            "plan": self.plan.to_json() if self.plan is not None else None,
            "error": self.error,
            "fell_back": self.fell_back,
        }


@dataclass
class ComparisonReport:
    original: RunSide
    filtered: RunSide
    filtered_plan_valid: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "original": self.original.to_json(),
            "filtered": self.filtered.to_json(),
            "filtered_plan_valid_on_original": self.filtered_plan_valid,
            "notes": list(self.notes),
        }


def _run_side(instance: ProblemInstance, domain: Domain, config: SearchConfig) -> RunSide:
    actions = ground_instance(instance, domain)
    try:
        res = solve(instance, domain, config, actions=actions)
        return RunSide(res.stats, res.plan)
    except (Unsolvable, Exhausted) as exc:
        return RunSide(exc.stats or SearchStats(ground_actions=len(actions)), None, f"{type(exc).__name__}: {exc}")


def compare_runs(
    instance: ProblemInstance,
    filtered: FilteredInstance | None,
    domain: Domain,
    config: SearchConfig = SearchConfig(),
) -> ComparisonReport:
    """Solve the original and the filtered instance side by side.

    ``filtered=None`` means filtering was abandoned; the filtered side is then
    the original instance and is marked as fallen back.
    """
    if filtered is None:
        f_problem, f_domain, fell_back = instance, domain, True
    else:
        f_problem, f_domain, fell_back = filtered.problem(), filtered.domain(domain), False
    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_o = pool.submit(_run_side, instance, domain, config)
        fut_f = pool.submit(_run_side, f_problem, f_domain, config)
        original, side = fut_o.result(), fut_f.result()
    side.fell_back = fell_back
    report = ComparisonReport(original, side)
    if fell_back:
        report.notes.append("filter too aggressive; filtered side fell back to original")
    if side.plan is not None:
        check = validate_plan(instance, side.plan, domain)
        report.filtered_plan_valid = check.valid
        if not check.valid:
            report.notes.append("filtered plan invalid on original: " + check.describe())
    return report


def compare_with_seeds(instance, domain, graph, seeds, config: SearchConfig = SearchConfig()) -> ComparisonReport:
    """Filter with ``seeds`` and compare; falls back when the filter is too aggressive."""
    from .relevance import build_filtered_instance

    try:
        filtered = build_filtered_instance(instance, domain, graph, seeds)
    except FilterTooAggressive:
        filtered = None
    return compare_runs(instance, filtered, domain, config)


__all__ = [
    "INF",
    "CompiledTask",
    "ComparisonReport",
    "RunSide",
    "SearchConfig",
    "SearchResult",
    "SearchStats",
    "compare_runs",
    "compare_with_seeds",
    "h_add",
    "search",
    "solve",
]
