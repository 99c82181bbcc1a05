"""Heterogeneous teams: goal decomposition, allocation, and partial-order plan merging."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import EmptyGoal, NoCapableRobot, ScalePlanError
from .pddl.model import Atom, Domain, GroundAction, Plan, ProblemInstance
from .pddl.semantics import instantiate
from .planner import SearchConfig, SearchStats, solve
from .relevance import FilteredInstance


@dataclass(frozen=True)
class Robot:
    id: str
    capabilities: frozenset[str]
    home_object: str

    def to_json(self) -> dict:
        return {"id": self.id, "object": self.home_object, "capabilities": sorted(self.capabilities)}


def load_team(data: Mapping, domain: Domain | None = None) -> list[Robot]:
    """Read ``{"robots": [{"id", "object", "capabilities"}]}``; missing capabilities = every schema."""
    robots = []
    for entry in data.get("robots", ()):
        caps = entry.get("capabilities")
        if caps is None:
            if domain is None:
                raise ValueError(f"robot {entry['id']!r} has no capabilities and no domain was given")
            caps = domain.action_names
        caps = frozenset(str(c).lower() for c in caps)
        if domain is not None:
            unknown = sorted(c for c in caps if not domain.has_action(c))
            if unknown:
                raise ValueError(f"robot {entry['id']!r} lists unknown capabilities {unknown}")
        robots.append(Robot(str(entry["id"]), caps, str(entry.get("object", entry["id"])).lower()))
    ids = [r.id for r in robots]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate robot ids in team")
    return robots


@dataclass
class Subtask:
    id: str
    goal_atoms: frozenset[Atom]
    plan: Plan | None = None
    stats: SearchStats | None = field(default=None, compare=False)

    @property
    def required_schemas(self) -> frozenset[str]:
        return frozenset(s.schema for s in self.plan) if self.plan is not None else frozenset()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "goals": [str(g) for g in sorted(self.goal_atoms)],
            "plan": self.plan.to_json() if self.plan is not None else None,
        }


# -- decomposition -------------------------------------------------------------------


def decompose(
    instance: ProblemInstance,
    domain: Domain,
    mode: str = "rule",
    *,
    robot_type: str = "robot",
    llm_config=None,
    client=None,
) -> list[Subtask]:
    """Split the goal into subtasks.

    ``rule``: connected components of goal atoms, linking atoms that share a
    non-robot object. ``llm``: ask the chat endpoint, validated so the subtask
    goals partition the goal exactly.
    """
    if not instance.goal:
        raise EmptyGoal("cannot decompose an empty goal")
    if mode == "llm":
        from .seeder import llm_decompose

        groups = llm_decompose(instance, domain, llm_config, client=client)
        return [Subtask(f"t{i + 1}", frozenset(g)) for i, g in enumerate(groups)]
    if mode != "rule":
        raise ValueError(f"unknown decomposition mode {mode!r}")

    robots = set(instance.objects_of_type(robot_type, domain.types)) if robot_type in domain.types else set()
    atoms = sorted(instance.goal)
    parent = list(range(len(atoms)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for i, atom in enumerate(atoms):
        for obj in atom.args:
            if obj in robots:
                continue
            if obj in owner:
                parent[find(i)] = find(owner[obj])
            else:
                owner[obj] = i
    comps: dict[int, list[Atom]] = {}
    for i, atom in enumerate(atoms):
        comps.setdefault(find(i), []).append(atom)
    groups = sorted(comps.values(), key=lambda g: g[0])
    return [Subtask(f"t{i + 1}", frozenset(g)) for i, g in enumerate(groups)]


# -- per-subtask solving ------------------------------------------------------------


def robot_view(
    instance: ProblemInstance,
    domain: Domain,
    team: Sequence[Robot],
    allowed: Sequence[Robot],
    *,
    init: Iterable[Atom] | None = None,
    goal: Iterable[Atom] | None = None,
) -> tuple[ProblemInstance, Domain]:
    """The instance as seen by ``allowed`` robots: other team robots removed, schemas
    restricted to the union of the allowed robots' capabilities."""
    others = {r.home_object for r in team} - {r.home_object for r in allowed}
    base = instance.with_goal(instance.goal if goal is None else goal, init=init)
    view = base.restrict_objects([o for o in base.objects if o not in others])
    caps = frozenset().union(*(r.capabilities for r in allowed)) if allowed else frozenset()
    return view, domain.restrict(caps)


def solve_subtasks(
    subtasks: Sequence[Subtask],
    instance: ProblemInstance,
    domain: Domain,
    team: Sequence[Robot],
    config: SearchConfig = SearchConfig(),
) -> list[Subtask]:
    """Solve each subtask from the initial state with the whole team available."""
    out = []
    for st in subtasks:
        view, vdomain = robot_view(instance, domain, team, team, goal=st.goal_atoms)
        result = solve(view, vdomain, config)
        out.append(replace(st, plan=result.plan, stats=result.stats))
    return out


# -- allocation ---------------------------------------------------------------------


@dataclass(frozen=True)
class Allocation:
    assignments: Mapping[str, str]
    parallel_groups: tuple[frozenset[str], ...]

    def group_of(self, subtask_id: str) -> int:
        for i, g in enumerate(self.parallel_groups):
            if subtask_id in g:
                return i
        raise KeyError(subtask_id)

    def to_json(self) -> dict:
        return {
            "assignments": dict(sorted(self.assignments.items())),
            "parallel_groups": [sorted(g) for g in self.parallel_groups],
        }


def retarget(plan: Plan, robot_objects: Iterable[str], target: str, domain: Domain | None = None) -> Plan:
    """Rebind every team-robot argument in ``plan`` to ``target``."""
    robot_objects = set(robot_objects)
    steps = []
    for s in plan:
        args = tuple(target if a in robot_objects else a for a in s.args)
        step = GroundAction(s.schema, args)
        if domain is not None:
            pre, add, delete = instantiate(step, domain)
            step = GroundAction(s.schema, args, pre, add, delete)
        steps.append(step)
    return Plan(tuple(steps))


def _effects(plan: Plan, domain: Domain) -> tuple[set[Atom], set[Atom], set[Atom]]:
    pre: set[Atom] = set()
    add: set[Atom] = set()
    delete: set[Atom] = set()
    for s in plan:
        p, a, d = instantiate(s, domain)
        pre |= p
        add |= a
        delete |= d
    return pre, add, delete


def conflicts(a: Subtask, b: Subtask, domain: Domain) -> bool:
    """Whether two solved subtasks may not run interleaved.

    One side deleting a precondition, goal atom, or add effect of the other.
    """
    pa, aa, da = _effects(a.plan, domain)
    pb, ab, db = _effects(b.plan, domain)
    return bool(da & (pb | b.goal_atoms | ab) or db & (pa | a.goal_atoms | aa))


def _group(order: Sequence[Subtask], assignments: Mapping[str, str], domain: Domain) -> tuple[frozenset[str], ...]:
    groups: list[list[Subtask]] = []
    for st in order:
        for g in groups:
            if all(assignments[o.id] != assignments[st.id] and not conflicts(o, st, domain) for o in g):
                g.append(st)
                break
        else:
            groups.append([st])
    return tuple(frozenset(s.id for s in g) for g in groups)


def allocate(
    subtasks: Sequence[Subtask],
    robots: Sequence[Robot],
    filtered: FilteredInstance | None,
    domain: Domain,
) -> Allocation:
    """Greedy load-balanced assignment, longest plans first; ties go to the lowest robot id."""
    if filtered is not None:
        robots = [r for r in robots if r.home_object in filtered.kept_objects]
    robots = sorted(robots, key=lambda r: r.id)
    order = sorted(subtasks, key=lambda s: (-len(s.plan or ()), s.id))
    load = {r.id: 0 for r in robots}
    assignments: dict[str, str] = {}
    for st in order:
        if st.plan is None:
            raise ScalePlanError(f"subtask {st.id!r} has no plan; solve it before allocating")
        need = st.required_schemas
        capable = [r for r in robots if need <= r.capabilities]
        if not capable:
            best = max(robots, key=lambda r: len(need & r.capabilities), default=None)
            raise NoCapableRobot(st.id, need - (best.capabilities if best else frozenset()))
        chosen = min(capable, key=lambda r: (load[r.id], r.id))
        assignments[st.id] = chosen.id
        load[chosen.id] += len(st.plan)

    by_id = {r.id: r for r in robots}
    homes = {r.home_object for r in robots}
    moved = [
        replace(st, plan=retarget(st.plan, homes, by_id[assignments[st.id]].home_object, domain)) for st in order
    ]
    return Allocation(assignments, _group(moved, assignments, domain))


def replan_for_allocation(
    subtasks: Sequence[Subtask],
    allocation: Allocation,
    instance: ProblemInstance,
    domain: Domain,
    team: Sequence[Robot],
    config: SearchConfig = SearchConfig(),
) -> tuple[list[Subtask], Allocation]:
    """Re-solve every subtask for its assigned robot, group by group, from the state the
    earlier groups leave behind. Groups whose new plans conflict are split."""
    by_id = {s.id: s for s in subtasks}
    robots = {r.id: r for r in team}
    state = instance.init
    solved: dict[str, Subtask] = {}
    groups: list[frozenset[str]] = []
    pending = [sorted(g) for g in allocation.parallel_groups]
    while pending:
        ids = pending.pop(0)
        current: list[Subtask] = []
        for sid in ids:
            st = by_id[sid]
            robot = robots[allocation.assignments[sid]]
            view, vdomain = robot_view(instance, domain, team, [robot], init=state, goal=st.goal_atoms)
            result = solve(view, vdomain, config)
            current.append(replace(st, plan=result.plan, stats=result.stats))
        keep: list[Subtask] = []
        spill: list[str] = []
        for st in current:
            if all(not conflicts(o, st, domain) for o in keep):
                keep.append(st)
            else:
                spill.append(st.id)
        if spill:
            pending.insert(0, spill)
        for st in keep:
            for step in st.plan:
                _, add, delete = instantiate(step, domain)
                state = (state - delete) | add
            solved[st.id] = st
        groups.append(frozenset(s.id for s in keep))
    return [solved[s.id] for s in subtasks], Allocation(dict(allocation.assignments), tuple(groups))


# -- integration --------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Ordering:
    """Step ``before_step`` of ``before_robot`` precedes step ``after_step`` of ``after_robot``."""

    before_robot: str
    before_step: int
    after_robot: str
    after_step: int


@dataclass
class IntegratedPlan:
    tracks: dict[str, list[GroundAction]]
    orderings: frozenset[Ordering] = frozenset()
    step_subtask: dict[tuple[str, int], str] = field(default_factory=dict)
    fallback: bool = False
    notes: list[str] = field(default_factory=list)

    def steps(self) -> list[tuple[str, int]]:
        return [(r, i) for r in sorted(self.tracks) for i in range(len(self.tracks[r]))]

    @property
    def size(self) -> int:
        return sum(len(t) for t in self.tracks.values())

    def predecessors(self) -> dict[tuple[str, int], set[tuple[str, int]]]:
        preds: dict[tuple[str, int], set[tuple[str, int]]] = {s: set() for s in self.steps()}
        for r, track in self.tracks.items():
            for i in range(1, len(track)):
                preds[(r, i)].add((r, i - 1))
        for o in self.orderings:
            preds[(o.after_robot, o.after_step)].add((o.before_robot, o.before_step))
        return preds

    def to_json(self) -> dict:
        return {
            "tracks": {r: [s.to_json() for s in t] for r, t in sorted(self.tracks.items())},
            "orderings": [
                {"before": [o.before_robot, o.before_step], "after": [o.after_robot, o.after_step]}
                for o in sorted(self.orderings)
            ],
            "makespan": makespan(self),
            "fallback": self.fallback,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "IntegratedPlan":
        tracks = {r: [GroundAction.from_json(s) for s in t] for r, t in data.get("tracks", {}).items()}
        orderings = frozenset(
            Ordering(o["before"][0], int(o["before"][1]), o["after"][0], int(o["after"][1]))
            for o in data.get("orderings", ())
        )
        return cls(tracks, orderings, fallback=bool(data.get("fallback", False)))


def _topo_order(plan: IntegratedPlan) -> list[tuple[str, int]] | None:
    preds = plan.predecessors()
    indeg = {s: len(p) for s, p in preds.items()}
    succ: dict[tuple[str, int], list[tuple[str, int]]] = defaultdict(list)
    for s, ps in preds.items():
        for p in ps:
            succ[p].append(s)
    ready = sorted(s for s, d in indeg.items() if d == 0)
    out = []
    while ready:
        s = ready.pop(0)
        out.append(s)
        for t in sorted(succ[s]):
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
        ready.sort()
    return out if len(out) == len(indeg) else None


def _pareto(pairs: set[tuple[int, int]]) -> set[tuple[int, int]]:
    """Drop constraints implied by another one through track order."""
    return {
        (i, j)
        for i, j in pairs
        if not any((i2, j2) != (i, j) and i2 >= i and j2 <= j for i2, j2 in pairs)
    }


def integrate(
    subtasks: Sequence[Subtask],
    allocation: Allocation,
    instance: ProblemInstance,
    domain: Domain,
) -> IntegratedPlan:
    """Lay sub-plans on per-robot tracks and add the cross-track orderings they need.

    Step a precedes step b on another track when a's effects touch b's
    preconditions or b's subtask goals and a's group is not later than b's,
    or when b (in a later group) deletes one of a's preconditions.
    """
    by_id = {s.id: s for s in subtasks}
    tracks: dict[str, list[GroundAction]] = {}
    meta: dict[tuple[str, int], str] = {}
    info: dict[tuple[str, int], tuple[int, frozenset, frozenset, frozenset, frozenset]] = {}
    robots = sorted(set(allocation.assignments.values()))
    for r in robots:
        tracks[r] = []
    for g, group in enumerate(allocation.parallel_groups):
        for sid in sorted(group):
            st = by_id[sid]
            r = allocation.assignments[sid]
            for step in st.plan or ():
                key = (r, len(tracks[r]))
                pre, add, delete = instantiate(step, domain)
                tracks[r].append(step)
                meta[key] = sid
                info[key] = (g, pre, add, delete, st.goal_atoms)

    raw: dict[tuple[str, str], set[tuple[int, int]]] = defaultdict(set)
    for ka, (ga, pre_a, add_a, del_a, _) in info.items():
        eff_a = add_a | del_a
        for kb, (gb, pre_b, _, del_b, goals_b) in info.items():
            if ka[0] == kb[0] or ga > gb:
                continue
            if eff_a & (pre_b | goals_b) or (ga < gb and del_b & pre_a):
                raw[(ka[0], kb[0])].add((ka[1], kb[1]))
    orderings = {Ordering(ra, i, rb, j) for (ra, rb), pairs in raw.items() for i, j in _pareto(pairs)}
    plan = IntegratedPlan(tracks, frozenset(orderings), meta)
    if _topo_order(plan) is None:
        plan = _sequentialize(plan, allocation, info)
    return plan


def _sequentialize(plan: IntegratedPlan, allocation: Allocation, info) -> IntegratedPlan:
    """Fallback: run subtasks one after another, in group order."""
    spans: dict[str, list[tuple[str, int]]] = defaultdict(list)
    for key, sid in plan.step_subtask.items():
        spans[sid].append(key)
    order = [sid for g in allocation.parallel_groups for sid in sorted(g)]
    chain = []
    prev_last = None
    for sid in order:
        steps = sorted(spans.get(sid, ()), key=lambda k: k[1])
        if not steps:
            continue
        if prev_last is not None and prev_last[0] != steps[0][0]:
            chain.append(Ordering(prev_last[0], prev_last[1], steps[0][0], steps[0][1]))
        prev_last = steps[-1]
    notes = plan.notes + ["cyclic cross-track constraints; fell back to sequential execution"]
    return IntegratedPlan(plan.tracks, frozenset(chain), plan.step_subtask, True, notes)


def makespan(plan: IntegratedPlan) -> int:
    """Longest chain of unit-duration steps under track order and cross-track orderings."""
    order = _topo_order(plan)
    if order is None:
        raise ScalePlanError("integrated plan has cyclic orderings")
    preds = plan.predecessors()
    finish: dict[tuple[str, int], int] = {}
    for s in order:
        finish[s] = 1 + max((finish[p] for p in preds[s]), default=0)
    return max(finish.values(), default=0)


def linearize(plan: IntegratedPlan, rng: random.Random | None = None) -> list[GroundAction]:
    """A constraint-respecting total order; random among ready steps when ``rng`` is given,
    otherwise round-robin over robots in id order."""
    preds = plan.predecessors()
    done: set[tuple[str, int]] = set()
    nxt = {r: 0 for r in plan.tracks}
    out: list[GroundAction] = []
    robots = sorted(plan.tracks)
    total = plan.size
    while len(out) < total:
        ready = [
            r for r in robots if nxt[r] < len(plan.tracks[r]) and preds[(r, nxt[r])] <= done
        ]
        if not ready:
            raise ScalePlanError("integrated plan has cyclic orderings")
        chosen = [rng.choice(ready)] if rng is not None else ready
        for r in chosen:
            if rng is None and not preds[(r, nxt[r])] <= done:
                continue
            out.append(plan.tracks[r][nxt[r]])
            done.add((r, nxt[r]))
            nxt[r] += 1
    return out


def linearize_keys(plan: IntegratedPlan) -> list[tuple[str, int]]:
    """Round-robin linearization as (robot, step index) keys."""
    preds = plan.predecessors()
    done: set[tuple[str, int]] = set()
    nxt = {r: 0 for r in plan.tracks}
    robots = sorted(plan.tracks)
    out: list[tuple[str, int]] = []
    while len(out) < plan.size:
        progressed = False
        for r in robots:
            if nxt[r] < len(plan.tracks[r]) and preds[(r, nxt[r])] <= done:
                out.append((r, nxt[r]))
                done.add((r, nxt[r]))
                nxt[r] += 1
                progressed = True
        if not progressed:
            raise ScalePlanError("integrated plan has cyclic orderings")
    return out
