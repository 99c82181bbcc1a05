"""Symbolic household world and a rule-based executor for integrated plans."""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import UnknownActionKind
from ..pddl.model import GroundAction, Plan

OPEN, CLOSED = "open", "closed"

AFFORDANCES = (
    "pickupable",
    "container",
    "surface",
    "openable",
    "toggleable",
    "sliceable",
    "cleanable",
    "cookable",
    "breakable",
    "knife",
    "heater",
)

_P, _C, _S, _O, _T = "pickupable", "container", "surface", "openable", "toggleable"
DEFAULT_AFFORDANCES: dict[str, frozenset[str]] = {
    k: frozenset(v)
    for k, v in {
        "apple": {_P, "sliceable", "cookable"},
        "bread": {_P, "sliceable", "cookable"},
        "egg": {_P, "breakable", "cookable"},
        "lettuce": {_P, "sliceable", "cleanable"},
        "potato": {_P, "sliceable", "cookable", "cleanable"},
        "tomato": {_P, "sliceable", "cleanable"},
        "plunger": {_P},
        "sponge": {_P},
        "cup": {_P, _C, "cleanable", "breakable"},
        "mug": {_P, _C, "cleanable", "breakable"},
        "bowl": {_P, _C, "cleanable"},
        "plate": {_P, _S, "cleanable", "breakable"},
        "pan": {_P, _C, "cleanable"},
        "knife": {_P, "knife"},
        "butterknife": {_P, "knife"},
        "fridge": {_C, _O},
        "cabinet": {_C, _O},
        "drawer": {_C, _O},
        "microwave": {_C, _O, _T, "heater"},
        "stoveburner": {_S, _T, "heater"},
        "sinkbasin": {_C},
        "sink": {_C},
        "countertop": {_S},
        "diningtable": {_S},
        "shelf": {_S},
        "garbagecan": {_C},
        "box": {_C},
        "lightswitch": {_T},
        "television": {_T, "breakable"},
        "window": {"breakable"},
    }.items()
}


def object_class(name: str) -> str:
    """``"Apple_2"`` and ``"apple2"`` both belong to class ``apple``."""
    return re.sub(r"[_\-]*\d+$", "", name.lower()).replace("_", "").replace("-", "")


@dataclass(frozen=True)
class ActionSemantics:
    """Affordance table keyed by object class; unknown classes afford nothing."""

    affordances: Mapping[str, frozenset[str]] = field(default_factory=lambda: dict(DEFAULT_AFFORDANCES))

    def affords(self, obj: str, tag: str) -> bool:
        return tag in self.affordances.get(object_class(obj), frozenset())

    def tags(self, obj: str) -> frozenset[str]:
        return frozenset(self.affordances.get(object_class(obj), frozenset()))

    def with_classes(self, extra: Mapping[str, Sequence[str]]) -> "ActionSemantics":
        table = dict(self.affordances)
        table.update({k.lower(): frozenset(v) for k, v in extra.items()})
        return ActionSemantics(table)


@dataclass
class WorldState:
    """Objects, their state tags, what contains what, and what each robot holds.

    ``near`` records every object a robot has walked to; it only grows, like
    the ``near`` predicate of the household domain.
    """

    object_states: dict[str, set[str]] = field(default_factory=dict)
    containment: dict[str, set[str]] = field(default_factory=dict)
    held: dict[str, str | None] = field(default_factory=dict)
    open_state: dict[str, str] = field(default_factory=dict)
    near: dict[str, set[str]] = field(default_factory=dict)

    @property
    def objects(self) -> list[str]:
        return sorted(self.object_states)

    @property
    def robots(self) -> list[str]:
        return sorted(self.held)

    def container_of(self, obj: str) -> str | None:
        for c in sorted(self.containment):
            if obj in self.containment[c]:
                return c
        return None

    def tags(self, obj: str) -> set[str]:
        """State tags including OPEN/CLOSED for openable objects."""
        tags = set(self.object_states.get(obj, ()))
        if obj in self.open_state:
            tags.add(self.open_state[obj].upper())
        return tags

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    def check(self) -> None:
        holders: dict[str, str] = {}
        for r, o in self.held.items():
            if o is None:
                continue
            if o in holders:
                raise ValueError(f"{o} held by both {holders[o]} and {r}")
            holders[o] = r
            if self.container_of(o) is not None:
                raise ValueError(f"held object {o} is also inside {self.container_of(o)}")

    def to_json(self) -> dict:
        objects = {}
        for o in self.objects:
            entry: dict = {"states": sorted(self.object_states[o])}
            if self.containment.get(o):
                entry["contains"] = sorted(self.containment[o])
            if o in self.open_state:
                entry["open"] = self.open_state[o]
            objects[o] = entry
        robots = {r: {"held": self.held[r], "near": sorted(self.near.get(r, ()))} for r in self.robots}
        return {"objects": objects, "robots": robots}

    @classmethod
    def from_json(cls, data: Mapping) -> "WorldState":
        w = cls()
        for name, entry in (data.get("objects") or {}).items():
            o = name.lower()
            entry = entry or {}
            tags = {str(s).upper() for s in entry.get("states") or ()}
            for tag in ("OPEN", "CLOSED"):
                if tag in tags:
                    tags.discard(tag)
                    w.open_state[o] = tag.lower()
            w.object_states[o] = tags
            if entry.get("contains"):
                w.containment[o] = {str(c).lower() for c in entry["contains"]}
            if entry.get("open") is not None:
                state = entry["open"]
                if isinstance(state, bool):
                    state = OPEN if state else CLOSED
                state = str(state).lower()
                if state not in (OPEN, CLOSED):
                    raise ValueError(f"open state of {o} must be 'open' or 'closed'")
                w.open_state[o] = state
        for name, entry in (data.get("robots") or {}).items():
            r = name.lower()
            entry = entry or {}
            held = entry.get("held")
            w.held[r] = held.lower() if held else None
            w.near[r] = {str(x).lower() for x in entry.get("near") or ()}
        for c, items in w.containment.items():
            for o in items:
                w.object_states.setdefault(o, set())
            w.object_states.setdefault(c, set())
        for o in w.held.values():
            if o is not None:
                w.object_states.setdefault(o, set())
        w.check()
        return w


# -- executor ---------------------------------------------------------------------------

KINDS = {
    "goto": "GoTo",
    "pickup": "PickUp",
    "putin": "PutIn",
    "puton": "PutOn",
    "putdown": "PutDown",
    "open": "Open",
    "close": "Close",
    "toggleon": "ToggleOn",
    "toggleoff": "ToggleOff",
    "slice": "Slice",
    "clean": "Clean",
    "cook": "Cook",
    "break": "Break",
}


@dataclass(frozen=True)
class StepRecord:
    index: int
    robot: str
    action: GroundAction
    success: bool
    failure: str | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "robot": self.robot,
            "action": self.action.to_json(),
            "success": self.success,
            "failure": self.failure,
        }


@dataclass
class ExecutionTrace:
    steps: list[StepRecord]
    final_world: WorldState

    @property
    def succeeded(self) -> int:
        return sum(1 for s in self.steps if s.success)

    @property
    def total(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "succeeded": self.succeeded,
            "total": self.total,
            "final_world": self.final_world.to_json(),
        }


def _fail_or_apply(world: WorldState, action: GroundAction, sem: ActionSemantics) -> str | None:
    """Apply ``action`` in place, or return the failure reason leaving ``world`` untouched."""
    kind = KINDS.get(action.schema)
    if kind is None:
        raise UnknownActionKind(f"no execution rule for action {action.schema!r}")
    args = action.args
    if not args:
        return "missing robot argument"
    r = args[0]
    if r not in world.held:
        return f"unknown robot {r}"
    for o in args[1:]:
        if o not in world.object_states:
            return f"unknown object {o}"
    held = world.held[r]
    near = world.near.setdefault(r, set())

    def closed(c: str) -> bool:
        return world.open_state.get(c) == CLOSED

    if kind == "GoTo":
        if len(args) != 2:
            return "bad arity"
        near.add(args[1])
        return None
    if kind == "PutDown":
        if held is None or (len(args) > 1 and held != args[1]):
            return "not holding"
        world.held[r] = None
        return None

    o = args[1] if len(args) > 1 else None
    if o is None:
        return "bad arity"

    if kind == "PickUp":
        if held is not None:
            return "hands full"
        if not sem.affords(o, "pickupable"):
            return "not pickupable"
        if o not in near:
            return "not near"
        c = args[2] if len(args) > 2 else world.container_of(o)
        if c is None or o not in world.containment.get(c, ()):
            return "not in receptacle"
        if closed(c):
            return "receptacle closed"
        world.containment[c].discard(o)
        if not world.containment[c]:
            del world.containment[c]
        world.held[r] = o
        return None
    if kind in ("PutIn", "PutOn"):
        c = args[2] if len(args) > 2 else None
        if c is None:
            return "bad arity"
        if held != o:
            return "not holding"
        if kind == "PutIn" and not sem.affords(c, "container"):
            return "not a container"
        if kind == "PutOn" and not sem.affords(c, "surface"):
            return "not a surface"
        if kind == "PutIn" and closed(c):
            return "receptacle closed"
        if c not in near:
            return "not near"
        world.containment.setdefault(c, set()).add(o)
        world.held[r] = None
        return None
    if kind in ("Open", "Close"):
        if not sem.affords(o, "openable"):
            return "not openable"
        want = OPEN if kind == "Open" else CLOSED
        if world.open_state.get(o, CLOSED) == want:
            return f"already {want}"
        if o not in near:
            return "not near"
        world.open_state[o] = want
        return None
    if kind in ("ToggleOn", "ToggleOff"):
        if not sem.affords(o, "toggleable"):
            return "not toggleable"
        tags = world.object_states[o]
        on = kind == "ToggleOn"
        if ("ON" if on else "OFF") in tags:
            return "already on" if on else "already off"
        if o not in near:
            return "not near"
        tags.discard("OFF" if on else "ON")
        tags.add("ON" if on else "OFF")
        return None
    if kind == "Slice":
        if not sem.affords(o, "sliceable"):
            return "not sliceable"
        if held is None or not sem.affords(held, "knife"):
            return "no knife held"
        if o not in near:
            return "not near"
        world.object_states[o].add("SLICED")
        return None
    if kind == "Clean":
        if not sem.affords(o, "cleanable"):
            return "not cleanable"
        if o not in near:
            return "not near"
        world.object_states[o].add("CLEANED")
        return None
    if kind == "Cook":
        h = args[2] if len(args) > 2 else None
        if not sem.affords(o, "cookable"):
            return "not cookable"
        if h is None or not sem.affords(h, "heater"):
            return "not a heater"
        if o not in world.containment.get(h, ()):
            return "not in heater"
        if "ON" not in world.object_states[h]:
            return "heater off"
        if h not in near:
            return "not near"
        world.object_states[o].add("COOKED")
        return None
    # Break
    if not sem.affords(o, "breakable"):
        return "not breakable"
    if o not in near:
        return "not near"
    world.object_states[o].add("BROKEN")
    return None


def execute_step(world: WorldState, action: GroundAction, semantics: ActionSemantics) -> str | None:
    """Execute one action. Returns None on success, else the failure reason (world unchanged)."""
    trial = world.copy()
    reason = _fail_or_apply(trial, action, semantics)
    if reason is None:
        world.__dict__.update(trial.__dict__)
    return reason


def execute_plan(world: WorldState, plan, semantics: ActionSemantics | None = None) -> ExecutionTrace:
    """Run a plan without stopping at failures.

    ``plan`` may be an :class:`IntegratedPlan` (executed in its round-robin
    linearization), a :class:`Plan`, or a list of ground actions.
    """
    from ..multiagent import IntegratedPlan, linearize_keys

    semantics = semantics or ActionSemantics()
    if isinstance(plan, IntegratedPlan):
        order = [(r, plan.tracks[r][i]) for r, i in linearize_keys(plan)]
    else:
        steps = plan.steps if isinstance(plan, Plan) else list(plan)
        order = [(s.args[0] if s.args else "", s) for s in steps]
    state = world.copy()
    records = []
    for i, (robot, action) in enumerate(order):
        reason = execute_step(state, action, semantics)
        records.append(StepRecord(i, robot, action, reason is None, reason))
    return ExecutionTrace(records, state)
