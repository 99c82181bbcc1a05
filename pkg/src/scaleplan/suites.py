"""Shipped household scenes: the apple-and-light-switch task and its distractor variants."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .bench.bridge import data_text, household_domain, world_to_problem
from .bench.world import ActionSemantics, WorldState
from .multiagent import Robot
from .pddl.model import Atom, Domain, ProblemInstance
from .pddl.parser import parse_domain

APPLE_LIGHT_TEXT = "Put the apple in the fridge and turn off the light switch."
APPLE_LIGHT_GOAL = frozenset({Atom("in", ("apple", "fridge")), Atom("is-off", ("lightswitch",))})
DISTRACTOR_LEVELS = (5, 20, 50)


@dataclass(frozen=True)
class SuiteTask:
    id: str
    text: str
    goal: frozenset[Atom]


SUITE_TASKS = (
    SuiteTask("apple-fridge-light", APPLE_LIGHT_TEXT, APPLE_LIGHT_GOAL),
    SuiteTask("slice-bread", "Slice the bread with the knife.", frozenset({Atom("sliced", ("bread",))})),
    SuiteTask(
        "egg-bread-cabinet",
        "Put the egg and the bread in the cabinet.",
        frozenset({Atom("in", ("egg", "cabinet")), Atom("in", ("bread", "cabinet"))}),
    ),
    SuiteTask(
        "plate-and-sink",
        "Put the apple on the plate and put the knife in the sink.",
        frozenset({Atom("in", ("apple", "plate")), Atom("in", ("knife", "sinkbasin"))}),
    ),
)

# Classes that only the chore schemas care about.
CHORE_CLASSES = {
    "towel": ("pickupable", "foldable"),
    "book": ("pickupable",),
    "rug": ("dusty", "foldable"),
    "houseplant": ("plant",),
    "charger": ("charger",),
    "crate": ("container",),
    "bookshelf": ("surface",),
}

# Each distractor that sits somewhere gets a receptacle of its own, so no
# init atom links it to a kitchen object.
_CYCLE = (
    ("crate", None),
    ("towel", "crate"),
    ("bookshelf", None),
    ("book", "bookshelf"),
    ("rug", None),
    ("houseplant", None),
    ("charger", None),
)


@lru_cache(maxsize=None)
def extended_domain() -> Domain:
    """Household schemas plus charge, vacuum, water-plant and fold."""
    return parse_domain(data_text("household-extended.pddl"))


def suite_semantics() -> ActionSemantics:
    return ActionSemantics().with_classes(CHORE_CLASSES)


def apple_light_world() -> WorldState:
    """Two robots in a kitchen; the apple is on the counter and the fridge is shut."""
    return WorldState.from_json(
        {
            "objects": {
                "apple": {},
                "bread": {},
                "countertop": {"contains": ["apple", "bread"]},
                "fridge": {"open": "closed", "contains": ["egg"]},
                "egg": {},
                "lightswitch": {"states": ["ON"]},
                "cabinet": {"open": "closed"},
                "drawer": {"open": "closed", "contains": ["knife"]},
                "knife": {},
                "sinkbasin": {},
                "diningtable": {"contains": ["plate"]},
                "plate": {},
            },
            "robots": {"robot1": {}, "robot2": {}},
        }
    )


def add_distractors(world: WorldState, n: int) -> WorldState:
    """A copy of ``world`` with ``n`` extra objects cycled through the chore classes."""
    w = world.copy()
    last_receptacle: dict[str, str] = {}
    for i in range(n):
        cls, inside = _CYCLE[i % len(_CYCLE)]
        name = f"{cls}{i + 1}"
        w.object_states[name] = set()
        if inside is None:
            last_receptacle[cls] = name
        elif inside in last_receptacle:
            w.containment.setdefault(last_receptacle.pop(inside), set()).add(name)
    return w


def two_robot_team(domain: Domain | None = None) -> list[Robot]:
    domain = domain or household_domain()
    caps = frozenset(domain.action_names)
    return [Robot("robot1", caps, "robot1"), Robot("robot2", caps, "robot2")]


def apple_light_instance(n_distractors: int = 0, *, extended: bool = False) -> tuple[ProblemInstance, Domain]:
    """Apple-in-fridge plus light-switch-off, optionally padded with distractor objects."""
    return task_instance(SUITE_TASKS[0], n_distractors, extended=extended)


def task_instance(task: SuiteTask, n_distractors: int = 0, *, extended: bool = True) -> tuple[ProblemInstance, Domain]:
    domain = extended_domain() if extended else household_domain()
    world = add_distractors(apple_light_world(), n_distractors)
    instance = world_to_problem(
        world,
        task.goal,
        semantics=suite_semantics(),
        name=f"{task.id}-d{n_distractors}",
        task_text=task.text,
        domain=domain,
    )
    return instance, domain


@dataclass(frozen=True)
class SuiteCase:
    task: str
    level: int
    instance: ProblemInstance
    domain: Domain


def distractor_suite(levels=DISTRACTOR_LEVELS, tasks=SUITE_TASKS) -> list[SuiteCase]:
    """Every suite task on the extended domain at every distractor level."""
    return [SuiteCase(t.id, n, *task_instance(t, n)) for n in levels for t in tasks]
