from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaleplan.errors import EmptySeeds, Exhausted, FilterTooAggressive, Unsolvable
from scaleplan.graph import build_graph
from scaleplan.pddl.grounding import ground_instance
from scaleplan.pddl.model import Atom, ProblemInstance
from scaleplan.pddl.parser import parse_domain, parse_problem
from scaleplan.pddl.semantics import validate_plan
from scaleplan.planner import SearchConfig, solve
from scaleplan.relevance import SeedAction, build_filtered_instance, filter_actions, relevance_closure

from oracles import KITCHEN, random_domain_text, random_instance, random_seeds

VACUUM = """
  (:action vacuum
    :parameters (?r - robot ?p - plate)
    :precondition (and)
    :effect (and)))
"""
KITCHEN_VACUUM = KITCHEN.rstrip()[:-1] + VACUUM


@pytest.fixture(scope="module")
def kitchen_vacuum():
    return parse_domain(KITCHEN_VACUUM)


def test_kitchen_seed_place(kitchen):
    kept = filter_actions(kitchen, build_graph(kitchen), [SeedAction("place", ("*", "tomato", "plate1"))])
    assert kept == {"pickup", "slice", "place"}


def test_seeds_covering_everything(kitchen):
    seeds = [SeedAction(a.name, ("*",) * a.arity) for a in kitchen.actions]
    assert filter_actions(kitchen, build_graph(kitchen), seeds) == set(kitchen.action_names)


def test_disconnected_schema_excluded(kitchen_vacuum):
    kept = filter_actions(kitchen_vacuum, build_graph(kitchen_vacuum), [SeedAction("place", ("*", "*", "*"))])
    assert "vacuum" not in kept and "place" in kept


def test_empty_seeds(kitchen):
    with pytest.raises(EmptySeeds):
        filter_actions(kitchen, build_graph(kitchen), [])


def test_pick_problem_closure(pick_domain, pick_problem):
    assert relevance_closure(pick_problem, pick_domain, {"pick"}, {"obj1"}) == {"obj1", "loca", "r1"}


def test_closure_of_all_objects(pick_domain, pick_problem):
    assert relevance_closure(pick_problem, pick_domain, {"pick"}, set(pick_problem.objects)) == set(pick_problem.objects)


def test_distractor_not_linked_is_excluded(pick_domain, pick_problem_text):
    text = pick_problem_text.replace("obj1 - object", "obj1 tomato2 - object").replace(
        "(at-obj obj1 locA)", "(at-obj obj1 locA)\n   (at-obj tomato2 locB)"
    )
    problem = parse_problem(text, pick_domain)
    kept = relevance_closure(problem, pick_domain, {"pick"}, {"obj1"})
    assert "tomato2" not in kept and "locb" not in kept


def test_type_coverage_repair(pick_domain, pick_problem):
    # nothing links obj1 to a robot when only at-obj atoms are considered
    problem = pick_problem.with_goal(pick_problem.goal, init=[Atom("at-obj", ("obj1", "loca"))])
    assert "r1" in relevance_closure(problem, pick_domain, {"pick"}, {"obj1"})


def test_pick_problem_filtered_instance(pick_domain, pick_problem):
    f = build_filtered_instance(pick_problem, pick_domain, build_graph(pick_domain), [SeedAction("pick", ("r1", "obj1", "*"))])
    assert f.kept_actions == {"pick"}
    assert f.kept_objects == {"r1", "obj1", "loca"}
    assert f.kept_init == pick_problem.init
    assert f.goal == pick_problem.goal and f.task_text == pick_problem.task_text
    assert "locb" not in f.problem().objects


def test_everything_seeded_is_structurally_equal(kitchen, kitchen_problem):
    seeds = [SeedAction(a.name, ("*",) * a.arity) for a in kitchen.actions]
    seeds.append(SeedAction("slice", ("r1", "knife1", "tomato")))
    f = build_filtered_instance(kitchen_problem, kitchen, build_graph(kitchen), seeds)
    p = f.problem()
    assert dict(p.objects) == dict(kitchen_problem.objects)
    assert (p.init, p.goal) == (kitchen_problem.init, kitchen_problem.goal)
    assert f.domain(kitchen) == kitchen


def test_unrelated_seed_is_too_aggressive(kitchen_vacuum):
    problem = parse_problem(
        """(define (problem two-parts) (:domain kitchen)
             (:objects r1 - robot knife1 - knife tomato - food plate1 plate2 - plate)
             (:init (reachable knife1))
             (:goal (and (placed tomato plate1))))""",
        kitchen_vacuum,
    )
    with pytest.raises(FilterTooAggressive) as err:
        build_filtered_instance(problem, kitchen_vacuum, build_graph(kitchen_vacuum), [SeedAction("vacuum", ("r1", "plate2"))])
    assert Atom("placed", ("tomato", "plate1")) in err.value.goal_atoms


def test_filtered_pddl_and_json(pick_domain, pick_problem):
    f = build_filtered_instance(pick_problem, pick_domain, build_graph(pick_domain), [SeedAction("pick", ("r1", "obj1", "*"))])
    dom_text, prob_text = f.to_pddl(pick_domain)
    reparsed = parse_problem(prob_text, parse_domain(dom_text))
    assert set(reparsed.objects) == {"r1", "obj1", "loca"}
    assert f.to_json(pick_domain)["kept_objects"] == ["loca", "obj1", "r1"]


def _random_case(seed):
    rng = random.Random(seed)
    d = parse_domain(random_domain_text(rng, max_schemas=6, max_preds=5))
    inst = random_instance(rng, d, walk=4)
    if inst is None:
        return None
    return rng, d, inst, build_graph(d)


def _filtered(inst, d, graph, seeds):
    try:
        return build_filtered_instance(inst, d, graph, seeds)
    except FilterTooAggressive:
        return None


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 1_000_000))
def test_filtered_plans_valid_on_original(seed):
    case = _random_case(seed)
    if case is None:
        return
    rng, d, inst, graph = case
    f = _filtered(inst, d, graph, random_seeds(rng, d, inst))
    if f is None:
        return
    try:
        plan = solve(f.problem(), f.domain(d), SearchConfig(strategy="bfs", max_expansions=20_000)).plan
    except (Unsolvable, Exhausted):  # incompleteness is allowed
        return
    assert validate_plan(inst, plan, d).valid


def _seed_objects(inst, d, seeds):
    goal_objs = {o for g in inst.goal for o in g.args}
    return {o for s in seeds for o in s.objects} | goal_objs


def _cooccurrence(inst, d, kept_actions, start):
    preds = {l.predicate for a in kept_actions for l in (*d.action(a).preconditions, *d.action(a).add_effects, *d.action(a).del_effects)}
    kept = set(start)
    changed = True
    while changed:
        changed = False
        for atom in inst.init:
            if atom.predicate in preds and kept & set(atom.args) and not set(atom.args) <= kept:
                kept |= set(atom.args)
                changed = True
    return kept


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 1_000_000))
def test_conservative_monotone_idempotent(seed):
    case = _random_case(seed)
    if case is None:
        return
    rng, d, inst, graph = case
    seeds = random_seeds(rng, d, inst)
    f = _filtered(inst, d, graph, seeds)
    if f is None:
        return
    reduced = {(a.schema, a.args) for a in ground_instance(f.problem(), f.domain(d))}
    full = {(a.schema, a.args) for a in ground_instance(inst, d)}
    assert reduced <= full

    more = seeds + random_seeds(rng, d, inst)
    g = _filtered(inst, d, graph, more)
    assert g is not None
    assert f.kept_actions <= g.kept_actions
    # The co-occurrence fixpoint is monotone. Type-coverage repair is not: an
    # object it admitted may be dropped once a larger closure covers its type.
    core_f = _cooccurrence(inst, d, f.kept_actions, _seed_objects(inst, d, seeds))
    core_g = _cooccurrence(inst, d, g.kept_actions, _seed_objects(inst, d, more))
    assert core_f <= core_g <= g.kept_objects
    for o in f.kept_objects - g.kept_objects:
        assert o not in core_f
        assert any(d.types.is_subtype(inst.objects[k], inst.objects[o]) for k in g.kept_objects)

    again = build_filtered_instance(f.problem(), d, graph, seeds)
    assert again.kept_actions == f.kept_actions
    assert again.kept_objects == f.kept_objects
    assert again.kept_init == f.kept_init


def test_robots_always_kept():
    from scaleplan.suites import apple_light_instance

    inst, dom = apple_light_instance()
    inst = inst.with_goal([Atom("is-off", ("lightswitch",))])
    f = build_filtered_instance(inst, dom, build_graph(dom), [SeedAction("toggleoff", ("*", "lightswitch"))])
    assert {"robot1", "robot2"} <= f.kept_objects
    assert isinstance(f.base, ProblemInstance)
