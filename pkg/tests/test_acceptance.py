"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION n ...: PASS|FAIL`` line (visible even
under output capture) and then asserts.
"""

from __future__ import annotations

import json
import random
import time

from scaleplan.bench import (
    ActionSemantics,
    ExecutionTrace,
    GroundTruthCondition,
    StepRecord,
    TaskRecord,
    WorldState,
    compute_metrics,
    execute_plan,
    execute_step,
)
from scaleplan.bench.bridge import data_text, household_domain
from scaleplan.errors import Exhausted, FilterTooAggressive, HallucinationRejected, Unsolvable
from scaleplan.graph import build_graph
from scaleplan.multiagent import linearize
from scaleplan.pddl.grounding import ground_instance
from scaleplan.pddl.model import GroundAction
from scaleplan.pddl.parser import parse_domain
from scaleplan.pddl.semantics import validate_plan
from scaleplan.pipeline import RunOptions, run_pipeline
from scaleplan.planner import SearchConfig, solve
from scaleplan.relevance import SeedAction, build_filtered_instance
from scaleplan.seeder import SeederConfig, llm_seed
from scaleplan.suites import apple_light_instance, distractor_suite, extended_domain, two_robot_team

from conftest import seeds_reply
from oracles import (
    HAND_DOMAINS,
    brute_force_edges,
    count_reachable_states,
    iddfs_length,
    random_domain_text,
    random_instance,
    random_seeds,
)


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def edge_set(graph):
    return {(e.src, e.dst, e.kind.value) for e in graph.edges}


# 1 -----------------------------------------------------------------------------------------


def test_criterion_1_edge_fidelity(capsys):
    start = time.perf_counter()
    domains = {name: parse_domain(text) for name, text in HAND_DOMAINS.items()}
    domains["simple-pick-place"] = parse_domain(data_text("simple-pick-place.pddl"))
    domains["household"] = household_domain()
    domains["household-extended"] = extended_domain()
    mismatched = [n for n, d in domains.items() if edge_set(build_graph(d)) != brute_force_edges(d)]
    n_random = 250
    for seed in range(n_random):
        d = parse_domain(random_domain_text(random.Random(seed)))
        if edge_set(build_graph(d)) != brute_force_edges(d):
            mismatched.append(f"random-{seed}")
    elapsed = time.perf_counter() - start
    ok = not mismatched and len(domains) >= 20 and elapsed < 5
    report(
        capsys, 1, "edge fidelity", ok,
        f"{len(domains)} hand + {n_random} random domains, {len(mismatched)} mismatches, {elapsed:.2f}s",
    )


# 2 -----------------------------------------------------------------------------------------


def test_criterion_2_filter_soundness(capsys):
    start = time.perf_counter()
    solved = invalid = seed = 0
    bfs = SearchConfig(strategy="bfs", max_expansions=20_000)
    while solved < 500 and time.perf_counter() - start < 60:
        rng = random.Random(seed)
        seed += 1
        d = parse_domain(random_domain_text(rng, max_schemas=6, max_preds=5))
        inst = random_instance(rng, d, walk=4)
        if inst is None:
            continue
        try:
            f = build_filtered_instance(inst, d, build_graph(d), random_seeds(rng, d, inst))
            plan = solve(f.problem(), f.domain(d), bfs).plan
        except (FilterTooAggressive, Unsolvable, Exhausted):
            continue
        solved += 1
        if not validate_plan(inst, plan, d).valid:
            invalid += 1
    elapsed = time.perf_counter() - start
    ok = solved >= 500 and invalid == 0 and elapsed < 60
    report(capsys, 2, "filter soundness", ok, f"{solved} solvable pairs, {invalid} invalid on original, {elapsed:.1f}s")


# 3 -----------------------------------------------------------------------------------------


def test_criterion_3_distractor_reduction(capsys):
    start = time.perf_counter()
    cases = distractor_suite(levels=(50,))
    ground = {"filtered": 0, "original": 0}
    expanded = {"filtered": 0, "original": 0}
    same_goals = True
    for case in cases:
        team = two_robot_team(case.domain)
        f = run_pipeline(case.instance, case.domain, team, RunOptions())
        o = run_pipeline(case.instance, case.domain, team, RunOptions(use_filter=False))
        ground["filtered"] += f.ground_actions
        ground["original"] += o.ground_actions
        expanded["filtered"] += f.expanded
        expanded["original"] += o.expanded
        same_goals &= f.plan_valid and o.plan_valid
    g_ratio = ground["original"] / ground["filtered"]
    e_ratio = expanded["original"] / max(1, expanded["filtered"])
    elapsed = time.perf_counter() - start
    ok = g_ratio >= 3 and e_ratio >= 2 and same_goals and elapsed < 120
    report(
        capsys, 3, "distractor reduction", ok,
        f"{len(cases)} tasks at 50 distractors: ground actions {g_ratio:.1f}x fewer, "
        f"expansions {e_ratio:.1f}x fewer, goals identical={same_goals}, {elapsed:.1f}s",
    )


# 4 -----------------------------------------------------------------------------------------


def test_criterion_4_planner_correctness(capsys):
    start = time.perf_counter()
    validated = compared = optimal_mismatch = invalid = 0
    seed = 0
    while validated < 50 and seed < 5_000:
        rng = random.Random(10_000 + seed)
        seed += 1
        d = parse_domain(random_domain_text(rng, max_schemas=5, max_preds=4))
        inst = random_instance(rng, d, walk=5)
        if inst is None or count_reachable_states(inst, d, 10_000) is None:
            continue
        plan = solve(inst, d).plan
        validated += 1
        invalid += not validate_plan(inst, plan, d).valid
        if len(solve(inst, d, SearchConfig(strategy="bfs")).plan) != iddfs_length(inst, d):
            optimal_mismatch += 1
        compared += 1
    elapsed = time.perf_counter() - start
    ok = validated >= 50 and invalid == 0 and optimal_mismatch == 0
    report(
        capsys, 4, "planner correctness", ok,
        f"{validated} GBFS plans, {invalid} invalid; BFS vs IDDFS on {compared}, {optimal_mismatch} differ, {elapsed:.1f}s",
    )


# 5 -----------------------------------------------------------------------------------------

HAND_SCENE = {
    "objects": {
        "Fridge": {"contains": ["Apple", "Milk"]},
        "LightSwitch": {"states": ["OFF"]},
        "Cabinet": {"open": "closed"},
        "Bread": {"states": ["SLICED"]},
        "Plate": {"contains": ["Bread"]},
        "SinkBasin": {},
        "Microwave": {"states": ["ON"], "contains": ["Egg"]},
        "CounterTop": {"contains": ["Tomato", "Potato"]},
        "Knife": {},
        "Cup": {},
    },
    "robots": {"robot1": {}},
}


def C(name, contains=(), state=None, num=None):
    return GroundTruthCondition(name, tuple(contains), state, num)


# (conditions, successful steps, total steps); satisfied counts noted per task
HAND_TASKS = [
    ([C("fridge", ["apple"])], 4, 4),  # 1/1
    ([C("fridge", ["apple", "egg"])], 3, 5),  # 0/1, every listed object required
    ([C("fridge", ["apple", "egg", "milk"], num=2)], 6, 6),  # 1/1
    ([C("lightswitch", state="OFF"), C("cabinet", state="OPEN")], 2, 3),  # 1/2
    ([C("bread", state="SLICED"), C("plate", ["bread"]), C("sinkbasin", ["knife"])], 5, 7),  # 2/3
    ([C("cabinet", ["egg", "milk"], num=1)], 0, 0),  # 0/1
    ([C("countertop", ["tomato", "potato"]), C("microwave", state="ON")], 8, 8),  # 2/2
    ([C("cabinet", ["cup"], "CLOSED")], 1, 4),  # 0/1
    ([C("microwave", ["egg"]), C("countertop", ["tomato"]), C("fridge", ["milk"]), C("lightswitch", state="ON")], 9, 10),  # 3/4
    ([C("plate", ["bread"])], 2, 2),  # 1/1
]
# TCR = 4/10; GCR = (1+0+1+.5+2/3+0+1+0+.75+1)/10; ER = 40/49
HAND_EXPECTED = {"tcr": 0.4000, "gcr": 0.5917, "er": 0.8163}


def test_criterion_5_metrics(capsys):
    world = WorldState.from_json(HAND_SCENE)
    step = GroundAction("goto", ("robot1", "fridge"))
    records, traces = [], []
    for i, (conds, ok, total) in enumerate(HAND_TASKS):
        records.append(TaskRecord(f"h{i}", "simple", "hand scored", world, tuple(conds)))
        steps = [StepRecord(j, "robot1", step, j < ok, None if j < ok else "x") for j in range(total)]
        traces.append(ExecutionTrace(steps, world))
    m = compute_metrics(records, traces)
    got = {"tcr": round(m.tcr, 4), "gcr": round(m.gcr, 4), "er": round(m.er, 4)}
    report(capsys, 5, "metrics", got == HAND_EXPECTED, f"got {got}, expected {HAND_EXPECTED}")


# 6 -----------------------------------------------------------------------------------------


def _world():
    return WorldState.from_json(
        {
            "objects": {"Apple": {}, "Knife": {}, "Cabinet": {"open": "closed"}, "CounterTop": {"contains": ["Apple", "Knife"]}},
            "robots": {"robot1": {"near": ["apple", "knife", "cabinet", "countertop"]}},
        }
    )


def _ga(text):
    name, *args = text.split()
    return GroundAction(name, tuple(args))


def test_criterion_6_executor(capsys):
    sem = ActionSemantics()
    results = {}

    w = _world()
    execute_step(w, _ga("pickup robot1 apple"), sem)
    before = w.to_json()
    reason = execute_step(w, _ga("putin robot1 apple cabinet"), sem)
    results["putin closed"] = reason == "receptacle closed" and w.to_json() == before

    w = _world()
    execute_step(w, _ga("pickup robot1 knife"), sem)
    before = w.to_json()
    reason = execute_step(w, _ga("pickup robot1 apple"), sem)
    results["hands full"] = reason == "hands full" and w.to_json() == before

    t = execute_plan(_world(), [_ga("pickup robot1 apple"), _ga("open robot1 cabinet"), _ga("putin robot1 apple cabinet")])
    results["open then putin"] = t.succeeded == 3 and t.final_world.containment.get("cabinet") == {"apple"}

    t = execute_plan(_world(), [_ga("pickup robot1 knife"), _ga("putdown robot1"), _ga("pickup robot1 apple")])
    results["putdown then pickup"] = t.succeeded == 3 and t.final_world.held["robot1"] == "apple"

    failed = [k for k, v in results.items() if not v]
    report(capsys, 6, "executor", not failed, f"{len(results) - len(failed)}/{len(results)} scenarios, failed: {failed}")


# 7 -----------------------------------------------------------------------------------------


def test_criterion_7_multi_robot(capsys):
    inst, dom = apple_light_instance()
    team = two_robot_team(dom)
    duo = run_pipeline(inst, dom, team)
    solo = run_pipeline(inst, dom, team[:1])
    rng = random.Random(2024)
    valid = sum(validate_plan(inst, linearize(duo.plan, rng), dom).valid for _ in range(50))
    ok = duo.makespan < solo.plan.size and valid == 50 and solo.makespan == solo.plan.size
    report(
        capsys, 7, "multi-robot makespan", ok,
        f"two robots makespan {duo.makespan}, one robot sequential {solo.plan.size}, {valid}/50 linearizations valid",
    )


# 8 -----------------------------------------------------------------------------------------


def test_criterion_8_llm_validation(capsys, chat_stub, pick_domain, pick_problem):
    config = SeederConfig(endpoint_url=chat_stub.url, timeout=5, max_retries=2)
    outcomes = {}

    chat_stub.script(seeds_reply(("pick", "r1", "obj1", "*")))
    p = llm_seed("pick up obj1", pick_domain, pick_problem, config)
    outcomes["valid"] = p.seeds == (SeedAction("pick", ("r1", "obj1", "*")),) and len(chat_stub.requests) == 1

    chat_stub.script(*[seeds_reply(("teleport", "r1", "obj1"))] * 3)
    try:
        llm_seed("pick up obj1", pick_domain, pick_problem, config)
        outcomes["hallucinated"] = False
    except HallucinationRejected:
        outcomes["hallucinated"] = len(chat_stub.requests) == 3

    chat_stub.script("not json at all", json.dumps({"seeds": [{"action": "pick", "args": ["*", "obj1", "*"]}]}))
    p = llm_seed("pick up obj1", pick_domain, pick_problem, config)
    outcomes["malformed then valid"] = p.seeds[0].schema == "pick" and len(chat_stub.requests) == 2

    failed = [k for k, v in outcomes.items() if not v]
    report(capsys, 8, "LLM output validation", not failed, f"{len(outcomes) - len(failed)}/{len(outcomes)} scripts, failed: {failed}")


def test_filtered_instance_is_smaller_than_original():
    """Sanity link between criteria 2 and 3 on the shipped task."""
    inst, dom = apple_light_instance(20, extended=True)
    seeds = [SeedAction("putin", ("*", "apple", "fridge")), SeedAction("toggleoff", ("*", "lightswitch"))]
    f = build_filtered_instance(inst, dom, build_graph(dom), seeds)
    assert len(ground_instance(f.problem(), f.domain(dom))) < len(ground_instance(inst, dom))

