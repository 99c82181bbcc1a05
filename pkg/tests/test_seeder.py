from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaleplan.errors import HallucinationRejected, MalformedResponse, NoSeedsFound, TransportError
from scaleplan.pddl.model import Atom
from scaleplan.pddl.parser import parse_domain
from scaleplan.relevance import SeedAction
from scaleplan.seeder import (
    ENV_API_BASE,
    ENV_API_KEY,
    ChatClient,
    SeederConfig,
    SeedProposal,
    build_seed_messages,
    goal_regression_covered,
    lexical_seed,
    llm_decompose,
    llm_seed,
    tokenize,
    validate_proposal,
)

from conftest import seeds_reply
from oracles import random_domain_text, random_instance

# -- lexical ---------------------------------------------------------------------------------


def test_tokenize():
    assert tokenize("Put two Vegetables in the fridge, parallely!") == [
        "put",
        "two",
        "vegetable",
        "in",
        "the",
        "fridge",
        "parallely",
    ]
    assert tokenize("glass") == ["glass"]


def test_pick_up_obj1(pick_domain, pick_problem):
    proposal = lexical_seed("pick up obj1", pick_domain, pick_problem)
    assert proposal.seeds == (SeedAction("pick", ("*", "obj1", "*")),)
    assert proposal.source == "lexical"


def test_empty_text_uses_goal_regression(pick_domain, pick_problem):
    assert lexical_seed("", pick_domain, pick_problem).seeds == (SeedAction("pick", ("*", "*", "*")),)


def test_unmatched_text_uses_goal_regression(pick_domain, pick_problem):
    assert lexical_seed("fly to the moon", pick_domain, pick_problem).seeds == (SeedAction("pick", ("*", "*", "*")),)


def test_no_seeds_found(pick_domain, pick_problem):
    with pytest.raises(NoSeedsFound):
        lexical_seed("fly to the moon", pick_domain, pick_problem.with_goal([]))


def test_household_bigram_match():
    from scaleplan.suites import apple_light_instance

    inst, dom = apple_light_instance()
    seeds = {s.schema: s for s in lexical_seed("Put in: the apple, then the fridge.", dom, inst).seeds}
    assert seeds["putin"].args == ("*", "apple", "fridge")
    # the light-switch goal is covered by regression even though no word matches
    assert seeds["toggleoff"].args == ("*", "*")
    plain = {s.schema for s in lexical_seed(inst.task_text, dom, inst).seeds}
    assert {"putin", "toggleoff"} <= plain


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 1_000_000), st.text(alphabet="abcdefgpt0123 -_", max_size=30))
def test_lexical_deterministic_and_goal_covering(seed, text):
    rng = random.Random(seed)
    d = parse_domain(random_domain_text(rng))
    inst = random_instance(rng, d)
    if inst is None:
        return
    a = lexical_seed(text, d, inst)
    b = lexical_seed(text, d, inst)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert goal_regression_covered(a, inst.goal, d)
    assert validate_proposal(a, d, inst) == []


# -- validation ------------------------------------------------------------------------------


def _codes(violations):
    return [(v.code, v.position) for v in violations]


def test_valid_seed(pick_domain, pick_problem):
    assert validate_proposal(SeedProposal((SeedAction("pick", ("r1", "obj1", "loca")),)), pick_domain, pick_problem) == []


def test_swapped_arguments(pick_domain, pick_problem):
    out = validate_proposal(SeedProposal((SeedAction("pick", ("obj1", "r1", "loca")),)), pick_domain, pick_problem)
    # r1 is a robot and robot is a subtype of object, so only position 0 is ill-typed
    assert _codes(out) == [("TYPE", 0)]


def test_arity(pick_domain, pick_problem):
    out = validate_proposal(SeedProposal((SeedAction("pick", ("r1", "obj1")),)), pick_domain, pick_problem)
    assert _codes(out) == [("ARITY", None)]


def test_unknown_action_and_object(pick_domain, pick_problem):
    out = validate_proposal(
        SeedProposal((SeedAction("teleport", ("r1",)), SeedAction("pick", ("r1", "ghost", "*")))), pick_domain, pick_problem
    )
    assert [v.code for v in out] == ["UNKNOWN_ACTION", "UNKNOWN_OBJECT"]
    assert out[1].seed == 1 and out[1].position == 1


def test_prompt_lists_schemas_objects_and_no_edges(pick_domain, pick_problem):
    messages = build_seed_messages("pick up obj1", pick_domain, pick_problem)
    user = messages[-1]["content"]
    assert "pick(?r - robot ?o - object ?l - location)" in user
    assert "loca - location" in user and "Task: pick up obj1" in user
    assert "->" not in user


# -- llm path against a local stub -----------------------------------------------------------


def config_for(stub, **kw):
    return SeederConfig(endpoint_url=stub.url, timeout=5, **kw)


def test_llm_valid(chat_stub, pick_domain, pick_problem):
    chat_stub.script(seeds_reply(("pick", "r1", "obj1", "locA")))
    client = ChatClient(config_for(chat_stub))
    proposal = llm_seed("pick up obj1", pick_domain, pick_problem, client.config, client=client)
    assert proposal.seeds == (SeedAction("pick", ("r1", "obj1", "loca")),)
    assert proposal.source == "llm"
    assert client.request_count == len(chat_stub.requests) == 1
    body = chat_stub.requests[0]["body"]
    assert chat_stub.requests[0]["path"] == "/v1/chat/completions"
    assert body["response_format"] == {"type": "json_object"} and body["temperature"] == 0


def test_llm_hallucination_exhausts_retries(chat_stub, pick_domain, pick_problem):
    chat_stub.script(*[seeds_reply(("teleport", "r1"))] * 3)
    with pytest.raises(HallucinationRejected) as err:
        llm_seed("pick up obj1", pick_domain, pick_problem, config_for(chat_stub, max_retries=2))
    assert len(chat_stub.requests) == 3
    assert err.value.attempts == 3
    assert err.value.violations[0].code == "UNKNOWN_ACTION"
    # each retry carries the rejection reason
    last = chat_stub.requests[-1]["body"]["messages"][-1]["content"]
    assert "teleport" in last


def test_llm_prose_then_valid(chat_stub, pick_domain, pick_problem):
    chat_stub.script("Sure! You should pick up the object.", seeds_reply(("pick", "r1", "obj1", "*")))
    proposal = llm_seed("pick up obj1", pick_domain, pick_problem, config_for(chat_stub))
    assert proposal.seeds == (SeedAction("pick", ("r1", "obj1", "*")),)
    assert len(chat_stub.requests) == 2


def test_llm_malformed_every_time(chat_stub, pick_domain, pick_problem):
    chat_stub.script("nope", "{not json", json.dumps({"seeds": "pick"}))
    with pytest.raises(MalformedResponse) as err:
        llm_seed("x", pick_domain, pick_problem, config_for(chat_stub, max_retries=2))
    assert err.value.attempts == 3 and len(chat_stub.requests) == 3


def test_llm_zero_retries(chat_stub, pick_domain, pick_problem):
    chat_stub.script(seeds_reply(("teleport",)), seeds_reply(("pick", "r1", "obj1", "*")))
    with pytest.raises(HallucinationRejected):
        llm_seed("x", pick_domain, pick_problem, config_for(chat_stub, max_retries=0))
    assert len(chat_stub.requests) == 1


def test_llm_fenced_json_accepted(chat_stub, pick_domain, pick_problem):
    chat_stub.script("```json\n" + seeds_reply(("pick", "*", "obj1", "*")) + "\n```")
    assert llm_seed("x", pick_domain, pick_problem, config_for(chat_stub)).seeds[0].args == ("*", "obj1", "*")


def test_http_error_is_transport_error(chat_stub, pick_domain, pick_problem):
    chat_stub.script(500)
    with pytest.raises(TransportError):
        llm_seed("x", pick_domain, pick_problem, config_for(chat_stub))


def test_unreachable_endpoint(pick_domain, pick_problem):
    with pytest.raises(TransportError):
        llm_seed("x", pick_domain, pick_problem, SeederConfig(endpoint_url="http://127.0.0.1:9", timeout=2))


def test_missing_endpoint(monkeypatch, pick_domain, pick_problem):
    monkeypatch.delenv(ENV_API_BASE, raising=False)
    with pytest.raises(TransportError):
        llm_seed("x", pick_domain, pick_problem, SeederConfig())


def test_endpoint_from_env_and_config_override(monkeypatch, chat_stub):
    monkeypatch.setenv(ENV_API_BASE, chat_stub.url + "/")
    assert SeederConfig().resolved_endpoint() == chat_stub.url
    assert SeederConfig(endpoint_url="http://example.invalid").resolved_endpoint() == "http://example.invalid"


def test_bearer_token_sent_but_never_traced(monkeypatch, chat_stub, tmp_path, pick_domain, pick_problem):
    secret = "sk-test-secret-123"
    monkeypatch.setenv(ENV_API_KEY, secret)
    trace = tmp_path / "trace.jsonl"
    chat_stub.script("prose", seeds_reply(("pick", "r1", "obj1", "*")))
    llm_seed("x", pick_domain, pick_problem, config_for(chat_stub, trace_path=str(trace)))
    assert chat_stub.headers[0]["Authorization"] == f"Bearer {secret}"
    lines = trace.read_text().splitlines()
    assert len(lines) == 2
    assert secret not in trace.read_text()
    assert json.loads(lines[0])["request"]["model"] == "gpt-4o-mini"


def test_request_counter_is_thread_safe(chat_stub):
    chat_stub.script(*["{}"] * 40)
    client = ChatClient(config_for(chat_stub))
    with ThreadPoolExecutor(8) as pool:
        list(pool.map(lambda _: client.complete([{"role": "user", "content": "hi"}]), range(40)))
    assert client.request_count == 40 == len(chat_stub.requests)


@pytest.mark.parametrize("kwargs", [{"max_retries": -1}, {"timeout": 0}])
def test_config_invariants(kwargs):
    with pytest.raises(ValueError):
        SeederConfig(**kwargs)


# -- llm decomposition -----------------------------------------------------------------------


def _apple_light():
    from scaleplan.suites import apple_light_instance

    return apple_light_instance()


def test_llm_decompose_valid(chat_stub):
    inst, dom = _apple_light()
    chat_stub.script(json.dumps({"subtasks": [{"goals": ["(in apple fridge)"]}, {"goals": ["(is-off lightswitch)"]}]}))
    groups = llm_decompose(inst, dom, config_for(chat_stub))
    assert groups == [frozenset({Atom("in", ("apple", "fridge"))}), frozenset({Atom("is-off", ("lightswitch",))})]


def test_llm_decompose_must_partition_goal(chat_stub):
    inst, dom = _apple_light()
    chat_stub.script(
        json.dumps({"subtasks": [{"goals": ["(in apple fridge)"]}]}),
        json.dumps({"subtasks": [{"goals": ["(in apple fridge)", "(is-off lightswitch)"]}, {"goals": ["(in apple fridge)"]}]}),
        json.dumps({"subtasks": [{"goals": ["(in apple fridge)", "(is-off lightswitch)"]}]}),
    )
    groups = llm_decompose(inst, dom, config_for(chat_stub))
    assert len(chat_stub.requests) == 3 and len(groups) == 1


def test_llm_decompose_extra_atom_rejected(chat_stub):
    inst, dom = _apple_light()
    chat_stub.script(*[json.dumps({"subtasks": [{"goals": ["(in apple fridge)", "(is-off lightswitch)", "(sliced bread)"]}]})] * 3)
    with pytest.raises(HallucinationRejected):
        llm_decompose(inst, dom, config_for(chat_stub))
