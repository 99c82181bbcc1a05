"""Seed actions from a task description: a lexical baseline and an LLM client.

Both paths end in :func:`validate_proposal`, so a seed that reaches the
relevance filter always names a known schema, known objects, and
type-compatible bindings.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import HallucinationRejected, MalformedResponse, NoSeedsFound, TransportError
from .pddl.model import Atom, Domain, ProblemInstance
from .relevance import WILDCARD, SeedAction

log = logging.getLogger(__name__)

ENV_API_KEY = "SCALEPLAN_API_KEY"
ENV_API_BASE = "SCALEPLAN_API_BASE"


@dataclass(frozen=True)
class SeedProposal:
    seeds: tuple[SeedAction, ...]
    rationale: str = ""
    source: str = "lexical"

    def to_json(self) -> dict:
        return {"seeds": [s.to_json() for s in self.seeds], "rationale": self.rationale, "source": self.source}


@dataclass(frozen=True)
class Violation:
    """One reason a seed was rejected; ``position`` is the argument index when relevant."""

    code: str  # UNKNOWN_ACTION | UNKNOWN_OBJECT | ARITY | TYPE
    seed: int
    message: str
    position: int | None = None

    def to_json(self) -> dict:
        return {"code": self.code, "seed": self.seed, "position": self.position, "message": self.message}


@dataclass(frozen=True)
class SeederConfig:
    endpoint_url: str | None = None
    model_name: str = "gpt-4o-mini"
    max_retries: int = 2
    timeout: float = 30.0
    temperature: float = 0.0
    json_mode: bool = True
    trace_path: str | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def resolved_endpoint(self) -> str:
        url = self.endpoint_url or os.environ.get(ENV_API_BASE)
        if not url:
            raise TransportError(f"no endpoint configured (set endpoint_url or {ENV_API_BASE})")
        return url.rstrip("/")


# -- lexical baseline ---------------------------------------------------------------

_SPLIT = re.compile(r"[^a-z0-9]+")


def _singular(tok: str) -> str:
    if len(tok) > 3 and tok.endswith("s") and not tok.endswith("ss"):
        return tok[:-1]
    return tok


def tokenize(text: str) -> list[str]:
    """Lower-case word tokens with punctuation removed and a trailing plural 's' dropped."""
    return [_singular(t) for t in _SPLIT.split(text.lower()) if t]


def _name_matches(name: str, tokens: set[str]) -> bool:
    parts = tokenize(name)
    if not parts:
        return False
    return "".join(parts) in tokens or all(p in tokens for p in parts)


def lexical_seed(task_text: str, domain: Domain, instance: ProblemInstance) -> SeedProposal:
    """Deterministic seeding by token overlap, plus goal regression.

    Adjacent token pairs are also matched in concatenated form, so "put in"
    finds a schema called ``putin``. Goal regression adds an all-wildcard seed
    for every schema whose add-effects can produce a goal predicate, unless
    that schema was already seeded lexically.
    """
    words = tokenize(task_text or "")
    tokens = set(words) | {a + b for a, b in zip(words, words[1:])}
    types = domain.types

    # matched objects in order of first mention
    mention: dict[str, int] = {}
    for obj in instance.objects:
        if _name_matches(obj, tokens):
            parts = tokenize(obj)
            pos = [i for i, w in enumerate(words) if w in parts or w == "".join(parts)]
            mention[obj] = min(pos) if pos else len(words)
    matched_objects = sorted(mention, key=lambda o: (mention[o], o))

    seeds: list[SeedAction] = []
    notes: list[str] = []
    for schema in domain.actions:
        if not _name_matches(schema.name, tokens):
            continue
        args = [WILDCARD] * schema.arity
        free = list(matched_objects)
        for i, ptype in enumerate(schema.param_types):
            for obj in free:
                if types.is_subtype(instance.objects[obj], ptype):
                    args[i] = obj
                    free.remove(obj)
                    break
        seeds.append(SeedAction(schema.name, tuple(args)))
    if seeds:
        notes.append("lexical: " + ", ".join(str(s) for s in seeds))

    seeded = {s.schema for s in seeds}
    regression = []
    for goal in sorted(instance.goal):
        for schema in domain.actions:
            if schema.name in seeded:
                continue
            if any(eff.predicate == goal.predicate and _goal_fits(goal, eff, instance, domain) for eff in schema.add_effects):
                seeded.add(schema.name)
                regression.append(SeedAction(schema.name, (WILDCARD,) * schema.arity))
    if regression:
        notes.append("goal regression: " + ", ".join(str(s) for s in regression))
    seeds.extend(regression)

    if not seeds:
        raise NoSeedsFound(f"no schema matches {task_text!r} and the goal is empty")
    return SeedProposal(tuple(seeds), "; ".join(notes), "lexical")


def _goal_fits(goal: Atom, eff, instance: ProblemInstance, domain: Domain) -> bool:
    if len(goal.args) != len(eff.args):
        return False
    objects = instance.objects
    return all(o in objects and domain.types.is_subtype(objects[o], t) for o, t in zip(goal.args, eff.types))


def goal_regression_covered(proposal: SeedProposal, goal: Iterable[Atom], domain: Domain) -> bool:
    """Whether every goal predicate producible by some schema is produced by a seeded schema."""
    seeded = {s.schema for s in proposal.seeds}
    for g in goal:
        producers = {a.name for a in domain.actions if any(e.predicate == g.predicate for e in a.add_effects)}
        if producers and not producers & seeded:
            return False
    return True


# -- validation -------------------------------------------------------------------------


def validate_proposal(proposal: SeedProposal, domain: Domain, instance: ProblemInstance) -> list[Violation]:
    """Check every seed; an empty list means the proposal is valid."""
    out: list[Violation] = []
    types = domain.types
    for i, seed in enumerate(proposal.seeds):
        if not domain.has_action(seed.schema):
            out.append(Violation("UNKNOWN_ACTION", i, f"unknown action {seed.schema!r}"))
            continue
        schema = domain.action(seed.schema)
        for pos, arg in enumerate(seed.args):
            if arg != WILDCARD and arg not in instance.objects:
                out.append(Violation("UNKNOWN_OBJECT", i, f"unknown object {arg!r}", pos))
        if len(seed.args) != schema.arity:
            out.append(
                Violation("ARITY", i, f"{seed.schema} takes {schema.arity} arguments, got {len(seed.args)}")
            )
            continue
        for pos, (arg, ptype) in enumerate(zip(seed.args, schema.param_types)):
            if arg == WILDCARD or arg not in instance.objects:
                continue
            if not types.is_subtype(instance.objects[arg], ptype):
                out.append(
                    Violation(
                        "TYPE",
                        i,
                        f"argument {pos} of {seed.schema}: {arg!r} is {instance.objects[arg]}, expected {ptype}",
                        pos,
                    )
                )
    return out


# -- chat endpoint ----------------------------------------------------------------------


class ChatClient:
    """Minimal client for an OpenAI-compatible ``/chat/completions`` endpoint.

    The request counter is shared by all threads using the client. The API
    key is sent as a bearer token and never written to the trace.
    """

    def __init__(self, config: SeederConfig):
        self.config = config
        self._lock = threading.Lock()
        self._requests = 0

    @property
    def request_count(self) -> int:
        with self._lock:
            return self._requests

    def complete(self, messages: Sequence[dict]) -> str:
        cfg = self.config
        url = cfg.resolved_endpoint() + "/chat/completions"
        body = {"model": cfg.model_name, "messages": list(messages), "temperature": cfg.temperature}
        if cfg.json_mode:
            body["response_format"] = {"type": "json_object"}
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(ENV_API_KEY)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        with self._lock:
            self._requests += 1
        req = urllib.request.Request(url, json.dumps(body).encode(), headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=cfg.timeout) as resp:
                raw = resp.read().decode("utf-8", "replace")
        except urllib.error.HTTPError as exc:
            self._trace({"request": body, "error": f"HTTP {exc.code}"})
            raise TransportError(f"endpoint returned HTTP {exc.code}") from exc
        except (urllib.error.URLError, OSError) as exc:
            self._trace({"request": body, "error": str(exc)})
            raise TransportError(f"cannot reach endpoint: {exc}") from exc
        self._trace({"request": body, "response": raw})
        try:
            return json.loads(raw)["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            # surfaced to the retry loop as unparseable content
            return raw

    def _trace(self, record: dict) -> None:
        path = self.config.trace_path
        if not path:
            return
        with self._lock:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


class _Rejected(Exception):
    def __init__(self, message: str, violations: Sequence[Violation] = (), malformed: bool = False):
        super().__init__(message)
        self.violations = list(violations)
        self.malformed = malformed


def _load_json_object(content: str) -> dict:
    text = content.strip()
    fence = re.match(r"^```(?:json)?\s*(.*?)\s*```$", text, re.S)
    if fence:
        text = fence.group(1)
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise _Rejected(f"response is not valid JSON: {exc}", malformed=True) from None
    if not isinstance(data, dict):
        raise _Rejected("response must be a JSON object", malformed=True)
    return data


def _ask(client: ChatClient, messages: list[dict], parse: Callable[[str], object]):
    """Send, parse, and re-prompt with the error on failure, up to ``max_retries`` times."""
    attempts = client.config.max_retries + 1
    last: _Rejected | None = None
    for attempt in range(1, attempts + 1):
        content = client.complete(messages)
        try:
            return parse(content)
        except _Rejected as exc:
            last = exc
            log.info("attempt %d rejected: %s", attempt, exc)
            messages = messages + [
                {"role": "assistant", "content": content},
                {"role": "user", "content": f"Your answer was rejected: {exc}. Reply again with corrected JSON only."},
            ]
    assert last is not None
    if last.malformed:
        raise MalformedResponse(f"no well-formed response after {attempts} attempts: {last}", attempts)
    raise HallucinationRejected(f"proposal rejected after {attempts} attempts: {last}", last.violations, attempts)


def _catalogue(domain: Domain, instance: ProblemInstance) -> str:
    lines = ["Actions (name and typed parameters):"]
    for a in domain.actions:
        params = " ".join(f"{v} - {t}" for v, t in a.params)
        lines.append(f"  {a.name}({params})")
    lines.append("Objects:")
    for o, t in instance.objects.items():
        lines.append(f"  {o} - {t}")
    return "\n".join(lines)


def build_seed_messages(task_text: str, domain: Domain, instance: ProblemInstance) -> list[dict]:
    system = (
        "You select the actions a robot team will need for a household task. "
        'Answer with a JSON object {"seeds": [{"action": name, "args": [...]}], "rationale": text}. '
        'Use only listed actions and objects; write "*" for an argument you leave open.'
    )
    user = f"{_catalogue(domain, instance)}\n\nTask: {task_text}"
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def llm_seed(
    task_text: str,
    domain: Domain,
    instance: ProblemInstance,
    config: SeederConfig,
    *,
    client: ChatClient | None = None,
) -> SeedProposal:
    """Ask the chat endpoint for seeds; only validated proposals are returned."""
    client = client or ChatClient(config)

    def parse(content: str) -> SeedProposal:
        data = _load_json_object(content)
        raw = data.get("seeds")
        if not isinstance(raw, list) or not raw:
            raise _Rejected('expected a non-empty "seeds" list', malformed=True)
        seeds = []
        for item in raw:
            if not isinstance(item, dict) or "action" not in item or not isinstance(item.get("args", []), list):
                raise _Rejected('each seed needs "action" and an "args" list', malformed=True)
            seeds.append(SeedAction.from_json(item))
        proposal = SeedProposal(tuple(seeds), str(data.get("rationale", "")), "llm")
        violations = validate_proposal(proposal, domain, instance)
        if violations:
            raise _Rejected("; ".join(v.message for v in violations), violations)
        return proposal

    return _ask(client, build_seed_messages(task_text, domain, instance), parse)


def llm_decompose(
    instance: ProblemInstance,
    domain: Domain,
    config: SeederConfig,
    *,
    client: ChatClient | None = None,
) -> list[frozenset[Atom]]:
    """Ask the endpoint to split the goal; the subtask goals must cover the goal exactly."""
    client = client or ChatClient(config)
    goal = frozenset(instance.goal)
    system = (
        "Split the goal of a multi-robot household task into independent subtasks. "
        'Answer with a JSON object {"subtasks": [{"goals": ["(pred arg ...)", ...]}]}, '
        "using every goal atom exactly once."
    )
    user = f"{_catalogue(domain, instance)}\n\nGoal atoms:\n" + "\n".join(f"  {g}" for g in sorted(goal))
    messages = [{"role": "system", "content": system}, {"role": "user", "content": user}]

    def parse(content: str) -> list[frozenset[Atom]]:
        data = _load_json_object(content)
        raw = data.get("subtasks")
        if not isinstance(raw, list) or not raw:
            raise _Rejected('expected a non-empty "subtasks" list', malformed=True)
        groups = []
        for item in raw:
            goals = item.get("goals") if isinstance(item, dict) else None
            if not isinstance(goals, list) or not goals:
                raise _Rejected('each subtask needs a non-empty "goals" list', malformed=True)
            try:
                groups.append(frozenset(Atom.parse(str(g)) for g in goals))
            except ValueError as exc:
                raise _Rejected(str(exc), malformed=True) from None
        seen = frozenset().union(*groups)
        extra = sorted(seen - goal)
        if extra:
            raise _Rejected("atoms not in the goal: " + ", ".join(map(str, extra)))
        missing = sorted(goal - seen)
        if missing:
            raise _Rejected("goal atoms not assigned: " + ", ".join(map(str, missing)))
        if sum(len(g) for g in groups) != len(goal):
            raise _Rejected("a goal atom appears in more than one subtask")
        return groups

    return _ask(client, messages, parse)
