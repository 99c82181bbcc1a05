"""Canonical PDDL text and JSON mirrors of domains and problems."""

from __future__ import annotations

from typing import Iterable, Mapping

from .model import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    Domain,
    Literal,
    PredicateSignature,
    ProblemInstance,
    TypeHierarchy,
)

INDENT = "  "


def _typed(pairs: Iterable[tuple[str, str]]) -> str:
    return " ".join(f"{name} - {typ}" for name, typ in pairs)


def _conjunction(keyword: str, lines: list[str], depth: int) -> list[str]:
    pad = INDENT * depth
    if not lines:
        return [f"{pad}{keyword} (and)"]
    out = [f"{pad}{keyword} (and"]
    out += [f"{pad}{INDENT}{line}" for line in lines]
    out.append(f"{pad})")
    return out


def domain_to_pddl(domain: Domain) -> str:
    out = [f"(define (domain {domain.name})"]
    out.append(f"{INDENT}(:requirements {' '.join(domain.requirements)})")
    declared = domain.types.declared()
    if declared:
        out.append(f"{INDENT}(:types")
        out += [f"{INDENT * 2}{t} - {p}" for t, p in declared.items()]
        out.append(f"{INDENT})")
    if domain.predicates:
        out.append(f"{INDENT}(:predicates")
        for p in domain.predicates:
            inner = _typed(zip(p.param_names, p.param_types))
            out.append(f"{INDENT * 2}({p.name}{' ' + inner if inner else ''})")
        out.append(f"{INDENT})")
    for a in domain.actions:
        out.append(f"{INDENT}(:action {a.display_name or a.name}")
        out.append(f"{INDENT * 2}:parameters ({_typed(a.params)})")
        out += _conjunction(":precondition", [str(l) for l in a.preconditions], 2)
        effects = [str(l) for l in a.add_effects] + [f"(not {l})" for l in a.del_effects]
        out += _conjunction(":effect", effects, 2)
        out.append(f"{INDENT})")
    out.append(")")
    return "\n".join(out) + "\n"


def _atom_text(atom: Atom, display: Mapping[str, str]) -> str:
    if not atom.args:
        return f"({atom.predicate})"
    return f"({atom.predicate} {' '.join(display.get(a, a) for a in atom.args)})"


def problem_to_pddl(problem: ProblemInstance) -> str:
    disp = problem.display
    out = [f"(define (problem {problem.name})", f"{INDENT}(:domain {problem.domain_name})"]
    if problem.objects:
        out.append(f"{INDENT}(:objects")
        out += [f"{INDENT * 2}{disp.get(o, o)} - {t}" for o, t in problem.objects.items()]
        out.append(f"{INDENT})")
    out.append(f"{INDENT}(:init")
    out += [f"{INDENT * 2}{_atom_text(a, disp)}" for a in sorted(problem.init)]
    out.append(f"{INDENT})")
    goal = [_atom_text(a, disp) for a in sorted(problem.goal)]
    if goal:
        out.append(f"{INDENT}(:goal (and")
        out += [f"{INDENT * 2}{g}" for g in goal]
        out.append(f"{INDENT}))")
    else:
        out.append(f"{INDENT}(:goal (and))")
    out.append(")")
    return "\n".join(out) + "\n"


# -- JSON ------------------------------------------------------------------------------


def _lit_json(lit: Literal) -> dict:
    return {"predicate": lit.predicate, "args": list(lit.args), "types": list(lit.types)}


def _lit_from_json(d: Mapping) -> Literal:
    return Literal(d["predicate"], tuple(d["args"]), tuple(d.get("types", ())))


def domain_to_json(domain: Domain) -> dict:
    return {
        "name": domain.name,
        "requirements": list(domain.requirements),
        "types": domain.types.declared(),
        "predicates": [
            {"name": p.name, "params": [[n, t] for n, t in zip(p.param_names, p.param_types)]}
            for p in domain.predicates
        ],
        "actions": [
            {
                "name": a.name,
                "display_name": a.display_name or a.name,
                "params": [[v, t] for v, t in a.params],
                "preconditions": [_lit_json(l) for l in a.preconditions],
                "add_effects": [_lit_json(l) for l in a.add_effects],
                "del_effects": [_lit_json(l) for l in a.del_effects],
            }
            for a in domain.actions
        ],
    }


def domain_from_json(data: Mapping) -> Domain:
    types = data.get("types", {})
    return Domain(
        name=data["name"],
        types=TypeHierarchy({t: (p or ROOT_TYPE) for t, p in types.items()}),
        predicates=tuple(
            PredicateSignature(p["name"], tuple(t for _, t in p["params"]), tuple(n for n, _ in p["params"]))
            for p in data.get("predicates", ())
        ),
        actions=tuple(
            ActionSchema(
                name=a["name"],
                params=tuple((v, t) for v, t in a["params"]),
                preconditions=tuple(_lit_from_json(l) for l in a.get("preconditions", ())),
                add_effects=tuple(_lit_from_json(l) for l in a.get("add_effects", ())),
                del_effects=tuple(_lit_from_json(l) for l in a.get("del_effects", ())),
                display_name=a.get("display_name", a["name"]),
            )
            for a in data.get("actions", ())
        ),
        requirements=tuple(data.get("requirements", (":strips", ":typing"))),
    )


def atom_to_json(atom: Atom) -> list[str]:
    return [atom.predicate, *atom.args]


def atom_from_json(data) -> Atom:
    if isinstance(data, str):
        return Atom.parse(data)
    return Atom(str(data[0]).lower(), tuple(str(a).lower() for a in data[1:]))


def problem_to_json(problem: ProblemInstance) -> dict:
    return {
        "name": problem.name,
        "domain": problem.domain_name,
        "objects": dict(problem.objects),
        "display": {o: d for o, d in problem.display.items() if d != o},
        "init": [atom_to_json(a) for a in sorted(problem.init)],
        "goal": [atom_to_json(a) for a in sorted(problem.goal)],
        "task_text": problem.task_text,
    }


def problem_from_json(data: Mapping) -> ProblemInstance:
    return ProblemInstance(
        name=data["name"],
        domain_name=data["domain"],
        objects=dict(data.get("objects", {})),
        init=frozenset(atom_from_json(a) for a in data.get("init", ())),
        goal=frozenset(atom_from_json(a) for a in data.get("goal", ())),
        task_text=data.get("task_text"),
        display=dict(data.get("display", {})),
    )
