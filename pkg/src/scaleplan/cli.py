"""Command-line entry point: ``scaleplan {parse,graph,run,bench}``.

Exit codes: 0 success, 1 input error, 2 I/O error, 3 external service error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .bench.metrics import format_table
from .bench.records import load_benchmark
from .bench.world import execute_plan
from .errors import (
    BenchmarkParseError,
    HallucinationRejected,
    MalformedResponse,
    PDDLSyntaxError,
    PDDLTypeError,
    ScalePlanError,
    TransportError,
    UnsupportedFeature,
)
from .graph import EdgeKind, build_graph, to_dot
from .multiagent import load_team
from .pddl.parser import parse_domain, parse_problem
from .pddl.writer import domain_to_pddl, problem_to_pddl
from .pipeline import RunOptions, StageError, record_instance, run_benchmark, run_pipeline
from .planner import SearchConfig
from .seeder import SeederConfig

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_SERVICE, EXIT_INTERNAL = 0, 1, 2, 3, 4

log = logging.getLogger("scaleplan")


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_IO, f"{path}: {exc.strerror or exc}") from None


def _parse_domain_file(path: str):
    text = _read(path)
    try:
        return parse_domain(text)
    except (PDDLSyntaxError, UnsupportedFeature, PDDLTypeError) as exc:
        raise _Failure(EXIT_INPUT, f"{path}:{exc}") from None


def _parse_problem_file(path: str, domain):
    text = _read(path)
    try:
        return parse_problem(text, domain)
    except ScalePlanError as exc:
        raise _Failure(EXIT_INPUT, f"{path}:{exc}") from None


def _write(out_dir: Path, name: str, content) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    if not isinstance(content, str):
        content = json.dumps(content, indent=2, sort_keys=True) + "\n"
    path.write_text(content, encoding="utf-8")
    return path


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (TransportError, MalformedResponse, HallucinationRejected)):
        return EXIT_SERVICE
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (ScalePlanError, ValueError, KeyError)):
        return EXIT_INPUT
    return EXIT_INTERNAL


# -- commands ---------------------------------------------------------------------------


def cmd_parse(args) -> int:
    domain = _parse_domain_file(args.domain)
    if args.problem:
        problem = _parse_problem_file(args.problem, domain)
        sys.stdout.write(problem_to_pddl(problem))
    else:
        sys.stdout.write(domain_to_pddl(domain))
    return EXIT_OK


def cmd_graph(args) -> int:
    domain = _parse_domain_file(args.domain)
    graph = build_graph(domain)
    out = Path(args.output_dir)
    dot_path = _write(out, f"{domain.name}.dot", to_dot(graph))
    json_path = _write(out, f"{domain.name}.graph.json", graph.to_json())
    counts = {
        "nodes": len(graph.nodes),
        "strict": graph.count(EdgeKind.STRICT),
        "relaxed": graph.count(EdgeKind.RELAXED),
    }
    print(json.dumps(counts))
    log.info("wrote %s and %s", dot_path, json_path)
    return EXIT_OK


def _options(args) -> RunOptions:
    search = SearchConfig(strategy=args.strategy, heuristic=args.heuristic, max_expansions=args.max_expansions)
    llm = None
    if args.seeder == "llm" or args.decompose == "llm":
        trace = str(Path(args.output_dir) / "llm_trace.jsonl") if args.trace else None
        llm = SeederConfig(
            endpoint_url=args.endpoint,
            model_name=args.model,
            max_retries=args.max_retries,
            timeout=args.timeout,
            trace_path=trace,
        )
    return RunOptions(
        seeder=args.seeder,
        llm=llm,
        fallback=args.fallback,
        use_filter=not args.no_filter,
        decompose_mode=args.decompose,
        search=search,
    )


def _team(args, domain):
    if not args.team:
        return None
    try:
        return load_team(json.loads(_read(args.team)), domain)
    except (ValueError, KeyError, TypeError) as exc:
        raise _Failure(EXIT_INPUT, f"{args.team}: {exc}") from None


def cmd_run(args) -> int:
    out = Path(args.output_dir)
    record = None
    if args.benchmark:
        records = _load_records(args.benchmark)
        matches = [r for r in records if r.id == args.record] if args.record else records[:1]
        if not matches:
            raise _Failure(EXIT_INPUT, f"{args.benchmark}: no record with id {args.record!r}")
        record = matches[0]
        domain = _parse_domain_file(args.domain) if args.domain else None
        instance, domain = record_instance(record, domain)
    else:
        if not args.domain or not args.problem:
            raise _Failure(EXIT_INPUT, "run needs --domain and --problem, or --benchmark")
        domain = _parse_domain_file(args.domain)
        instance = _parse_problem_file(args.problem, domain)
        if args.task:
            instance = type(instance)(**{**instance.__dict__, "task_text": args.task})
    team = _team(args, domain)
    result = run_pipeline(instance, domain, team, _options(args))
    for note in result.notes:
        log.warning(note)
    _write(out, "plan.json", result.plan.to_json())
    _write(out, "stats.json", result.stats_json())
    if result.proposal is not None:
        _write(out, "seeds.json", result.proposal.to_json())
    if record is not None:
        from .bench.metrics import compute_metrics

        trace = execute_plan(record.scene, result.plan)
        metrics = compute_metrics([record], [trace])
        _write(out, "trace.json", trace.to_json())
        _write(out, "metrics.json", metrics.to_json())
    summary = {
        "steps": result.plan.size,
        "makespan": result.makespan,
        "ground_actions": result.ground_actions,
        "expanded": result.expanded,
        "plan_valid": result.plan_valid,
    }
    print(json.dumps(summary))
    return EXIT_OK if result.plan_valid else EXIT_INTERNAL


def _load_records(path: str):
    _read(path)  # surfaces I/O errors with exit code 2
    try:
        return load_benchmark(path)
    except (BenchmarkParseError, ScalePlanError) as exc:
        raise _Failure(EXIT_INPUT, str(exc)) from None


def cmd_bench(args) -> int:
    records = _load_records(args.benchmark)
    if not records:
        raise _Failure(EXIT_INPUT, f"{args.benchmark}: no records")
    domain = _parse_domain_file(args.domain) if args.domain else None
    team = _team(args, domain) if domain is not None else None
    if args.team and domain is None:
        from .bench.bridge import household_domain

        team = _team(args, household_domain())
    report = run_benchmark(
        records, team, _options(args), workers=args.workers, domain=domain, filter_compare=args.filter_compare
    )
    out = Path(args.output_dir)
    _write(out, "metrics.json", report.metrics.to_json())
    _write(out, "records.json", report.to_json()["records"])
    if args.filter_compare:
        pairs = [
            {
                "id": o.record.id,
                "filtered": o.result.stats_json() if o.result else None,
                "unfiltered": o.unfiltered.stats_json() if o.unfiltered else None,
            }
            for o in report.outcomes
        ]
        _write(out, "filter_compare.json", pairs)
    sys.stdout.write(format_table(report.metrics, report.planning_time))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--team", help="team JSON: {\"robots\": [{\"id\", \"object\", \"capabilities\"}]}")
    p.add_argument("--seeder", choices=("lexical", "llm"), default="lexical")
    p.add_argument("--decompose", choices=("rule", "llm"), default="rule")
    p.add_argument("--no-filter", action="store_true", help="plan on the unfiltered instance")
    p.add_argument("--fallback", action="store_true", help="use lexical seeds if the LLM seeder fails")
    p.add_argument("--trace", action="store_true", help="log LLM requests and responses as JSON lines")
    p.add_argument("--endpoint", help="chat endpoint base URL (default: $SCALEPLAN_API_BASE)")
    p.add_argument("--model", default="gpt-4o-mini")
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--strategy", choices=("gbfs", "bfs"), default="gbfs")
    p.add_argument("--heuristic", choices=("hadd", "goalcount", "zero"), default="hadd")
    p.add_argument("--max-expansions", type=int, default=200_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaleplan", description="Relevance-filtered multi-robot planning.")
    parser.add_argument("--config", help="JSON file of option defaults; explicit flags win")
    parser.add_argument("--output-dir", default="scaleplan-out")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse PDDL and print its canonical form")
    p.add_argument("domain")
    p.add_argument("problem", nargs="?")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("graph", help="build the action graph; write DOT and JSON")
    p.add_argument("domain")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("run", help="plan one task end to end")
    p.add_argument("--domain")
    p.add_argument("--problem")
    p.add_argument("--task", help="natural-language task text (overrides none in the problem)")
    p.add_argument("--benchmark", help="benchmark JSON; plan and execute one of its records")
    p.add_argument("--record", help="record id within --benchmark (default: first)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run every benchmark record and print TCR/GCR/ER")
    p.add_argument("benchmark")
    p.add_argument("--domain", help="household-compatible domain (default: shipped household domain)")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--filter-compare", action="store_true", help="also run unfiltered and pair the stats")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def _parse_args(parser: argparse.ArgumentParser, argv: Sequence[str] | None) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    config = json.loads(_read(args.config))
    if not isinstance(config, dict):
        raise _Failure(EXIT_INPUT, f"{args.config}: config must be a JSON object")
    config = {k.replace("-", "_"): v for k, v in config.items()}
    # A subparser default would overwrite a global flag given on the command
    # line, so each parser only receives the keys it declares itself.
    top = {a.dest for a in parser._actions}
    parser.set_defaults(**{k: v for k, v in config.items() if k in top})
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in config.items() if k not in top and k != "func"})
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _parse_args(parser, argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
        )
        return args.func(args)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (ScalePlanError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except Exception as exc:  # pragma: no cover - last-resort mapping
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
