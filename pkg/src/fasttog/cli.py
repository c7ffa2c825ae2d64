"""Command line interface.

Subcommands: ``ingest`` (triple file to canonical dump), ``detect``
(partition a graph under a size bound), ``run`` (answer one question),
``eval`` (batch evaluation with a report), ``trace`` (trace JSONL to DOT).

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .detect import DETECTOR_KINDS, detect
from .engine import Engine, EngineConfig, trace_to_dot
from .errors import (
    DataError,
    FastToGError,
    GatewayError,
    NotFoundError,
    ResolutionError,
    TripleFormatError,
)
from .evaluate import evaluate, load_dataset
from .community import partition_dump
from .gateway import ChatEndpoint, ScriptedGateway
from .kg import KnowledgeGraph, Subgraph


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fasttog",
        description="Community-by-community retrieval and reasoning over knowledge graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse a triple file and print the canonical dump")
    p_ingest.add_argument("triples", help="TSV triple file")
    p_ingest.add_argument("--out", help="write the dump here instead of stdout")

    p_detect = sub.add_parser("detect", help="partition a graph into bounded communities")
    p_detect.add_argument("--graph", required=True, help="TSV triple file")
    p_detect.add_argument("--detector", default="louvain", choices=DETECTOR_KINDS)
    p_detect.add_argument("--max-community-size", type=int, default=4)
    p_detect.add_argument("--seed", type=int, default=0)
    p_detect.add_argument("--out", help="write the partition dump here instead of stdout")

    p_run = sub.add_parser("run", help="answer a single question")
    p_run.add_argument("--graph", required=True)
    p_run.add_argument("--question", required=True)
    p_run.add_argument("--start-entity", action="append", default=[])
    p_run.add_argument("--out-dir", help="directory for trace JSONL and DOT files")
    _add_engine_args(p_run)

    p_eval = sub.add_parser("eval", help="run a JSONL dataset and report metrics")
    p_eval.add_argument("--graph", required=True)
    p_eval.add_argument("--data", required=True, help="JSONL dataset")
    p_eval.add_argument("--out", help="write the JSON report here")
    p_eval.add_argument("--trace-dir", help="write one trace file per record")
    p_eval.add_argument("--parallelism", type=int, default=1)
    p_eval.add_argument("--sample-n", type=int)
    _add_engine_args(p_eval)

    p_trace = sub.add_parser("trace", help="render a trace JSONL file as DOT")
    p_trace.add_argument("trace_file")
    p_trace.add_argument("--out", help="write the DOT here instead of stdout")

    return parser


def _add_engine_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--width", type=int, default=3)
    sp.add_argument("--max-depth", type=int, default=5)
    sp.add_argument("--max-community-size", type=int, default=4)
    sp.add_argument("--r-max", type=int, default=2)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--mode", default="t2t", choices=("t2t", "g2t"))
    sp.add_argument("--detector", default="louvain", choices=DETECTOR_KINDS)
    sp.add_argument("--coarse-top-k", type=int)
    sp.add_argument("--prune-mode", default="modularity", choices=("modularity", "random"))
    sp.add_argument("--degrade", default="io", choices=("io", "cot", "cot_sc"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--templates", help="directory of prompt template overrides")
    sp.add_argument("--mock-script", help="scripted gateway reply file")
    sp.add_argument("--g2t-script", help="scripted rewrite-backend reply file")
    sp.add_argument("--endpoint", help="chat-completion endpoint URL")
    sp.add_argument("--model", help="model name for the endpoint")
    sp.add_argument("--api-key", help="endpoint API key")


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        width=args.width,
        max_depth=args.max_depth,
        r_max=args.r_max,
        max_community_size=args.max_community_size,
        rho=args.rho,
        mode=args.mode,
        detector=args.detector,
        coarse_top_k=args.coarse_top_k,
        prune_mode=args.prune_mode,
        degrade_mode=args.degrade,
        seed=args.seed,
        templates_dir=args.templates,
    )


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_ingest(args) -> int:
    graph = KnowledgeGraph.ingest(args.triples)
    _write_or_print(graph.dump(), args.out)
    if graph.duplicate_count:
        print(f"collapsed {graph.duplicate_count} duplicate triple(s)", file=sys.stderr)
    return 0


def _cmd_detect(args) -> int:
    graph = KnowledgeGraph.ingest(args.graph)
    g = Subgraph.from_full_graph(graph)
    partition = detect(g, args.detector, args.max_community_size, seed=args.seed)
    _write_or_print(partition_dump(partition), args.out)
    return 0


def _make_gateway(args):
    if args.mock_script:
        return ScriptedGateway.from_file(args.mock_script)
    return ChatEndpoint(url=args.endpoint, api_key=args.api_key, model=args.model)


def _make_g2t_backend(args):
    if args.mode != "g2t":
        return None
    if args.g2t_script:
        return ScriptedGateway.from_file(args.g2t_script)
    if args.endpoint or not args.mock_script:
        return ChatEndpoint(url=args.endpoint, api_key=args.api_key, model=args.model)
    return None


def _cmd_run(args) -> int:
    graph = KnowledgeGraph.ingest(args.graph)
    config = _engine_config(args)
    gateway = _make_gateway(args)
    engine = Engine(graph, gateway, config, g2t_backend=_make_g2t_backend(args))
    verdict, trace = engine.run(args.question, args.start_entity or None)
    print(f"answer: {verdict.text if verdict.kind == 'answer' else 'Unknown'}")
    print(f"depth_reached: {trace.depth_reached}  degraded: {trace.degraded}")
    print(f"calls: {json.dumps(trace.ledger, sort_keys=True)}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        trace_path = out_dir / "run.trace.jsonl"
        dot_path = out_dir / "run.dot"
        trace_path.write_text(trace.to_jsonl(), encoding="utf-8")
        dot_path.write_text(trace_to_dot(trace.events), encoding="utf-8")
        print(f"trace: {trace_path}")
        print(f"dot: {dot_path}")
    return 0


def _cmd_eval(args) -> int:
    graph = KnowledgeGraph.ingest(args.graph)
    config = _engine_config(args)
    records = load_dataset(args.data, sample_n=args.sample_n, seed=args.seed)

    if args.mock_script:
        def gateway_factory(_record):
            return ScriptedGateway.from_file(args.mock_script)
    else:
        endpoint = ChatEndpoint(url=args.endpoint, api_key=args.api_key, model=args.model)

        def gateway_factory(_record):
            return endpoint

    if args.mode == "g2t" and args.g2t_script:
        def backend_factory(_record):
            return ScriptedGateway.from_file(args.g2t_script)
    else:
        backend_factory = None

    report = evaluate(
        records,
        graph,
        config,
        gateway_factory,
        g2t_backend_factory=backend_factory,
        parallelism=args.parallelism,
        trace_dir=args.trace_dir,
    )
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
        print(f"report: {args.out}")
    return 0


def _cmd_trace(args) -> int:
    events = []
    with open(args.trace_file, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(line_no, f"invalid trace line: {exc}")
    _write_or_print(trace_to_dot(events), args.out)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "detect": _cmd_detect,
    "run": _cmd_run,
    "eval": _cmd_eval,
    "trace": _cmd_trace,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; our contract reserves 2 for data
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (TripleFormatError, DataError, NotFoundError, ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GatewayError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3
    except FastToGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad input values that slipped past argparse (e.g. empty graph)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
