"""Command-line entry point for the whole pipeline:
convert -> expand -> split -> validate -> query -> serve.

Exit codes: 0 success, 1 validation errors, 2 usage or parse errors.
All intermediate artifacts are N-Triples; Turtle and RDF/XML are
export-only formats.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import build, rules, serialize, validate as validate_mod
from .query import QueryParseError, QueryValidationError, evaluate, parse_query, results_to_json, results_to_tsv
from .rdf import Graph
from .serialize import NTriplesParseError, parse_ntriples, to_ntriples
from .server import DatasetServer, load_server_config
from .source import parse_source

USAGE_ERROR = 2
VALIDATION_ERROR = 1


def _fail(message: str, code: int = USAGE_ERROR) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_graph(path: str, prefixes: Optional[dict[str, str]] = None) -> Graph:
    graph = parse_ntriples(_read_text(path))
    if prefixes:
        graph.prefixes.update(prefixes)
    return graph


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        text = _read_text(args.source)
    except OSError as exc:
        return _fail(f"cannot read {args.source}: {exc}")
    records, diagnostics = parse_source(text)
    for d in diagnostics:
        print(f"{args.source}:{d.line}: {d.message}", file=sys.stderr)

    row_problems: list[str] = []
    translations: list[tuple[str, str, str]] = []
    mappings: list[build.VersionMapping] = []
    collections: list[build.CollectionSpec] = []
    external: list[build.ExternalMapping] = []
    try:
        if args.labels:
            translations, problems = build.read_translations(_read_text(args.labels))
            row_problems += problems
        if args.mappings:
            mappings, problems = build.read_version_mappings(_read_text(args.mappings))
            row_problems += problems
        if args.collections:
            collections, problems = build.read_collections(_read_text(args.collections))
            row_problems += problems
        if args.external:
            external, problems = build.read_external_mappings(_read_text(args.external))
            row_problems += problems
    except OSError as exc:
        return _fail(f"cannot read auxiliary input: {exc}")

    graph, build_diagnostics = build.build_graph(
        records, translations, mappings, collections, external
    )
    for message in row_problems + build_diagnostics:
        print(message, file=sys.stderr)
    Path(args.output).write_text(to_ntriples(graph), encoding="utf-8")
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    try:
        graph = _load_graph(args.master)
    except (OSError, NTriplesParseError) as exc:
        return _fail(f"cannot load {args.master}: {exc}")
    ruleset = rules.builtin_ruleset()
    if args.rules:
        try:
            extra = rules.parse_rules(_read_text(args.rules), build.default_prefix_map())
        except (OSError, ValueError) as exc:
            return _fail(f"cannot load rules from {args.rules}: {exc}")
        ruleset = ruleset + extra
    expanded = rules.expand(graph, ruleset)
    Path(args.output).write_text(to_ntriples(expanded), encoding="utf-8")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    try:
        graph = _load_graph(args.expanded, build.default_prefix_map())
    except (OSError, NTriplesParseError) as exc:
        return _fail(f"cannot load {args.expanded}: {exc}")
    out_dir = Path(args.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = serialize.FORMATS[args.format][0]
    for code, piece in sorted(serialize.split_per_concept(graph).items()):
        (out_dir / f"{code}.{args.format}").write_text(writer(piece), encoding="utf-8")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        graph = _load_graph(args.file)
    except (OSError, NTriplesParseError) as exc:
        return _fail(f"cannot load {args.file}: {exc}")
    report = validate_mod.validate(graph.freeze(), phase=args.phase)
    sys.stdout.write(report.to_tsv() if args.tsv else report.to_text())
    return VALIDATION_ERROR if report.errors else 0


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        graph = _load_graph(args.file)
    except (OSError, NTriplesParseError) as exc:
        return _fail(f"cannot load {args.file}: {exc}")
    s = validate_mod.validate(graph.freeze(), phase="master").stats
    print(f"top            {s.top}")
    print(f"intermediate   {s.intermediate}")
    print(f"leaves         {s.leaves}")
    print(f"concepts       {s.total_concepts}")
    print(f"math labels    {s.math_label_count} ({s.math_label_fraction:.4%})")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    try:
        graph = _load_graph(args.file)
        query_text = _read_text(args.query)
    except (OSError, NTriplesParseError) as exc:
        return _fail(str(exc))
    try:
        query = parse_query(query_text)
    except (QueryParseError, QueryValidationError) as exc:
        return _fail(f"query error: {exc}")
    table = evaluate(graph.freeze(), query)
    sys.stdout.write(results_to_json(table) if args.json else results_to_tsv(table))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        config, raw = load_server_config(_read_text(args.config))
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"cannot load config {args.config}: {exc}")
    if "data" not in raw:
        return _fail("config must name the expanded dataset via 'data = <path>'")
    prefixes = build.default_prefix_map(config.scheme)
    try:
        expanded = _load_graph(raw["data"], prefixes)
        master = _load_graph(raw["master"], prefixes) if "master" in raw else Graph(prefixes)
    except (OSError, NTriplesParseError) as exc:
        return _fail(f"cannot load dataset: {exc}")
    server = DatasetServer(master, expanded, config)
    print(f"serving on {server.base_url}{config.path_prefix} (Ctrl-C to stop)", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msclod",
        description="Classification scheme to SKOS linked-data toolchain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="parse a master source and build the SKOS master graph")
    p.add_argument("source")
    p.add_argument("--labels", help="translations TSV: code, language, label")
    p.add_argument("--mappings", help="version mappings TSV: old-code, relation, new-code, version")
    p.add_argument("--collections", help="collections TSV: id, language, label, member-code")
    p.add_argument("--external", help="external mappings TSV: code, property CURIE, target IRI")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("expand", help="materialize entailments over a master graph")
    p.add_argument("master")
    p.add_argument("--rules", help="extra rules file (extends the builtin ruleset)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("split", help="write one description file per class")
    p.add_argument("expanded")
    p.add_argument("-d", "--directory", required=True)
    p.add_argument("--format", choices=("nt", "ttl", "rdf"), default="nt")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate", help="run quality checks; exit 1 on errors")
    p.add_argument("file")
    p.add_argument("--phase", choices=("master", "expanded"), default="master")
    p.add_argument("--tsv", action="store_true", help="machine-readable findings")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="print the scheme statistics block")
    p.add_argument("file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("query", help="evaluate a query file against a dataset")
    p.add_argument("file")
    p.add_argument("-q", "--query", required=True)
    p.add_argument("--json", action="store_true", help="standard JSON results instead of TSV")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="publish a dataset over HTTP")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
