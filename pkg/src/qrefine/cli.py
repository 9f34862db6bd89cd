"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 data error (bad input files,
infeasible instances, mismatched record sets).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .discovery import DiscoveryConfig, simulate_discovery
from .errors import QrefineError
from .evaluation import (
    EmbeddingTable,
    PredictorConfig,
    correction_report,
    flag_irrelevant,
    load_judgments,
    predict_answers,
    set_prf,
)
from .filters import Gazetteer, default_gazetteer, default_rules, filtered_pool, load_rules
from .optimizer import STATUS_INFEASIBLE, solve, solve_exhaustive
from .pipeline import (
    METHOD_QRESP,
    METHODS,
    PipelineConfig,
    build_dataset,
    cost_comparison_report,
    read_records,
    select_dev_queries,
)
from .stats import binomial_test, chi_square_2x2, cohen_kappa, fisher_exact_2x2
from .taxonomy import Taxonomy, load_taxonomy


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems instead of argparse's 2
        raise UsageError(message)


def _emit(record: dict, fmt: str) -> None:
    if fmt == "lines":
        print(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    else:
        for key, value in record.items():
            print(f"{key}: {value}")


def _add_taxonomy_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--edges", required=True, help="edges TSV (child<TAB>parent)")
    parser.add_argument("--instances", required=True, help="instances TSV (entity<TAB>type)")
    parser.add_argument("--drop-cycles", action="store_true",
                        help="drop back-edges instead of failing on cycles")


def _add_filter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rules", help="filter rules TSV (kind<TAB>payload)")
    parser.add_argument("--gazetteer", help="gazetteer TSV (phrase<TAB>category)")
    parser.add_argument("--transitive", action="store_true",
                        help="use all descendants as candidates, not direct children")


def _load_taxonomy(args) -> Taxonomy:
    with open(args.edges, encoding="utf-8") as edges, \
            open(args.instances, encoding="utf-8") as instances:
        return load_taxonomy(edges, instances, drop_cycles=args.drop_cycles)


def _load_filtering(args):
    rules = default_rules()
    if args.rules:
        with open(args.rules, encoding="utf-8") as handle:
            rules = load_rules(handle)
    gazetteer = default_gazetteer()
    if args.gazetteer:
        with open(args.gazetteer, encoding="utf-8") as handle:
            gazetteer = Gazetteer.from_tsv(handle)
    return rules, gazetteer


def _cmd_load_check(args) -> int:
    tax = _load_taxonomy(args)
    for line in tax.report.to_lines():
        print(line)
    return 0


def _cmd_select(args) -> int:
    tax = _load_taxonomy(args)
    rules, gazetteer = _load_filtering(args)
    if not tax.has_type(args.query):
        print(f"unknown type {args.query!r}", file=sys.stderr)
        return 2
    pool = filtered_pool(tax, args.query, rules=rules, gazetteer=gazetteer,
                         transitive=args.transitive)
    solver = solve_exhaustive if args.exhaustive else solve
    kwargs = {} if args.exhaustive else {"budget": args.budget}
    result = solver(tax, args.query, pool, args.k, **kwargs)
    if result.status == STATUS_INFEASIBLE:
        print(
            f"infeasible: {len(pool.kept)} filtered candidates for k={args.k}",
            file=sys.stderr,
        )
        return 2
    record = result.to_record(tax)
    record["candidates_all"] = len(pool.all)
    record["candidates_kept"] = len(pool.kept)
    _emit(record, args.format)
    return 0


def _cmd_build_dataset(args) -> int:
    tax = _load_taxonomy(args)
    rules, gazetteer = _load_filtering(args)
    cfg = PipelineConfig(
        k=args.k,
        min_answers_train=args.min_answers,
        min_subtypes_dev=args.min_subtypes_dev,
        min_answers_per_dev_subtype=args.min_answers_dev,
        seed=args.seed,
        solver_budget=args.budget,
        method=args.method,
        dev_sample_size=args.dev_size,
        transitive=args.transitive,
    )
    dev = select_dev_queries(tax, cfg)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    count = 0
    try:
        if dev.warning:
            print(json.dumps({"record": "warning", "message": dev.warning},
                             ensure_ascii=False), file=sys.stderr)
        for record in build_dataset(tax, cfg, rules=rules, gazetteer=gazetteer,
                                    dev=dev.queries):
            out.write(record.to_json() + "\n")
            count += 1
    except Exception as exc:  # abort marker so partial output is detectable
        out.write(json.dumps({"record": "abort", "error": str(exc)},
                             ensure_ascii=False) + "\n")
        raise
    finally:
        if out is not sys.stdout:
            out.close()
    print(json.dumps({"record": "summary", "queries": count, "method": cfg.method,
                      "seed": cfg.seed}, ensure_ascii=False), file=sys.stderr)
    return 0


def _cmd_compare_costs(args) -> int:
    with open(args.records_a, encoding="utf-8") as handle:
        a = read_records(handle)
    with open(args.records_b, encoding="utf-8") as handle:
        b = read_records(handle)
    tax = None
    if args.edges and args.instances:
        tax = _load_taxonomy(args)
    report = cost_comparison_report(a, b, taxonomy=tax)
    if args.format == "lines":
        print(report.to_line())
    else:
        total = len(report.pairs)
        print(f"pairs: {total}")
        print(f"a<b: {report.lower}  a=b: {report.equal}  a>b: {report.higher}")
        print(f"least-squares slope: {report.slope}")
        print(f"search errors: {list(report.search_errors)}")
    return 0


def _cmd_simulate(args) -> int:
    tax = _load_taxonomy(args)
    rules, gazetteer = _load_filtering(args)
    config = DiscoveryConfig(
        k=args.k,
        listing_threshold=args.listing_threshold,
        solver_budget=args.budget,
        transitive=args.transitive,
        filters_enabled=not args.no_filters,
        rules=rules,
        gazetteer=gazetteer,
    )
    outcome = simulate_discovery(tax, args.query, args.target, k=args.k, config=config)
    _emit(
        {
            "query": args.query,
            "target": args.target,
            "drills": outcome.drills,
            "outcome": outcome.outcome,
            "final_type": tax.type_name(outcome.final_type),
        },
        args.format,
    )
    return 0


def _read_names(path: str) -> list[str]:
    with open(path, encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]


def _cmd_eval(args) -> int:
    if args.eval_command == "set-prf":
        prf = set_prf(_read_names(args.pred), _read_names(args.silver))
        _emit({"precision": prf.precision, "recall": prf.recall, "f1": prf.f1}, args.format)
        return 0
    with open(args.entity_embeddings, encoding="utf-8") as handle:
        entities = EmbeddingTable.from_tsv(handle, "entity")
    with open(args.query_embeddings, encoding="utf-8") as handle:
        queries = EmbeddingTable.from_tsv(handle, "query")
    cfg = PredictorConfig(threshold=args.threshold)
    if args.eval_command == "predict":
        answers = predict_answers(entities, queries, args.query, cfg)
        _emit(
            {"query": args.query,
             "answers": sorted(entities.name_of(i) for i in answers)},
            args.format,
        )
        return 0
    # correction: flag every judged pair by predicted-answer disjointness
    with open(args.judgments, encoding="utf-8") as handle:
        judgments = load_judgments(handle)
    predictions: dict[str, object] = {}

    def predicted(name: str):
        if name not in predictions:
            predictions[name] = predict_answers(entities, queries, name, cfg)
        return predictions[name]

    flags = {
        (query, refinement): flag_irrelevant(predicted(query), predicted(refinement))
        for query, refinement in judgments
    }
    report = correction_report(judgments, flags)
    if args.format == "lines":
        print(report.to_line())
    else:
        _emit(report.to_record(), "text")
    return 0


def _parse_table(values: list[int]) -> list[list[int]]:
    return [[values[0], values[1]], [values[2], values[3]]]


def _parse_labels(text: str) -> list[str]:
    if text.startswith("@"):
        return _read_names(text[1:])
    return [t for t in text.split(",") if t]


def _cmd_stats(args) -> int:
    if args.stats_command == "binomial":
        p = binomial_test(args.successes, args.trials, p0=args.p0,
                          one_sided=not args.two_sided)
        record = {"test": "binomial", "successes": args.successes, "trials": args.trials,
                  "p0": args.p0, "one_sided": not args.two_sided, "p_value": p}
    elif args.stats_command == "fisher":
        p = fisher_exact_2x2(_parse_table(args.table))
        record = {"test": "fisher", "table": _parse_table(args.table), "p_value": p}
    elif args.stats_command == "chi2":
        stat, p = chi_square_2x2(_parse_table(args.table), continuity=args.continuity)
        record = {"test": "chi2", "table": _parse_table(args.table),
                  "statistic": stat, "p_value": p}
    else:
        a = _parse_labels(args.a)
        b = _parse_labels(args.b)
        record = {"test": "kappa", "n": len(a), "kappa": cohen_kappa(a, b)}
    _emit(record, args.format)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    tax = _load_taxonomy(args)
    rules, gazetteer = _load_filtering(args)
    app = create_app(
        tax,
        rules=rules,
        gazetteer=gazetteer,
        k_default=args.k,
        solver_budget=args.budget,
        listing_threshold=args.listing_threshold,
        session_ttl=args.session_ttl,
        default_seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="qrefine", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qrefine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load-check", help="load a taxonomy and print its load report")
    _add_taxonomy_args(p)
    p.set_defaults(func=_cmd_load_check)

    p = sub.add_parser("select", help="pick the minimum-cost refinement set for one query")
    _add_taxonomy_args(p)
    _add_filter_args(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--budget", type=float, default=5.0)
    p.add_argument("--exhaustive", action="store_true", help="full enumeration instead of branch and bound")
    p.add_argument("--format", choices=["text", "lines"], default="text")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("build-dataset", help="emit query/refinement-set records")
    _add_taxonomy_args(p)
    _add_filter_args(p)
    p.add_argument("--method", choices=list(METHODS), default=METHOD_QRESP)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSONL path, or - for stdout")
    p.add_argument("--budget", type=float, default=5.0)
    p.add_argument("--min-answers", type=int, default=50)
    p.add_argument("--min-subtypes-dev", type=int, default=15)
    p.add_argument("--min-answers-dev", type=int, default=200)
    p.add_argument("--dev-size", type=int, default=200)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("compare-costs", help="paired cost report between two record files")
    p.add_argument("records_a")
    p.add_argument("records_b")
    p.add_argument("--edges", help="taxonomy edges, to rescore records without a cost")
    p.add_argument("--instances", help="taxonomy instances, to rescore records without a cost")
    p.add_argument("--drop-cycles", action="store_true")
    p.add_argument("--format", choices=["text", "lines"], default="text")
    p.set_defaults(func=_cmd_compare_costs)

    p = sub.add_parser("simulate-discovery", help="greedy drill-down toward a target entity")
    _add_taxonomy_args(p)
    _add_filter_args(p)
    p.add_argument("--query", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--listing-threshold", type=int, default=1)
    p.add_argument("--no-filters", action="store_true")
    p.add_argument("--format", choices=["text", "lines"], default="text")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("eval", help="set metrics, answer prediction, correction report")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    sp = eval_sub.add_parser("set-prf", help="precision/recall/F1 between two name files")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--silver", required=True)
    sp.add_argument("--format", choices=["text", "lines"], default="text")
    for name in ("predict", "correction"):
        sp = eval_sub.add_parser(name)
        sp.add_argument("--entity-embeddings", required=True)
        sp.add_argument("--query-embeddings", required=True)
        sp.add_argument("--threshold", type=float, default=0.4)
        sp.add_argument("--format", choices=["text", "lines"], default="text")
        if name == "predict":
            sp.add_argument("--query", required=True)
        else:
            sp.add_argument("--judgments", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="exact statistical tests")
    stats_sub = p.add_subparsers(dest="stats_command", required=True)
    sp = stats_sub.add_parser("binomial")
    sp.add_argument("--successes", type=int, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--p0", type=float, default=0.5)
    sp.add_argument("--two-sided", action="store_true")
    sp.add_argument("--format", choices=["text", "lines"], default="text")
    for name in ("fisher", "chi2"):
        sp = stats_sub.add_parser(name)
        sp.add_argument("--table", type=int, nargs=4, required=True,
                        metavar=("A", "B", "C", "D"))
        sp.add_argument("--format", choices=["text", "lines"], default="text")
        if name == "chi2":
            sp.add_argument("--continuity", action="store_true")
    sp = stats_sub.add_parser("kappa")
    sp.add_argument("--a", required=True, help="comma-separated labels or @file")
    sp.add_argument("--b", required=True, help="comma-separated labels or @file")
    sp.add_argument("--format", choices=["text", "lines"], default="text")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the discovery HTTP service")
    _add_taxonomy_args(p)
    _add_filter_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--listing-threshold", type=int, default=10)
    p.add_argument("--session-ttl", type=float, default=1800.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except QrefineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: malformed record file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
