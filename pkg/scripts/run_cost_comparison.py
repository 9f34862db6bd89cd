#!/usr/bin/env python3
"""Cost-comparison experiment: exact selection vs seeded random draws.

Builds the ``qresp`` and ``random-filtered`` datasets over a corpus (a
generated demo corpus by default), pairs the per-query costs, and prints the
comparison summary plus a scatter of the pairs. Points above the diagonal are
search errors: they can only appear when the solver's time budget truncates
the search, so with a generous budget the table shows none.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from generate_fixture_corpus import demo, write  # noqa: E402

from qrefine.pipeline import (  # noqa: E402
    METHOD_QRESP,
    METHOD_RANDOM_FILTERED,
    PipelineConfig,
    build_dataset,
    cost_comparison_report,
)
from qrefine.taxonomy import load_taxonomy  # noqa: E402


def load_or_generate(args):
    if args.corpus:
        base = Path(args.corpus)
        with open(base / "edges.tsv", encoding="utf-8") as edges, \
                open(base / "instances.tsv", encoding="utf-8") as instances:
            return load_taxonomy(edges, instances)
    edges, instances = demo(args.queries, args.seed)
    edges_text = "".join(f"{c}\t{p}\n" for c, p in edges)
    inst_text = "".join(f"{e}\t{t}\n" for e, t in instances)
    return load_taxonomy(io.StringIO(edges_text), io.StringIO(inst_text))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", help="directory with edges.tsv/instances.tsv; generated if omitted")
    parser.add_argument("--queries", type=int, default=25, help="demo corpus size when generating")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=float, default=5.0, help="solver budget per query (seconds)")
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--out", help="optional JSONL path for the paired report")
    args = parser.parse_args()

    tax = load_or_generate(args)
    base = dict(k=args.k, min_answers_train=10, seed=args.seed, solver_budget=args.budget)
    solved = list(build_dataset(tax, PipelineConfig(method=METHOD_QRESP, **base), dev=[]))
    random_f = list(
        build_dataset(tax, PipelineConfig(method=METHOD_RANDOM_FILTERED, **base), dev=[])
    )
    report = cost_comparison_report(solved, random_f, taxonomy=tax)

    print(f"queries: {len(report.pairs)}  (budget {args.budget}s, k={args.k}, seed {args.seed})")
    print(f"solved < random: {report.lower}   equal: {report.equal}   solved > random: {report.higher}")
    print(f"least-squares slope (solved on random): {report.slope:.3f}")
    if report.search_errors:
        print(f"search errors (budget truncations): {list(report.search_errors)}")
    print()
    print(f"{'query':<24} {'solved':>8} {'random':>8}")
    for query, cost_a, cost_b in report.pairs:
        marker = "  <-- search error" if cost_a > cost_b else ""
        print(f"{query:<24} {cost_a:>8} {cost_b:>8}{marker}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report.to_line() + "\n")
        print(f"\nwrote report to {args.out}")


if __name__ == "__main__":
    main()
