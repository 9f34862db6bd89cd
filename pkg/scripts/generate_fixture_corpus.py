#!/usr/bin/env python3
"""Write synthetic taxonomy corpora as TSV files.

Two corpora are available:

* ``balanced``: a perfect b-ary type tree with one entity per leaf type,
  handy for exercising the drill-down service and the depth bound.
* ``demo``: a mixed corpus of partitionable queries with distractor
  subtypes plus date/location/gender decoys for the filters.
"""

from __future__ import annotations

import argparse
import random
import string
from pathlib import Path


def balanced(branching: int, depth: int):
    letters = string.ascii_lowercase[:branching]
    edges, instances = [], []

    def grow(path: str):
        name = f"cat-{path}" if path else "cat-root"
        if len(path) == depth:
            instances.append((f"ent-{path}", name))
            return
        for letter in letters:
            child = f"cat-{path + letter}"
            edges.append((child, name))
            grow(path + letter)

    grow("")
    return edges, instances


DECOY_TEMPLATES = ["1990s {q}", "American {q}", "19th century {q}", "female {q}"]
PART_WORDS = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]


def demo(queries: int, seed: int):
    rng = random.Random(seed)
    edges, instances = [], []
    for qi in range(queries):
        query = f"topic {qi:02d}"
        n = rng.choice([20, 30, 40, 60])
        entities = [f"{query} item {i:03d}" for i in range(n)]
        instances.extend((e, query) for e in entities)
        parts = rng.choice([5, 6])
        size = n // parts
        for pi in range(parts):
            sub = f"{query} {PART_WORDS[pi]}"
            edges.append((sub, query))
            members = entities[pi * size:(pi + 1) * size]
            instances.extend((m, sub) for m in members)
        for template in rng.sample(DECOY_TEMPLATES, rng.randint(1, 3)):
            sub = template.format(q=query)
            edges.append((sub, query))
            members = rng.sample(entities, rng.randint(2, max(3, n // 4)))
            instances.extend((m, sub) for m in members)
        overlap = f"{query} medley"
        edges.append((overlap, query))
        instances.extend((m, overlap) for m in entities[: n // 2])
    return edges, instances


def write(out_dir: Path, edges, instances) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "edges.tsv", "w", encoding="utf-8") as handle:
        handle.writelines(f"{c}\t{p}\n" for c, p in edges)
    with open(out_dir / "instances.tsv", "w", encoding="utf-8") as handle:
        handle.writelines(f"{e}\t{t}\n" for e, t in instances)
    print(f"wrote {len(edges)} edges, {len(instances)} instance pairs to {out_dir}/")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("corpus", choices=["balanced", "demo"])
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--branching", type=int, default=5)
    parser.add_argument("--depth", type=int, default=3)
    parser.add_argument("--queries", type=int, default=25)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if args.corpus == "balanced":
        edges, instances = balanced(args.branching, args.depth)
    else:
        edges, instances = demo(args.queries, args.seed)
    write(args.out, edges, instances)


if __name__ == "__main__":
    main()
