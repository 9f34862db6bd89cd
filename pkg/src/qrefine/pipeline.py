"""Dataset construction: query selection, refinement-set assignment per
method, and the paired cost-comparison report.

Three methods are supported: ``qresp`` runs the exact solver over the
filtered candidate pool; ``random`` draws k subtypes from the unfiltered
pool; ``random-filtered`` draws k from the filtered pool. Draws use seeded
per-query streams so output is byte-identical across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

from .errors import AlignmentError, ConfigurationError, PreconditionError
from .filters import FilterRule, Gazetteer, apply_filters, candidate_pool, default_gazetteer, default_rules
from .optimizer import RefinementSet, score, solve
from .rng import sample_without_replacement, stream_for
from .taxonomy import Taxonomy

METHOD_QRESP = "qresp"
METHOD_RANDOM = "random"
METHOD_RANDOM_FILTERED = "random-filtered"
METHODS = (METHOD_QRESP, METHOD_RANDOM, METHOD_RANDOM_FILTERED)


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 5
    min_answers_train: int = 50
    min_subtypes_dev: int = 15
    min_answers_per_dev_subtype: int = 200
    seed: int = 0
    solver_budget: float = 5.0
    method: str = METHOD_QRESP
    dev_sample_size: int = 200
    transitive: bool = False

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigurationError(f"k must be at least 2, got {self.k}")
        for name in ("min_answers_train", "min_subtypes_dev", "min_answers_per_dev_subtype"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.dev_sample_size < 0:
            raise ConfigurationError("dev_sample_size must be non-negative")


@dataclass(frozen=True)
class DatasetRecord:
    """One emitted query / refinement-set pair.

    ``cost`` and ``status`` are present only for the qresp method; random
    draws have neither a solver status nor a recorded cost.
    """

    query: str
    method: str
    refinements: tuple[str, ...]
    candidates_all: int
    candidates_kept: int
    seed: int
    cost: int | None = None
    status: str | None = None

    def to_json(self) -> str:
        payload: dict = {
            "query": self.query,
            "method": self.method,
            "refinements": list(self.refinements),
        }
        if self.cost is not None:
            payload["cost"] = self.cost
        if self.status is not None:
            payload["status"] = self.status
        payload["candidates_all"] = self.candidates_all
        payload["candidates_kept"] = self.candidates_kept
        payload["seed"] = self.seed
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        data = json.loads(line)
        return cls(
            query=data["query"],
            method=data["method"],
            refinements=tuple(data["refinements"]),
            candidates_all=data["candidates_all"],
            candidates_kept=data["candidates_kept"],
            seed=data["seed"],
            cost=data.get("cost"),
            status=data.get("status"),
        )


@dataclass(frozen=True)
class DevSelection:
    queries: tuple[int, ...]
    qualifying: int
    requested: int
    warning: str | None = None


def _pools(
    taxonomy: Taxonomy,
    q: int,
    cfg: PipelineConfig,
    rules: tuple[FilterRule, ...],
    gazetteer: Gazetteer,
):
    pool = candidate_pool(taxonomy, q, transitive=cfg.transitive)
    filtered = apply_filters(taxonomy, pool, rules, gazetteer)
    return pool, filtered


def select_dev_queries(taxonomy: Taxonomy, cfg: PipelineConfig) -> DevSelection:
    """Seeded uniform sample of well-populated queries for development use.

    A type qualifies when it has at least ``min_subtypes_dev`` subtype
    candidates and every one of them has at least
    ``min_answers_per_dev_subtype`` answers.
    """
    qualifying: list[int] = []
    for tid in sorted(range(taxonomy.num_types), key=taxonomy.type_name):
        subs = taxonomy.subtypes(tid, transitive=cfg.transitive)
        if len(subs) < cfg.min_subtypes_dev:
            continue
        if all(
            taxonomy.answers(s).cardinality >= cfg.min_answers_per_dev_subtype for s in subs
        ):
            qualifying.append(tid)
    if len(qualifying) <= cfg.dev_sample_size:
        warning = None
        if len(qualifying) < cfg.dev_sample_size:
            warning = (
                f"only {len(qualifying)} qualifying types for a requested "
                f"dev sample of {cfg.dev_sample_size}"
            )
        return DevSelection(tuple(qualifying), len(qualifying), cfg.dev_sample_size, warning)
    gen = stream_for(cfg.seed, "dev-selection")
    sample = sample_without_replacement(qualifying, cfg.dev_sample_size, gen)
    return DevSelection(tuple(sample), len(qualifying), cfg.dev_sample_size)


def select_training_queries(
    taxonomy: Taxonomy,
    cfg: PipelineConfig,
    dev: Iterable[int],
    rules: tuple[FilterRule, ...] | None = None,
    gazetteer: Gazetteer | None = None,
) -> list[int]:
    """Training-eligible queries in ascending name order.

    Requires the answer-count floor and at least k candidates in the pool the
    configured method draws from (filtered for qresp/random-filtered,
    unfiltered for random). Dev queries and all their descendants are
    excluded.
    """
    rules = rules if rules is not None else default_rules()
    gazetteer = gazetteer if gazetteer is not None else default_gazetteer()
    excluded: set[int] = set()
    for dq in dev:
        excluded.add(dq)
        excluded.update(taxonomy.subtypes(dq, transitive=True))
    selected: list[int] = []
    for tid in sorted(range(taxonomy.num_types), key=taxonomy.type_name):
        if tid in excluded:
            continue
        if taxonomy.answers(tid).cardinality < cfg.min_answers_train:
            continue
        pool, filtered = _pools(taxonomy, tid, cfg, rules, gazetteer)
        eligible_pool = pool.all if cfg.method == METHOD_RANDOM else filtered.kept
        if len(eligible_pool) >= cfg.k:
            selected.append(tid)
    return selected


def build_dataset(
    taxonomy: Taxonomy,
    cfg: PipelineConfig,
    rules: tuple[FilterRule, ...] | None = None,
    gazetteer: Gazetteer | None = None,
    dev: Iterable[int] | None = None,
    queries: Iterable[int] | None = None,
) -> Iterator[DatasetRecord]:
    """Emit one record per eligible query, in ascending query-name order.

    ``queries`` overrides eligibility selection (used by the per-query HTTP
    endpoint and tests); ``dev`` overrides dev-set computation.
    """
    rules = rules if rules is not None else default_rules()
    gazetteer = gazetteer if gazetteer is not None else default_gazetteer()
    if queries is None:
        if dev is None:
            dev = select_dev_queries(taxonomy, cfg).queries
        query_list = select_training_queries(taxonomy, cfg, dev, rules, gazetteer)
    else:
        query_list = [taxonomy.resolve(q) for q in queries]
    for tid in query_list:
        pool, filtered = _pools(taxonomy, tid, cfg, rules, gazetteer)
        name = taxonomy.type_name(tid)
        cost: int | None = None
        status: str | None = None
        if cfg.method == METHOD_QRESP:
            result = solve(taxonomy, tid, filtered, cfg.k, budget=cfg.solver_budget)
            if result.best is None:
                raise PreconditionError(
                    f"query {name!r} has fewer than k={cfg.k} filtered candidates"
                )
            members = result.best.member_names(taxonomy)
            cost = result.cost.total if result.cost else None
            status = result.status
        else:
            source = pool.all if cfg.method == METHOD_RANDOM else filtered.kept
            if len(source) < cfg.k:
                raise PreconditionError(
                    f"query {name!r} has fewer than k={cfg.k} candidates to draw from"
                )
            gen = stream_for(cfg.seed, name)
            draw = sample_without_replacement(source, cfg.k, gen)
            members = tuple(sorted(taxonomy.type_name(t) for t in draw))
        yield DatasetRecord(
            query=name,
            method=cfg.method,
            refinements=members,
            candidates_all=len(pool.all),
            candidates_kept=len(filtered.kept),
            seed=cfg.seed,
            cost=cost,
            status=status,
        )


def write_records(records: Iterable[DatasetRecord], out: IO[str]) -> int:
    count = 0
    for record in records:
        out.write(record.to_json() + "\n")
        count += 1
    return count


def read_records(stream: Iterable[str]) -> list[DatasetRecord]:
    records = []
    for raw in stream:
        line = raw.strip()
        if line:
            records.append(DatasetRecord.from_json(line))
    return records


@dataclass(frozen=True)
class CostComparison:
    """Fig.-style paired comparison of per-query costs between two runs.

    ``pairs`` holds (query, cost_a, cost_b); queries where the first run's
    cost exceeds the second's are flagged as search errors (the exact solver
    can only lose to a random draw when its time budget truncated the search).
    """

    pairs: tuple[tuple[str, int, int], ...]
    lower: int
    equal: int
    higher: int
    slope: float
    search_errors: tuple[str, ...]
    statuses_a: dict[str, str | None] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "lower": self.lower,
            "equal": self.equal,
            "higher": self.higher,
            "slope": self.slope,
            "search_errors": list(self.search_errors),
        }

    def to_line(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


def _record_cost(taxonomy: Taxonomy | None, record: DatasetRecord) -> int:
    if record.cost is not None:
        return record.cost
    if taxonomy is None:
        raise ConfigurationError(
            f"record for {record.query!r} has no cost and no taxonomy was given to rescore it"
        )
    rs = RefinementSet.canonical(taxonomy, record.query, list(record.refinements))
    return score(taxonomy, rs).total


def _least_squares_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var = sum((x - mean_x) ** 2 for x in xs)
    if var == 0.0:
        return float("nan")
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return cov / var


def cost_comparison_report(
    records_a: Iterable[DatasetRecord],
    records_b: Iterable[DatasetRecord],
    taxonomy: Taxonomy | None = None,
) -> CostComparison:
    """Pair the two runs by query and compare their refinement-set costs.

    Records without a stored cost (random methods) are rescored through the
    taxonomy. Both runs must cover exactly the same query set.
    """
    by_query_a = {r.query: r for r in records_a}
    by_query_b = {r.query: r for r in records_b}
    only_a = sorted(set(by_query_a) - set(by_query_b))
    only_b = sorted(set(by_query_b) - set(by_query_a))
    if only_a or only_b:
        raise AlignmentError(only_a, only_b)
    pairs: list[tuple[str, int, int]] = []
    statuses: dict[str, str | None] = {}
    for query in sorted(by_query_a):
        cost_a = _record_cost(taxonomy, by_query_a[query])
        cost_b = _record_cost(taxonomy, by_query_b[query])
        pairs.append((query, cost_a, cost_b))
        statuses[query] = by_query_a[query].status
    lower = sum(1 for _, a, b in pairs if a < b)
    equal = sum(1 for _, a, b in pairs if a == b)
    higher = sum(1 for _, a, b in pairs if a > b)
    slope = _least_squares_slope([b for _, _, b in pairs], [a for _, a, _ in pairs])
    errors = tuple(q for q, a, b in pairs if a > b)
    return CostComparison(
        pairs=tuple(pairs),
        lower=lower,
        equal=equal,
        higher=higher,
        slope=slope,
        search_errors=errors,
        statuses_a=statuses,
    )
