"""Refinement-set scoring and minimum-cost subset selection.

The cost of a size-k refinement set is::

    cost = sum_j |c_j - 1|  -  min_i n_i

where, over the entities answering the query, ``c_j`` counts how many chosen
refinements cover entity ``j`` and ``n_i`` counts the answers of refinement
``i``. The first term punishes both uncovered and multiply-covered entities;
the second rewards balanced, well-populated refinements. The unique global
minimum is ``-n/k``, reached exactly when the chosen answer sets partition the
query's answers into k equal parts.

Selection is exact: either full enumeration of all size-k subsets
(:func:`solve_exhaustive`) or best-first branch and bound over the 0/1
selection variables of the linearized model (:func:`solve`), with a wall-time
budget and a greedy incumbent as fallback.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass

from .errors import ContractViolationError, InstanceSizeError, PreconditionError
from .filters import CandidatePool
from .taxonomy import EntitySet, Taxonomy

STATUS_OPTIMAL = "optimal"
STATUS_BUDGET_EXCEEDED = "budget-exceeded"
STATUS_INFEASIBLE = "infeasible"

DEFAULT_BUDGET = 5.0
DEFAULT_ENUMERATION_CAP = 20_000_000


@dataclass(frozen=True)
class RefinementSet:
    """An ordered selection of refinement type ids for one query.

    Members are distinct and canonically ordered ascending by type name.
    """

    query: int
    members: tuple[int, ...]

    @classmethod
    def canonical(cls, taxonomy: Taxonomy, query: int | str, members) -> "RefinementSet":
        qid = taxonomy.resolve(query)
        ids = [taxonomy.resolve(m) for m in members]
        if len(set(ids)) != len(ids):
            raise PreconditionError("refinement-set members must be distinct")
        if not ids:
            raise PreconditionError("refinement set must have at least one member")
        ids.sort(key=taxonomy.type_name)
        return cls(query=qid, members=tuple(ids))

    def member_names(self, taxonomy: Taxonomy) -> tuple[str, ...]:
        return tuple(taxonomy.type_name(m) for m in self.members)


@dataclass(frozen=True)
class CostBreakdown:
    """Everything that goes into one cost evaluation.

    ``coverage_counts`` maps every entity in the query's answers to the number
    of members covering it; ``member_answers`` realizes the membership matrix
    as per-member entity sets restricted to the query's answers.
    """

    n: int
    k: int
    coverage_counts: dict[int, int]
    per_refinement_counts: tuple[int, ...]
    member_answers: tuple[EntitySet, ...]
    coverage_penalty: int
    min_coverage: int
    total: int
    outside_answer_count: int = 0


def score(taxonomy: Taxonomy, rs: RefinementSet) -> CostBreakdown:
    """Evaluate the partition cost of ``rs`` against its query's answers.

    Members must be strict taxonomy descendants of the query. Member answers
    are defensively intersected with the query's answers; anything outside is
    excluded from the counts and reported in ``outside_answer_count``.
    """
    for member in rs.members:
        if not taxonomy.is_strict_descendant(member, rs.query):
            raise ContractViolationError(
                f"{taxonomy.type_name(member)!r} is not a subtype of "
                f"{taxonomy.type_name(rs.query)!r}"
            )
    aq = taxonomy.answers(rs.query)
    outside = 0
    restricted: list[EntitySet] = []
    for member in rs.members:
        full = taxonomy.answers(member)
        inside = full & aq
        outside += full.cardinality - inside.cardinality
        restricted.append(inside)
    coverage = {
        eid: sum(1 for m in restricted if eid in m)
        for eid in aq
    }
    t1 = sum(abs(c - 1) for c in coverage.values())
    counts = tuple(m.cardinality for m in restricted)
    t2 = min(counts)
    return CostBreakdown(
        n=aq.cardinality,
        k=len(rs.members),
        coverage_counts=coverage,
        per_refinement_counts=counts,
        member_answers=tuple(restricted),
        coverage_penalty=t1,
        min_coverage=t2,
        total=t1 - t2,
        outside_answer_count=outside,
    )


@dataclass(frozen=True)
class IlpModel:
    """Linearized selection model for one query.

    Binary ``x_i`` picks candidate ``i``; per-entity slack ``y_j`` obeys
    ``y_j >= c_j - 1`` and ``y_j >= 1 - c_j``; the min-coverage proxy ``xi``
    obeys ``xi <= (1 - x_i) * n_max + x_i * n_i`` for every candidate, and
    exactly k candidates are selected. Minimizing ``sum_j y_j - xi`` drives
    each y_j to |c_j - 1| and xi to the smallest selected n_i, so the optimum
    matches the direct cost.
    """

    query: int
    candidates: tuple[int, ...]
    masks: tuple[int, ...]
    counts: tuple[int, ...]
    universe_mask: int
    n: int
    k: int
    n_max: int

    def coverage_counts(self, selected: tuple[int, ...]) -> dict[int, int]:
        counts: dict[int, int] = {}
        bits = self.universe_mask
        while bits:
            low = bits & -bits
            eid = low.bit_length() - 1
            counts[eid] = sum((self.masks[i] >> eid) & 1 for i in selected)
            bits ^= low
        return counts

    def optimal_slack_objective(self, selected: tuple[int, ...]) -> int:
        """Objective value at the tightest feasible (y, xi) for this selection."""
        if len(selected) != self.k:
            raise PreconditionError(f"selection must have exactly {self.k} members")
        y_sum = sum(abs(c - 1) for c in self.coverage_counts(selected).values())
        xi = min(self.counts[i] for i in selected)
        return y_sum - xi

    def is_feasible(self, selected: tuple[int, ...], y: dict[int, int], xi: int) -> bool:
        if len(set(selected)) != self.k:
            return False
        coverage = self.coverage_counts(selected)
        for eid, c in coverage.items():
            if y.get(eid, 0) < c - 1 or y.get(eid, 0) < 1 - c:
                return False
        for i in range(len(self.candidates)):
            limit = self.counts[i] if i in selected else self.n_max
            if xi > limit:
                return False
        return True


def build_model(taxonomy: Taxonomy, q: int | str, pool: CandidatePool, k: int) -> IlpModel:
    """Assemble the selection model over the pool's kept candidates."""
    qid = taxonomy.resolve(q)
    aq = taxonomy.answers(qid)
    masks = tuple(taxonomy.answers(c).bits & aq.bits for c in pool.kept)
    counts = tuple(m.bit_count() for m in masks)
    return IlpModel(
        query=qid,
        candidates=tuple(pool.kept),
        masks=masks,
        counts=counts,
        universe_mask=aq.bits,
        n=aq.cardinality,
        k=k,
        n_max=max(counts, default=0),
    )


@dataclass
class SolveResult:
    best: RefinementSet | None
    cost: CostBreakdown | None
    status: str
    nodes_explored: int
    elapsed: float

    def to_record(self, taxonomy: Taxonomy) -> dict:
        record: dict = {"query": taxonomy.type_name(self.best.query) if self.best else None}
        record["members"] = list(self.best.member_names(taxonomy)) if self.best else []
        record["t1"] = self.cost.coverage_penalty if self.cost else None
        record["t2"] = self.cost.min_coverage if self.cost else None
        record["total"] = self.cost.total if self.cost else None
        record["status"] = self.status
        record["nodes"] = self.nodes_explored
        record["millis"] = round(self.elapsed * 1000.0, 3)
        return record


def _subset_cost(masks: list[int], counts: list[int], n: int, chosen: tuple[int, ...]) -> int:
    # Identity used throughout: sum_j |c_j - 1| = sum_i n_i + n - 2 * |union|,
    # because covered entities contribute c_j - 1 and uncovered contribute 1.
    union = 0
    total_n = 0
    min_n = None
    for i in chosen:
        union |= masks[i]
        total_n += counts[i]
        min_n = counts[i] if min_n is None or counts[i] < min_n else min_n
    t1 = total_n + n - 2 * union.bit_count()
    return t1 - (min_n or 0)


def _finish(
    taxonomy: Taxonomy,
    q: int,
    members: tuple[int, ...],
    status: str,
    nodes: int,
    started: float,
) -> SolveResult:
    rs = RefinementSet.canonical(taxonomy, q, members)
    return SolveResult(
        best=rs,
        cost=score(taxonomy, rs),
        status=status,
        nodes_explored=nodes,
        elapsed=time.monotonic() - started,
    )


def solve_exhaustive(
    taxonomy: Taxonomy,
    q: int | str,
    pool: CandidatePool,
    k: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> SolveResult:
    """Enumerate every size-k subset of the kept candidates; exact reference.

    Ties are broken toward the lexicographically smallest canonical
    member-name tuple. Refuses instances whose subset count exceeds ``cap``.
    """
    started = time.monotonic()
    qid = taxonomy.resolve(q)
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if len(pool.kept) < k:
        return SolveResult(None, None, STATUS_INFEASIBLE, 0, time.monotonic() - started)
    subsets = math.comb(len(pool.kept), k)
    if subsets > cap:
        raise InstanceSizeError(
            f"C({len(pool.kept)},{k}) = {subsets} subsets exceeds cap {cap}"
        )
    aq = taxonomy.answers(qid)
    # Name-ascending candidate order makes index-lexicographic enumeration
    # coincide with name-lexicographic tie-breaking.
    cands = sorted(pool.kept, key=taxonomy.type_name)
    masks = [taxonomy.answers(c).bits & aq.bits for c in cands]
    counts = [m.bit_count() for m in masks]
    best_cost: int | None = None
    best_members: tuple[int, ...] = ()
    nodes = 0
    for combo in itertools.combinations(range(len(cands)), k):
        nodes += 1
        cost = _subset_cost(masks, counts, aq.cardinality, combo)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_members = combo
    members = tuple(cands[i] for i in best_members)
    return _finish(taxonomy, qid, members, STATUS_OPTIMAL, nodes, started)


def _greedy_members(model: IlpModel, names: list[str]) -> tuple[int, ...]:
    """Greedy incumbent: repeatedly add the candidate with the best full-cost
    evaluation of the enlarged partial set; name-ascending tie-break."""
    chosen: list[int] = []
    union = 0
    total_n = 0
    min_n: int | None = None
    for _ in range(model.k):
        best_idx = None
        best_key: tuple[int, str] | None = None
        for i in range(len(model.candidates)):
            if i in chosen:
                continue
            cand_union = union | model.masks[i]
            cand_total = total_n + model.counts[i]
            cand_min = model.counts[i] if min_n is None else min(min_n, model.counts[i])
            cost = cand_total + model.n - 2 * cand_union.bit_count() - cand_min
            key = (cost, names[i])
            if best_key is None or key < best_key:
                best_key = key
                best_idx = i
        assert best_idx is not None
        chosen.append(best_idx)
        union |= model.masks[best_idx]
        total_n += model.counts[best_idx]
        min_n = model.counts[best_idx] if min_n is None else min(min_n, model.counts[best_idx])
    return tuple(chosen)


def solve(
    taxonomy: Taxonomy,
    q: int | str,
    pool: CandidatePool,
    k: int,
    budget: float = DEFAULT_BUDGET,
) -> SolveResult:
    """Best-first branch and bound over the selection variables of the model.

    Returns a provably minimum-cost refinement set (status ``optimal``) when
    the search tree is exhausted within ``budget`` seconds, otherwise the best
    incumbent found so far (status ``budget-exceeded``). A non-positive budget
    skips the search and returns the greedy incumbent.
    """
    started = time.monotonic()
    qid = taxonomy.resolve(q)
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if len(pool.kept) < k:
        return SolveResult(None, None, STATUS_INFEASIBLE, 0, time.monotonic() - started)

    # Candidate preorder: descending answer count so strong incumbents appear
    # early; name ascending on ties for determinism.
    order = sorted(
        range(len(pool.kept)),
        key=lambda i: (-taxonomy.answers(pool.kept[i]).cardinality, taxonomy.type_name(pool.kept[i])),
    )
    ordered_pool = CandidatePool(
        query=pool.query,
        all=pool.all,
        kept=tuple(pool.kept[i] for i in order),
        removals=pool.removals,
    )
    model = build_model(taxonomy, qid, ordered_pool, k)
    names = [taxonomy.type_name(c) for c in model.candidates]
    big = len(model.candidates)
    n = model.n

    def names_key(sel: tuple[int, ...]) -> tuple[str, ...]:
        return tuple(sorted(names[i] for i in sel))

    def complete_cost(sel: tuple[int, ...], union: int, total_n: int, min_n: int) -> int:
        return total_n + n - 2 * union.bit_count() - min_n

    inc_members = _greedy_members(model, names)
    inc_union = 0
    inc_total = 0
    inc_min = min(model.counts[i] for i in inc_members)
    for i in inc_members:
        inc_union |= model.masks[i]
        inc_total += model.counts[i]
    inc_cost = complete_cost(inc_members, inc_union, inc_total, inc_min)
    inc_names = names_key(inc_members)
    nodes = 1

    if budget <= 0:
        members = tuple(model.candidates[i] for i in inc_members)
        return _finish(taxonomy, qid, members, STATUS_BUDGET_EXCEEDED, nodes, started)

    # Lower bound at a partial selection S deciding candidates from index p on:
    #
    #   lb_t1 = sum_{i in S} n_i - |union(S)|
    #         = sum_j max(c_j(S) - 1, 0)
    #
    # Any completion T of S has c_j(T) >= c_j(S), so |c_j(T) - 1| >= c_j(S) - 1
    # for covered entities, while every still-uncovered entity is optimistically
    # assumed to end at c_j = 1 (contribution 0). Hence t1(T) >= lb_t1.
    #
    #   ub_t2 = min( min_{i in S} n_i , counts[p] )
    #
    # t2(T) is the minimum n_i over T; it cannot exceed the selected minimum,
    # and if members are still missing it cannot exceed the largest remaining
    # candidate count, which is counts[p] because candidates are sorted by
    # descending n_i. Hence t2(T) <= ub_t2 and
    #
    #   cost(T) = t1(T) - t2(T) >= lb_t1 - ub_t2,
    #
    # so the bound is admissible; exercised by the oracle-equivalence suite.
    def lower_bound(p: int, picked: int, union: int, total_n: int, min_n: int | None) -> int:
        lb_t1 = total_n - union.bit_count()
        remaining_max = model.counts[p] if p < big else 0
        if min_n is None:
            ub_t2 = remaining_max
        elif picked < k:
            ub_t2 = min(min_n, remaining_max)
        else:
            ub_t2 = min_n
        return lb_t1 - ub_t2

    counter = itertools.count()
    heap: list[tuple[int, int, tuple[int, ...], int, int, int, int | None]] = []
    root_lb = lower_bound(0, 0, 0, 0, None)
    heapq.heappush(heap, (root_lb, next(counter), (), 0, 0, 0, None))
    status = STATUS_OPTIMAL

    while heap:
        if time.monotonic() - started > budget:
            status = STATUS_BUDGET_EXCEEDED
            break
        lb, _, sel, p, union, total_n, min_n = heapq.heappop(heap)
        if lb > inc_cost:
            break  # best-first: every remaining node is at least as bad
        nodes += 1
        needed = k - len(sel)
        if p >= big or big - p < needed:
            continue
        # Branch 1: include candidate p.
        new_sel = sel + (p,)
        new_union = union | model.masks[p]
        new_total = total_n + model.counts[p]
        new_min = model.counts[p] if min_n is None else min(min_n, model.counts[p])
        if needed == 1:
            cost = complete_cost(new_sel, new_union, new_total, new_min)
            if cost < inc_cost or (cost == inc_cost and names_key(new_sel) < inc_names):
                inc_cost = cost
                inc_members = new_sel
                inc_names = names_key(new_sel)
        else:
            child_lb = lower_bound(p + 1, len(new_sel), new_union, new_total, new_min)
            if child_lb <= inc_cost and big - (p + 1) >= needed - 1:
                heapq.heappush(
                    heap, (child_lb, next(counter), new_sel, p + 1, new_union, new_total, new_min)
                )
        # Branch 2: exclude candidate p.
        if big - (p + 1) >= needed:
            child_lb = lower_bound(p + 1, len(sel), union, total_n, min_n)
            if child_lb <= inc_cost:
                heapq.heappush(
                    heap, (child_lb, next(counter), sel, p + 1, union, total_n, min_n)
                )

    members = tuple(model.candidates[i] for i in inc_members)
    return _finish(taxonomy, qid, members, status, nodes, started)
