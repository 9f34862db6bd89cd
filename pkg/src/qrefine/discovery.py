"""Interactive entity discovery: repeated refinement choices drill down a
k-ary tree over the answer space until a target entity is isolated.

Each session node offers the minimum-cost refinement set for the node's
filtered candidate pool. With ideal partitions at every node, any entity among
n answers is reachable in at most ceil(log_k n) drills.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterator

from .errors import InvalidChoiceError, PreconditionError, StateError, UnknownTypeError
from .filters import (
    CandidatePool,
    FilterRule,
    Gazetteer,
    apply_filters,
    candidate_pool,
    default_gazetteer,
    default_rules,
)
from .optimizer import solve
from .taxonomy import EntitySet, Taxonomy

OUTCOME_ISOLATED = "isolated"
OUTCOME_LISTED = "listed"
OUTCOME_MISS = "miss"


@dataclass(frozen=True)
class DiscoveryConfig:
    """Per-session knobs; defaults favor interactive latency."""

    k: int = 5
    listing_threshold: int = 10
    solver_budget: float = 1.0
    transitive: bool = False
    filters_enabled: bool = True
    rules: tuple[FilterRule, ...] | None = None
    gazetteer: Gazetteer | None = None

    def resolved_rules(self) -> tuple[FilterRule, ...]:
        return self.rules if self.rules is not None else default_rules()

    def resolved_gazetteer(self) -> Gazetteer:
        return self.gazetteer if self.gazetteer is not None else default_gazetteer()


@dataclass(frozen=True)
class NodeOffer:
    """What one tree node presents: offered refinements or a terminal listing.

    A node is terminal when its answer count is at or below the listing
    threshold or no filtered candidates remain. With at least one but fewer
    than k candidates, all of them are offered (degraded, no solve needed).
    """

    offered: tuple[int, ...]
    solver_status: str | None
    terminal: bool


@dataclass(frozen=True)
class Step:
    chosen: int
    offered: tuple[int, ...]


@dataclass
class DiscoverySession:
    """A live drill-down path; mutated by one actor at a time."""

    session_id: str
    root: int
    k: int
    config: DiscoveryConfig
    taxonomy: Taxonomy
    current: int
    path: list[Step] = field(default_factory=list)
    _offers: dict[int, NodeOffer] = field(default_factory=dict)

    @property
    def current_answers(self) -> EntitySet:
        return self.taxonomy.answers(self.current)

    @property
    def terminal(self) -> bool:
        return self._quick_terminal(self.current)

    def _quick_terminal(self, node: int) -> bool:
        if self.taxonomy.answers(node).cardinality <= self.config.listing_threshold:
            return True
        return len(self._node_pool(node).kept) == 0

    def _node_pool(self, node: int) -> CandidatePool:
        pool = candidate_pool(self.taxonomy, node, transitive=self.config.transitive)
        if self.config.filters_enabled:
            pool = apply_filters(
                self.taxonomy, pool, self.config.resolved_rules(), self.config.resolved_gazetteer()
            )
        return pool

    def offer(self) -> NodeOffer:
        """Offered refinements at the current node, solved lazily and cached."""
        node = self.current
        cached = self._offers.get(node)
        if cached is not None:
            return cached
        if self._quick_terminal(node):
            offer = NodeOffer(offered=(), solver_status=None, terminal=True)
        else:
            pool = self._node_pool(node)
            if len(pool.kept) < self.k:
                offer = NodeOffer(offered=pool.kept, solver_status=None, terminal=False)
            else:
                result = solve(self.taxonomy, node, pool, self.k, budget=self.config.solver_budget)
                assert result.best is not None
                offer = NodeOffer(
                    offered=result.best.members,
                    solver_status=result.status,
                    terminal=False,
                )
        self._offers[node] = offer
        return offer

    def transcript_lines(self) -> Iterator[str]:
        for step_no, step in enumerate(self.path, start=1):
            yield json.dumps(
                {
                    "step": step_no,
                    "offered": [self.taxonomy.type_name(t) for t in step.offered],
                    "chosen": self.taxonomy.type_name(step.chosen),
                    "answer_count": self.taxonomy.answers(step.chosen).cardinality,
                },
                ensure_ascii=False,
            )


def start_session(
    taxonomy: Taxonomy,
    q: int | str,
    k: int = 5,
    config: DiscoveryConfig | None = None,
    session_id: str = "local",
) -> DiscoverySession:
    """Open a session rooted at ``q``; refinements are computed on demand."""
    qid = taxonomy.resolve(q)
    if not 0 <= qid < taxonomy.num_types:
        raise UnknownTypeError(qid)
    cfg = config or DiscoveryConfig()
    if cfg.k != k:
        cfg = replace(cfg, k=k)
    return DiscoverySession(
        session_id=session_id,
        root=qid,
        k=k,
        config=cfg,
        taxonomy=taxonomy,
        current=qid,
    )


def drill(session: DiscoverySession, choice: int | str) -> DiscoverySession:
    """Descend into ``choice``; it must be among the currently offered set."""
    if session.terminal:
        raise StateError("session is terminal; nothing to drill into")
    cid = session.taxonomy.resolve(choice)
    offer = session.offer()
    if cid not in offer.offered:
        raise InvalidChoiceError(
            f"{session.taxonomy.type_name(cid)!r} is not among the offered refinements"
        )
    session.path.append(Step(chosen=cid, offered=offer.offered))
    session.current = cid
    return session


def back(session: DiscoverySession) -> DiscoverySession:
    """Pop one path step; cached offers make breadcrumb revisits O(1)."""
    if not session.path:
        raise StateError("already at the session root")
    session.path.pop()
    session.current = session.path[-1].chosen if session.path else session.root
    return session


@dataclass(frozen=True)
class DiscoveryOutcome:
    drills: int
    outcome: str
    final_type: int

    @property
    def isolated(self) -> bool:
        return self.outcome == OUTCOME_ISOLATED

    @property
    def missed(self) -> bool:
        return self.outcome == OUTCOME_MISS


def simulate_discovery(
    taxonomy: Taxonomy,
    q: int | str,
    target: int | str,
    k: int = 5,
    config: DiscoveryConfig | None = None,
) -> DiscoveryOutcome:
    """Greedy walk toward ``target``: at each node pick the offered refinement
    containing it (smallest answer set, then name, on ties).

    The simulation isolates single entities, so its default listing threshold
    is 1 rather than the interactive default. Returns the number of drills
    until the target is isolated, listed among a terminal node's entities, or
    missed because no offered refinement contains it.
    """
    qid = taxonomy.resolve(q)
    eid = target if isinstance(target, int) else taxonomy.entity_id(target)
    if eid not in taxonomy.answers(qid):
        raise PreconditionError("target entity does not answer the starting query")
    cfg = config or DiscoveryConfig(listing_threshold=1)
    if cfg.k != k:
        cfg = replace(cfg, k=k)
    session = start_session(taxonomy, qid, k=k, config=cfg)
    max_steps = taxonomy.num_types + 1  # paths are simple in a DAG
    for _ in range(max_steps):
        answers = session.current_answers
        if session.terminal:
            outcome = (
                OUTCOME_ISOLATED
                if answers.cardinality == 1 and eid in answers
                else OUTCOME_LISTED
            )
            return DiscoveryOutcome(len(session.path), outcome, session.current)
        offer = session.offer()
        holding = [
            t for t in offer.offered if eid in taxonomy.answers(t)
        ]
        if not holding:
            return DiscoveryOutcome(len(session.path), OUTCOME_MISS, session.current)
        choice = min(
            holding,
            key=lambda t: (taxonomy.answers(t).cardinality, taxonomy.type_name(t)),
        )
        drill(session, choice)
    raise StateError("discovery exceeded the maximum path length")
