"""Type hierarchy storage: name interning, entity bitsets, transitive closure.

The taxonomy is a polyhierarchy (a type may have several parents) loaded from
two TSV streams: ``child<TAB>parent`` edges and ``entity<TAB>type`` instance
pairs. After loading it is immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import CycleError, ParseError, UnknownEntityError, UnknownTypeError


class NameTable:
    """Bijective name <-> dense-id mapping, ids assigned in first-appearance order."""

    __slots__ = ("_ids", "_names")

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._names: list[str] = []

    def intern(self, name: str) -> int:
        got = self._ids.get(name)
        if got is not None:
            return got
        new_id = len(self._names)
        self._ids[name] = new_id
        self._names.append(name)
        return new_id

    def id_of(self, name: str) -> int | None:
        return self._ids.get(name)

    def name_of(self, ident: int) -> str:
        return self._names[ident]

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    @property
    def names(self) -> list[str]:
        return list(self._names)


class EntitySet:
    """Fixed-universe set of entity ids backed by an integer bit vector.

    All set operations require both operands to share the same universe width
    and never change it. ``cardinality`` is cached at construction.
    """

    __slots__ = ("bits", "universe", "cardinality")

    def __init__(self, bits: int, universe: int):
        if bits < 0 or bits >> universe:
            raise ValueError("bits outside the entity universe")
        self.bits = bits
        self.universe = universe
        self.cardinality = bits.bit_count()

    @classmethod
    def from_ids(cls, ids: Iterable[int], universe: int) -> "EntitySet":
        bits = 0
        for eid in ids:
            if not 0 <= eid < universe:
                raise ValueError(f"entity id {eid} outside universe of {universe}")
            bits |= 1 << eid
        return cls(bits, universe)

    @classmethod
    def empty(cls, universe: int) -> "EntitySet":
        return cls(0, universe)

    def _check(self, other: "EntitySet") -> None:
        if self.universe != other.universe:
            raise ValueError("entity sets from different universes")

    def __and__(self, other: "EntitySet") -> "EntitySet":
        self._check(other)
        return EntitySet(self.bits & other.bits, self.universe)

    def __or__(self, other: "EntitySet") -> "EntitySet":
        self._check(other)
        return EntitySet(self.bits | other.bits, self.universe)

    def __sub__(self, other: "EntitySet") -> "EntitySet":
        self._check(other)
        return EntitySet(self.bits & ~other.bits & ((1 << self.universe) - 1), self.universe)

    def __contains__(self, eid: int) -> bool:
        return 0 <= eid < self.universe and (self.bits >> eid) & 1 == 1

    def __len__(self) -> int:
        return self.cardinality

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, EntitySet)
            and self.bits == other.bits
            and self.universe == other.universe
        )

    def __hash__(self) -> int:
        return hash((self.bits, self.universe))

    def __repr__(self) -> str:
        return f"EntitySet({self.cardinality} of {self.universe})"

    def issubset(self, other: "EntitySet") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def isdisjoint(self, other: "EntitySet") -> bool:
        self._check(other)
        return self.bits & other.bits == 0


@dataclass
class LoadReport:
    """Summary counts emitted after a load, plus any dropped back-edges."""

    types: int = 0
    entities: int = 0
    edges: int = 0
    instance_pairs: int = 0
    duplicate_edges: int = 0
    dropped_edges: list[tuple[str, str]] = field(default_factory=list)

    def to_lines(self) -> list[str]:
        lines = [
            json.dumps(
                {
                    "record": "load_report",
                    "types": self.types,
                    "entities": self.entities,
                    "edges": self.edges,
                    "instance_pairs": self.instance_pairs,
                    "duplicate_edges": self.duplicate_edges,
                    "dropped_edges": len(self.dropped_edges),
                },
                ensure_ascii=False,
            )
        ]
        for child, parent in self.dropped_edges:
            lines.append(
                json.dumps(
                    {"record": "dropped_edge", "child": child, "parent": parent},
                    ensure_ascii=False,
                )
            )
        return lines


def _parse_tsv(stream: Iterable[str], source: str) -> Iterator[tuple[int, str, str]]:
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(source, line_no, f"expected 2 tab-separated fields, got {len(fields)}")
        left, right = fields
        if not left or not right:
            raise ParseError(source, line_no, "empty name field")
        yield line_no, left, right


class Taxonomy:
    """Immutable type DAG plus per-type entity sets with transitive closure.

    ``answers`` sets are materialized per type at load time so refinement
    scoring can treat them as O(1) lookups.
    """

    def __init__(self) -> None:
        self._types = NameTable()
        self._entities = NameTable()
        self.parents: list[list[int]] = []
        self.children: list[list[int]] = []
        self._edge_list: list[tuple[int, int]] = []
        self._instance_list: list[tuple[int, int]] = []
        self._direct: list[EntitySet] = []
        self._closed: list[EntitySet] = []
        self.report = LoadReport()

    # -- construction ------------------------------------------------------

    def _intern_type(self, name: str) -> int:
        tid = self._types.intern(name)
        if tid == len(self.parents):
            self.parents.append([])
            self.children.append([])
        return tid

    def _add_edge(self, child: int, parent: int) -> bool:
        if parent in self.parents[child]:
            return False
        self.parents[child].append(parent)
        self.children[parent].append(child)
        self._edge_list.append((child, parent))
        return True

    def _remove_edge(self, child: int, parent: int) -> None:
        self.parents[child].remove(parent)
        self.children[parent].remove(child)
        self._edge_list.remove((child, parent))

    def _find_cycle(self) -> list[int] | None:
        # Iterative DFS over child->parent edges; nodes visited in id order so
        # repeated runs find the same cycle for identical inputs.
        color = [0] * len(self.parents)  # 0 unvisited, 1 on stack, 2 done
        for start in range(len(self.parents)):
            if color[start]:
                continue
            stack: list[tuple[int, int]] = [(start, 0)]
            path = [start]
            color[start] = 1
            while stack:
                node, idx = stack[-1]
                if idx < len(self.parents[node]):
                    stack[-1] = (node, idx + 1)
                    nxt = self.parents[node][idx]
                    if color[nxt] == 1:
                        return path[path.index(nxt):]
                    if color[nxt] == 0:
                        color[nxt] = 1
                        stack.append((nxt, 0))
                        path.append(nxt)
                else:
                    color[node] = 2
                    stack.pop()
                    path.pop()
        return None

    def _break_cycles(self, drop_cycles: bool) -> None:
        while True:
            cycle = self._find_cycle()
            if cycle is None:
                return
            if not drop_cycles:
                raise CycleError([self.type_name(t) for t in cycle])
            # Cycle edges run child -> parent around the loop. Drop the edge
            # whose child name sorts last; deterministic because names are unique.
            edges = [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]
            child, parent = max(edges, key=lambda e: self.type_name(e[0]))
            self._remove_edge(child, parent)
            self.report.dropped_edges.append((self.type_name(child), self.type_name(parent)))

    def _compute_closure(self) -> None:
        universe = len(self._entities)
        num_types = len(self.parents)
        direct_bits = [0] * num_types
        for eid, tid in self._instance_list:
            direct_bits[tid] |= 1 << eid
        # Children-before-parents order (Kahn over child->parent edges).
        indegree = [len(self.children[t]) for t in range(num_types)]
        queue = deque(t for t in range(num_types) if indegree[t] == 0)
        closed_bits = list(direct_bits)
        order: list[int] = []
        while queue:
            node = queue.popleft()
            order.append(node)
            for child in self.children[node]:
                closed_bits[node] |= closed_bits[child]
            for parent in self.parents[node]:
                indegree[parent] -= 1
                if indegree[parent] == 0:
                    queue.append(parent)
        if len(order) != num_types:
            raise CycleError(["<unbroken cycle>"])  # unreachable after _break_cycles
        self._direct = [EntitySet(b, universe) for b in direct_bits]
        self._closed = [EntitySet(b, universe) for b in closed_bits]

    # -- lookups -----------------------------------------------------------

    @property
    def num_types(self) -> int:
        return len(self.parents)

    @property
    def num_entities(self) -> int:
        return len(self._entities)

    def type_id(self, name: str) -> int:
        tid = self._types.id_of(name)
        if tid is None:
            raise UnknownTypeError(name)
        return tid

    def type_name(self, tid: int) -> str:
        if not 0 <= tid < self.num_types:
            raise UnknownTypeError(tid)
        return self._types.name_of(tid)

    def has_type(self, name: str) -> bool:
        return name in self._types

    def entity_id(self, name: str) -> int:
        eid = self._entities.id_of(name)
        if eid is None:
            raise UnknownEntityError(name)
        return eid

    def entity_name(self, eid: int) -> str:
        if not 0 <= eid < self.num_entities:
            raise UnknownEntityError(eid)
        return self._entities.name_of(eid)

    def type_names(self) -> list[str]:
        return self._types.names

    def entity_names(self, entities: EntitySet) -> list[str]:
        return [self._entities.name_of(eid) for eid in entities]

    def resolve(self, q: int | str) -> int:
        return q if isinstance(q, int) else self.type_id(q)

    # -- spec operations ----------------------------------------------------

    def answers(self, q: int | str) -> EntitySet:
        """Entities that are instances of ``q`` under transitive closure."""
        tid = self.resolve(q)
        if not 0 <= tid < self.num_types:
            raise UnknownTypeError(tid)
        return self._closed[tid]

    def direct_instances(self, q: int | str) -> EntitySet:
        tid = self.resolve(q)
        if not 0 <= tid < self.num_types:
            raise UnknownTypeError(tid)
        return self._direct[tid]

    def subtypes(self, q: int | str, transitive: bool = False) -> list[int]:
        """Direct children of ``q``, or all strict descendants when ``transitive``."""
        tid = self.resolve(q)
        if not 0 <= tid < self.num_types:
            raise UnknownTypeError(tid)
        if not transitive:
            return list(self.children[tid])
        seen: set[int] = set()
        out: list[int] = []
        queue = deque(self.children[tid])
        while queue:
            node = queue.popleft()
            if node in seen:
                continue
            seen.add(node)
            out.append(node)
            queue.extend(self.children[node])
        return out

    def is_strict_descendant(self, candidate: int, ancestor: int) -> bool:
        if candidate == ancestor:
            return False
        seen = {candidate}
        queue = deque(self.parents[candidate])
        while queue:
            node = queue.popleft()
            if node == ancestor:
                return True
            if node in seen:
                continue
            seen.add(node)
            queue.extend(self.parents[node])
        return False

    # -- round trip ----------------------------------------------------------

    def serialize(self, edges_out: IO[str], instances_out: IO[str]) -> None:
        """Write back the TSV streams in original load order.

        Reloading the serialized streams reproduces the exact name<->id
        bijections because interning follows first-appearance order.
        """
        for child, parent in self._edge_list:
            edges_out.write(f"{self.type_name(child)}\t{self.type_name(parent)}\n")
        for eid, tid in self._instance_list:
            instances_out.write(f"{self.entity_name(eid)}\t{self.type_name(tid)}\n")


def load_taxonomy(
    edges_source: Iterable[str],
    instances_source: Iterable[str],
    drop_cycles: bool = False,
) -> Taxonomy:
    """Parse, validate, and index a taxonomy from edge and instance TSV streams.

    Cycles abort the load with :class:`CycleError` unless ``drop_cycles`` is
    set, in which case back-edges are removed deterministically (the edge
    whose child name sorts later) and recorded in the load report.
    """
    tax = Taxonomy()
    for _line_no, child, parent in _parse_tsv(edges_source, "edges"):
        c = tax._intern_type(child)
        p = tax._intern_type(parent)
        if not tax._add_edge(c, p):
            tax.report.duplicate_edges += 1
    for _line_no, entity, type_name in _parse_tsv(instances_source, "instances"):
        eid = tax._entities.intern(entity)
        tid = tax._intern_type(type_name)
        tax._instance_list.append((eid, tid))
    tax._break_cycles(drop_cycles)
    tax._compute_closure()
    tax.report.types = tax.num_types
    tax.report.entities = tax.num_entities
    tax.report.edges = len(tax._edge_list)
    tax.report.instance_pairs = len(tax._instance_list)
    return tax
