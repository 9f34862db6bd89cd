"""Candidate pools and rule-based filtering of generic refinements.

A refinement candidate is dropped when the tokens it *adds* to the query name
(the token diff) look like a date, a place or nationality, or a gender marker.
Tokens already present in the query never trigger a rule. The place check is
gazetteer-backed rather than model-backed: a TSV of phrase -> category
(GPE/NORP/LOC/DATE) stands in for a named-entity tagger.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import IO, Iterable, Iterator, Mapping

from .errors import ConfigurationError, ParseError
from .taxonomy import Taxonomy

PATTERN = "pattern"
TERM_LIST = "term-list"
ANNOTATION_CATEGORY = "annotation-category"
_KINDS = (PATTERN, TERM_LIST, ANNOTATION_CATEGORY)

_STRIP_CHARS = string.punctuation + string.whitespace


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with surrounding punctuation stripped; empties dropped."""
    return [t for t in (w.strip(_STRIP_CHARS) for w in text.split()) if t]


def token_diff(q_name: str, c_name: str) -> list[str]:
    """Tokens of the candidate name absent (case-insensitively) from the query name."""
    q_tokens = {t.lower() for t in tokenize(q_name)}
    return [t for t in tokenize(c_name) if t.lower() not in q_tokens]


@lru_cache(maxsize=256)
def _compile_pattern(payload: str) -> re.Pattern[str]:
    # End of input counts as a non-digit so year-like tokens still match when
    # nothing follows them.
    adjusted = payload.replace("[^0-9]", "(?:[^0-9]|$)")
    try:
        return re.compile(adjusted, re.IGNORECASE)
    except re.error as exc:
        raise ConfigurationError(f"bad pattern rule {payload!r}: {exc}") from exc


@dataclass(frozen=True)
class FilterRule:
    """One filtering rule: a regex, a term list, or a gazetteer category set."""

    rule_id: str
    kind: str
    payload: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown rule kind {self.kind!r}")
        if self.kind == PATTERN:
            _compile_pattern(self.payload)  # fail fast on bad regex

    def match(self, diff_tokens: list[str], gazetteer: "Gazetteer | None") -> str | None:
        """Return the matched span if this rule fires on the added tokens."""
        if not diff_tokens:
            return None
        if self.kind == PATTERN:
            hit = _compile_pattern(self.payload).search(" ".join(diff_tokens))
            return hit.group(0) if hit else None
        if self.kind == TERM_LIST:
            terms = {t.strip().lower() for t in self.payload.split(",") if t.strip()}
            for token in diff_tokens:
                if token.lower() in terms:
                    return token
            return None
        if gazetteer is None:
            raise ConfigurationError(
                f"rule {self.rule_id!r} needs a gazetteer but none was provided"
            )
        categories = {c.strip().upper() for c in self.payload.split(",") if c.strip()}
        return gazetteer.find_phrase(diff_tokens, categories)


class Gazetteer:
    """Phrase -> annotation-category lookup used by annotation-category rules."""

    def __init__(self, entries: Mapping[str, str]):
        self._entries = {phrase.lower(): cat.upper() for phrase, cat in entries.items()}
        self._max_tokens = max((len(p.split()) for p in self._entries), default=1)

    def __len__(self) -> int:
        return len(self._entries)

    def category(self, phrase: str) -> str | None:
        return self._entries.get(phrase.lower())

    def find_phrase(self, tokens: list[str], categories: set[str]) -> str | None:
        """Leftmost-longest contiguous token run listed under one of ``categories``."""
        for start in range(len(tokens)):
            limit = min(self._max_tokens, len(tokens) - start)
            for length in range(limit, 0, -1):
                phrase = " ".join(tokens[start:start + length])
                cat = self._entries.get(phrase.lower())
                if cat in categories:
                    return phrase
        return None

    @classmethod
    def from_tsv(cls, stream: Iterable[str]) -> "Gazetteer":
        entries: dict[str, str] = {}
        for line_no, raw in enumerate(stream, start=1):
            line = raw.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("gazetteer", line_no, f"expected 2 fields, got {len(fields)}")
            entries[fields[0]] = fields[1]
        return cls(entries)


def default_gazetteer() -> Gazetteer:
    """Gazetteer shipped with the package: demonyms, places, decade tokens."""
    text = resources.files("qrefine.data").joinpath("gazetteer.tsv").read_text("utf-8")
    return Gazetteer.from_tsv(text.splitlines())


def default_rules() -> tuple[FilterRule, ...]:
    """The stock date / location / gender rule set."""
    return (
        FilterRule("century", PATTERN, r"[0-9]{1,2}(st|th)(-| )century"),
        FilterRule("year-4digit", PATTERN, r"1[0-9]{3}[^0-9]"),
        FilterRule("number-3digit", PATTERN, r"[0-9]{3}[^0-9]"),
        FilterRule("gender-terms", TERM_LIST, "male,female,men,women"),
        FilterRule("entity-category", ANNOTATION_CATEGORY, "DATE,GPE,NORP,LOC"),
    )


def load_rules(stream: Iterable[str]) -> tuple[FilterRule, ...]:
    """Read ``kind<TAB>payload`` lines; rule ids are assigned by position."""
    rules: list[FilterRule] = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("rules", line_no, f"expected 2 fields, got {len(fields)}")
        rules.append(FilterRule(f"rule-{len(rules) + 1:03d}", fields[0], fields[1]))
    return tuple(rules)


@dataclass(frozen=True)
class Removal:
    rule_id: str
    span: str


@dataclass(frozen=True)
class CandidatePool:
    """Refinement candidates for one query, before and after filtering.

    ``all`` and ``kept`` are canonically ordered (ascending type name); every
    candidate in ``all`` but not ``kept`` has at least one removal record.
    """

    query: int
    all: tuple[int, ...]
    kept: tuple[int, ...]
    removals: dict[int, tuple[Removal, ...]] = field(default_factory=dict)


def candidate_pool(taxonomy: Taxonomy, q: int | str, transitive: bool = False) -> CandidatePool:
    """Unfiltered pool of subtype candidates for ``q``, canonically ordered."""
    tid = taxonomy.resolve(q)
    cands = sorted(taxonomy.subtypes(tid, transitive=transitive), key=taxonomy.type_name)
    return CandidatePool(query=tid, all=tuple(cands), kept=tuple(cands))


def apply_filters(
    taxonomy: Taxonomy,
    pool: CandidatePool,
    rules: Iterable[FilterRule],
    gazetteer: Gazetteer | None = None,
) -> CandidatePool:
    """Drop candidates whose added tokens trigger any rule; record why."""
    rules = tuple(rules)
    if any(r.kind == ANNOTATION_CATEGORY for r in rules) and gazetteer is None:
        raise ConfigurationError("annotation-category rule configured without a gazetteer")
    q_name = taxonomy.type_name(pool.query)
    kept: list[int] = []
    removals: dict[int, tuple[Removal, ...]] = {}
    for cand in pool.all:
        diff = token_diff(q_name, taxonomy.type_name(cand))
        hits = [
            Removal(rule.rule_id, span)
            for rule in rules
            if (span := rule.match(diff, gazetteer)) is not None
        ]
        if hits:
            removals[cand] = tuple(hits)
        else:
            kept.append(cand)
    return CandidatePool(query=pool.query, all=pool.all, kept=tuple(kept), removals=removals)


def filtered_pool(
    taxonomy: Taxonomy,
    q: int | str,
    rules: Iterable[FilterRule] | None = None,
    gazetteer: Gazetteer | None = None,
    transitive: bool = False,
) -> CandidatePool:
    """Convenience: unfiltered pool run through the (default) rule set."""
    if rules is None:
        rules = default_rules()
    if gazetteer is None:
        gazetteer = default_gazetteer()
    return apply_filters(taxonomy, candidate_pool(taxonomy, q, transitive), rules, gazetteer)


def trace_lines(taxonomy: Taxonomy, pool: CandidatePool) -> Iterator[str]:
    """Audit trail: one JSON line per (candidate, rule, span) removal."""
    q_name = taxonomy.type_name(pool.query)
    for cand in pool.all:
        for removal in pool.removals.get(cand, ()):
            yield json.dumps(
                {
                    "query": q_name,
                    "candidate": taxonomy.type_name(cand),
                    "rule": removal.rule_id,
                    "span": removal.span,
                },
                ensure_ascii=False,
            )


def write_trace(taxonomy: Taxonomy, pool: CandidatePool, out: IO[str]) -> None:
    for line in trace_lines(taxonomy, pool):
        out.write(line + "\n")
