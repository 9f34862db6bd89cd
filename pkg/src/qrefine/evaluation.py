"""Set-based metrics, threshold answer prediction, and the irrelevance
correction heuristic with its statistical report.

The answer predictor works over precomputed embedding tables: an entity is a
predicted answer to a query when the cosine similarity of their vectors is
strictly above the configured threshold. A refinement is flagged irrelevant
when its predicted answers share nothing with the query's predicted answers.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    DegenerateVectorError,
    DomainError,
    EmptyInputError,
    ParseError,
    UnknownEntityError,
)
from .stats import chi_square_2x2
from .taxonomy import EntitySet, NameTable

LABEL_RELEVANT = "relevant"
LABEL_IRRELEVANT = "irrelevant"

_STRIP = string.punctuation + string.whitespace


def normalize_name(name: str) -> str:
    """Lowercase, collapse internal whitespace, strip surrounding punctuation."""
    return " ".join(name.lower().split()).strip(_STRIP)


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def set_prf(predicted: Iterable[str], silver: Iterable[str]) -> PRF:
    """Exact-match precision/recall/F1 between two refinement-name sets.

    Names are normalized before comparison. A side with no names scores 0 on
    its ratio; F1 is 0 when precision and recall are both 0.
    """
    pred = {normalize_name(p) for p in predicted}
    gold = {normalize_name(s) for s in silver}
    pred.discard("")
    gold.discard("")
    matched = len(pred & gold)
    precision = matched / len(pred) if pred else 0.0
    recall = matched / len(gold) if gold else 0.0
    if precision + recall == 0.0:
        return PRF(precision, recall, 0.0)
    return PRF(precision, recall, 2 * precision * recall / (precision + recall))


class EmbeddingTable:
    """Dense vectors keyed by name; one namespace (entity or query) per table."""

    def __init__(self, namespace: str, names: list[str], vectors: np.ndarray):
        if vectors.ndim != 2 or len(names) != vectors.shape[0]:
            raise DomainError("names and vectors disagree")
        if not np.all(np.isfinite(vectors)):
            raise DomainError("embedding vectors must be finite")
        self.namespace = namespace
        self._names = NameTable()
        for name in names:
            self._names.intern(name)
        if len(self._names) != len(names):
            raise DomainError("duplicate ids in embedding table")
        self.vectors = vectors.astype(np.float64)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    def __contains__(self, name: str) -> bool:
        return name in self._names

    def names(self) -> list[str]:
        return self._names.names

    def index_of(self, name: str) -> int:
        idx = self._names.id_of(name)
        if idx is None:
            raise UnknownEntityError(f"no embedding for {name!r}")
        return idx

    def name_of(self, idx: int) -> str:
        return self._names.name_of(idx)

    def vector(self, name: str) -> np.ndarray:
        return self.vectors[self.index_of(name)]

    @classmethod
    def from_tsv(cls, stream: Iterable[str], namespace: str) -> "EmbeddingTable":
        """Parse ``id<TAB>v1 v2 ... vd`` lines with a fixed dimension."""
        names: list[str] = []
        rows: list[list[float]] = []
        dim: int | None = None
        for line_no, raw in enumerate(stream, start=1):
            line = raw.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("embeddings", line_no, f"expected 2 fields, got {len(fields)}")
            try:
                values = [float(v) for v in fields[1].split()]
            except ValueError as exc:
                raise ParseError("embeddings", line_no, str(exc)) from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(
                    "embeddings", line_no, f"dimension {len(values)} != {dim}"
                )
            names.append(fields[0])
            rows.append(values)
        if not rows:
            raise EmptyInputError("embedding table is empty")
        return cls(namespace, names, np.asarray(rows, dtype=np.float64))


@dataclass(frozen=True)
class PredictorConfig:
    """Cosine threshold for answer prediction; similarity must strictly exceed it."""

    threshold: float = 0.4

    def __post_init__(self) -> None:
        if not -1.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold must be within [-1, 1], got {self.threshold}")


def predict_answers(
    entities: EmbeddingTable,
    queries: EmbeddingTable,
    q: str,
    cfg: PredictorConfig = PredictorConfig(),
) -> EntitySet:
    """All entities whose cosine similarity to the query exceeds the threshold.

    The returned set lives in the entity table's universe (ids in table order).
    """
    g = queries.vector(q)
    g_norm = float(np.linalg.norm(g))
    if g_norm == 0.0:
        raise DegenerateVectorError(f"query {q!r} has a zero-norm embedding")
    if queries.dim != entities.dim:
        raise DomainError(f"dimension mismatch: {queries.dim} vs {entities.dim}")
    norms = np.linalg.norm(entities.vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateVectorError(
            f"entity {entities.name_of(int(zero[0]))!r} has a zero-norm embedding"
        )
    cosines = entities.vectors @ g / (norms * g_norm)
    hits = np.flatnonzero(cosines > cfg.threshold)
    return EntitySet.from_ids((int(i) for i in hits), len(entities))


def flag_irrelevant(a_q: EntitySet, a_ref: EntitySet) -> bool:
    """True when the two predicted answer sets share no entities.

    Symmetric; two empty sets are flagged (vacuously disjoint): an
    answerless refinement carries no evidence of relevance.
    """
    return a_q.isdisjoint(a_ref)


def load_judgments(stream: Iterable[str]) -> dict[tuple[str, str], str]:
    """Parse ``query<TAB>refinement<TAB>{relevant|irrelevant}`` lines."""
    judgments: dict[tuple[str, str], str] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError("judgments", line_no, f"expected 3 fields, got {len(fields)}")
        query, refinement, label = fields
        if label not in (LABEL_RELEVANT, LABEL_IRRELEVANT):
            raise ParseError("judgments", line_no, f"unknown label {label!r}")
        judgments[(query, refinement)] = label
    return judgments


@dataclass(frozen=True)
class CorrectionReport:
    """Confusion of human relevance labels against the disjointness flag.

    The flag is read as a classifier predicting "irrelevant"; precision,
    recall, and F1 are reported for that reading. The chi-square entries are
    None when a margin is empty.
    """

    irrelevant_flagged: int
    irrelevant_not_flagged: int
    relevant_flagged: int
    relevant_not_flagged: int
    flag_rate_irrelevant: float
    flag_rate_relevant: float
    chi_square: float | None
    p_value: float | None
    precision: float
    recall: float
    f1: float

    def matrix(self) -> list[list[int]]:
        return [
            [self.irrelevant_flagged, self.irrelevant_not_flagged],
            [self.relevant_flagged, self.relevant_not_flagged],
        ]

    def to_record(self) -> dict:
        return {
            "matrix": self.matrix(),
            "flag_rate_irrelevant": self.flag_rate_irrelevant,
            "flag_rate_relevant": self.flag_rate_relevant,
            "chi_square": self.chi_square,
            "p_value": self.p_value,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


def correction_report(
    judgments: Mapping[tuple[str, str], str],
    flags: Mapping[tuple[str, str], bool],
) -> CorrectionReport:
    """Cross-tabulate human labels with flags over the judged pairs."""
    if not judgments:
        raise EmptyInputError("no relevance judgments supplied")
    missing = [pair for pair in judgments if pair not in flags]
    if missing:
        raise DomainError(f"missing flags for {len(missing)} judged pairs, e.g. {missing[0]}")
    cells = {(LABEL_IRRELEVANT, True): 0, (LABEL_IRRELEVANT, False): 0,
             (LABEL_RELEVANT, True): 0, (LABEL_RELEVANT, False): 0}
    for pair, label in judgments.items():
        cells[(label, bool(flags[pair]))] += 1
    irr_f = cells[(LABEL_IRRELEVANT, True)]
    irr_n = cells[(LABEL_IRRELEVANT, False)]
    rel_f = cells[(LABEL_RELEVANT, True)]
    rel_n = cells[(LABEL_RELEVANT, False)]
    irr_total = irr_f + irr_n
    rel_total = rel_f + rel_n
    table = [[irr_f, irr_n], [rel_f, rel_n]]
    try:
        stat, p = chi_square_2x2(table)
    except DomainError:
        stat, p = None, None
    predicted = irr_f + rel_f
    precision = irr_f / predicted if predicted else 0.0
    recall = irr_f / irr_total if irr_total else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return CorrectionReport(
        irrelevant_flagged=irr_f,
        irrelevant_not_flagged=irr_n,
        relevant_flagged=rel_f,
        relevant_not_flagged=rel_n,
        flag_rate_irrelevant=irr_f / irr_total if irr_total else 0.0,
        flag_rate_relevant=rel_f / rel_total if rel_total else 0.0,
        chi_square=stat,
        p_value=p,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def write_report(report: CorrectionReport, out: IO[str]) -> None:
    out.write(report.to_line() + "\n")
