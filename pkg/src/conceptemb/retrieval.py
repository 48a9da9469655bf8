"""Concept-based ranking with similarity-aware matching.

A document's score for query ``q`` is::

    RSV(d, q) = sum_{c in q} wq(c) * sim(c, c*) * wd(c*)

where ``c*`` is the document concept closest to ``c`` (``c`` itself when
present, with similarity 1). ``wq``/``wd`` are pivoted-normalization or BM25
weights computed from concept statistics of the collection.
"""
from __future__ import annotations

import enum
import json
import math
import os
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ._io import FormatError, atomic_write, iter_data_lines
from .embedder import ConceptVectorSet
from .evaluation import RankedRun
from .similarity import SimilarityConfig, SimilarityFn, Taxonomy, make_similarity


@dataclass(frozen=True)
class ConceptDoc:
    doc_id: str
    tf: Mapping[str, int]

    def __post_init__(self):
        for c, n in self.tf.items():
            if n < 1:
                raise ValueError(f"tf({c}) in {self.doc_id} must be >= 1, got {n}")

    @property
    def length(self) -> int:
        return sum(self.tf.values())

    @classmethod
    def from_concepts(cls, doc_id: str, concepts: Iterable[str]) -> "ConceptDoc":
        """Repeated concept ids encode term frequency."""
        return cls(doc_id, dict(Counter(concepts)))


@dataclass(frozen=True)
class ConceptIndex:
    docs: tuple[ConceptDoc, ...]
    df: Mapping[str, int]
    avdl: float
    postings: Mapping[str, tuple[tuple[int, int], ...]] = field(repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.docs)


def build_index(docs: Sequence[ConceptDoc]) -> ConceptIndex:
    if not docs:
        raise ValueError("cannot index an empty collection")
    seen: set[str] = set()
    postings: dict[str, list[tuple[int, int]]] = {}
    total = 0
    for pos, d in enumerate(docs):
        if d.doc_id in seen:
            raise ValueError(f"duplicate doc id {d.doc_id}")
        seen.add(d.doc_id)
        if d.length < 1:
            raise ValueError(f"document {d.doc_id} has no concepts")
        total += d.length
        for c, n in d.tf.items():
            postings.setdefault(c, []).append((pos, n))
    return ConceptIndex(
        docs=tuple(docs),
        df={c: len(p) for c, p in postings.items()},
        avdl=total / len(docs),
        postings={c: tuple(p) for c, p in postings.items()},
    )


class WeightKind(str, enum.Enum):
    PIVOTED = "piv"
    BM25 = "bm25"


@dataclass(frozen=True)
class WeightingConfig:
    kind: WeightKind = WeightKind.BM25
    s: float = 0.2
    k1: float = 1.2
    b: float = 0.75
    k3: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must be in (0, 1), got {self.s}")
        if self.k1 <= 0 or self.k3 <= 0:
            raise ValueError("k1 and k3 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


def doc_weight(cfg: WeightingConfig, idx: ConceptIndex, c: str, d: ConceptDoc) -> float:
    tf = d.tf.get(c, 0)
    if tf < 1:
        raise ValueError(f"concept {c} does not occur in {d.doc_id}")
    ratio = d.length / idx.avdl
    if cfg.kind is WeightKind.PIVOTED:
        return (1.0 + math.log(1.0 + math.log(tf))) / ((1.0 - cfg.s) + cfg.s * ratio)
    n, df = idx.n_docs, idx.df.get(c, 0)
    idf = max(0.0, math.log((n - df + 0.5) / (df + 0.5)))
    return ((cfg.k1 + 1.0) * tf) / (cfg.k1 * ((1.0 - cfg.b) + cfg.b * ratio) + tf) * idf


def query_weight(cfg: WeightingConfig, idx: ConceptIndex, c: str, qtf: int) -> float:
    if qtf < 1:
        raise ValueError(f"query tf must be >= 1, got {qtf}")
    if cfg.kind is WeightKind.PIVOTED:
        # unseen concepts get the poorest idf (df = N)
        df = idx.df.get(c) or idx.n_docs
        return qtf * math.log((idx.n_docs + 1) / df)
    return ((cfg.k3 + 1.0) * qtf) / (cfg.k3 + qtf)


def best_match(c: str, d: ConceptDoc, simfn: SimilarityFn, min_sim: float = 0.0) -> tuple[str, float] | None:
    """Closest document concept to ``c``; ties go to the smallest id.

    Returns ``None`` when no document concept has similarity above zero
    (or reaching ``min_sim`` when that is set).
    """
    if c in d.tf:
        return c, 1.0
    best: tuple[str, float] | None = None
    for cand in d.tf:
        s = simfn(c, cand)
        if s <= 0.0 or s < min_sim:
            continue
        if best is None or s > best[1] or (s == best[1] and cand < best[0]):
            best = (cand, s)
    return best


def score_rsv(q: ConceptDoc, d: ConceptDoc, idx: ConceptIndex, wcfg: WeightingConfig,
              simfn: SimilarityFn, min_sim: float = 0.0) -> float:
    score = 0.0
    for c, qtf in q.tf.items():
        match = best_match(c, d, simfn, min_sim)
        if match is None:
            continue
        cstar, s = match
        score += query_weight(wcfg, idx, c, qtf) * s * doc_weight(wcfg, idx, cstar, d)
    return score


def run_queries(queries: Sequence[ConceptDoc], idx: ConceptIndex, wcfg: WeightingConfig,
                scfg: SimilarityConfig, vectors: ConceptVectorSet | None = None,
                tax: Taxonomy | None = None, k: int = 1000, min_sim: float = 0.0) -> RankedRun:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    simfn = make_similarity(scfg, vectors, tax)
    rankings: dict[str, list[tuple[str, float]]] = {}
    for q in queries:
        if q.doc_id in rankings:
            raise ValueError(f"duplicate query id {q.doc_id}")
        if not q.tf:
            warnings.warn(f"query {q.doc_id} has no concepts; empty ranking", stacklevel=2)
            rankings[q.doc_id] = []
            continue
        scored = []
        for d in idx.docs:
            s = score_rsv(q, d, idx, wcfg, simfn, min_sim)
            if s > 0.0:
                scored.append((d.doc_id, s))
        scored.sort(key=lambda item: (-item[1], item[0]))
        rankings[q.doc_id] = scored[:k]
    return RankedRun(rankings)


# --- file formats ---------------------------------------------------------

def load_concept_docs(path: str | os.PathLike, allow_empty: bool = False) -> list[ConceptDoc]:
    """Read ``<id>\\t<concept> <concept> ...`` lines; repeats encode tf."""
    docs = []
    for lineno, line in iter_data_lines(path):
        doc_id, sep, rest = line.partition("\t")
        doc_id = doc_id.strip()
        if not sep or not doc_id or any(ch.isspace() for ch in doc_id):
            raise FormatError("malformed line, expected '<id>\\t<concept_id> ...'", path, lineno)
        concepts = rest.split()
        if not concepts and not allow_empty:
            raise FormatError(f"document {doc_id} has no concepts", path, lineno)
        docs.append(ConceptDoc.from_concepts(doc_id, concepts))
    return docs


INDEX_FORMAT = "conceptemb-index/1"


def save_index(idx: ConceptIndex, path: str | os.PathLike) -> None:
    payload = {
        "format": INDEX_FORMAT,
        "n_docs": idx.n_docs,
        "avdl": idx.avdl,
        "docs": [{"id": d.doc_id, "tf": [[c, n] for c, n in d.tf.items()]} for d in idx.docs],
        "df": dict(sorted(idx.df.items())),
    }
    with atomic_write(path) as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_index(path: str | os.PathLike) -> ConceptIndex:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"index is not valid JSON: {exc}", path) from None
    if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
        raise FormatError(f"not a {INDEX_FORMAT} file", path)
    try:
        docs = [ConceptDoc(d["id"], {c: int(n) for c, n in d["tf"]}) for d in payload["docs"]]
        return build_index(docs)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"corrupt index: {exc}", path) from None
