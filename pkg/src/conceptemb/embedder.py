"""Concept vectors composed from word vectors.

Three constructions:

* ``femb``: mean over the concept's distinct words (union of all strings).
* ``hemb``: nested mean, word -> string -> term -> concept. A word shared by
  several strings is counted once per string.
* ``wemb``: idf-weighted sum over the distinct words divided by the word
  count ``l`` (not by the sum of weights).

Missing words take their fallback vectors; under ``wemb`` they also take the
poorest idf, ``ln((N+1)/N)``.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embedding_store import (DfTable, EmbeddingTable, idf_weight, load_word_vectors, save_word_vectors,
                              vector_of)
from .lexicon import ConceptRecord, concept_word_union


class Method(str, enum.Enum):
    FEMB = "femb"
    HEMB = "hemb"
    WEMB = "wemb"


class EmbeddingError(ValueError):
    pass


def _mean(vectors: Sequence[np.ndarray]) -> np.ndarray:
    acc = np.zeros_like(vectors[0])
    for v in vectors:
        acc += v
    return acc / len(vectors)


def embed_femb(c: ConceptRecord, table: EmbeddingTable) -> np.ndarray:
    words = concept_word_union(c)
    if not words:
        raise EmbeddingError(f"concept {c.concept_id} has no words")
    return _mean([vector_of(table, w) for w in words])


def embed_hemb(c: ConceptRecord, table: EmbeddingTable) -> np.ndarray:
    if not c.terms:
        raise EmbeddingError(f"concept {c.concept_id} has no terms")
    term_vectors = []
    for term in c.terms:
        if not term.strings:
            raise EmbeddingError(f"term {term.term_id} of concept {c.concept_id} has no strings")
        string_vectors = []
        for s in term.strings:
            if not s.words:
                raise EmbeddingError(f"string {s.string_id} of concept {c.concept_id} has zero words")
            string_vectors.append(_mean([vector_of(table, w) for w in s.words]))
        term_vectors.append(_mean(string_vectors))
    return _mean(term_vectors)


def embed_wemb(c: ConceptRecord, table: EmbeddingTable, dfs: DfTable) -> np.ndarray:
    words = concept_word_union(c)
    if not words:
        raise EmbeddingError(f"concept {c.concept_id} has no words")
    return _mean([idf_weight(dfs, w) * vector_of(table, w) for w in words])


@dataclass(frozen=True)
class ConceptVectorSet:
    dim: int
    method: Method | None
    vectors: Mapping[str, np.ndarray]

    def __contains__(self, concept_id: str) -> bool:
        return concept_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def build_concept_vectors(lexicon: Sequence[ConceptRecord], method: Method | str,
                          table: EmbeddingTable, dfs: DfTable | None = None) -> ConceptVectorSet:
    method = Method(method)
    if method is Method.WEMB and dfs is None:
        raise EmbeddingError("wemb requires a document-frequency table")
    if method is not Method.WEMB and dfs is not None:
        raise EmbeddingError(f"{method.value} does not use a document-frequency table")

    vectors: dict[str, np.ndarray] = {}
    for c in lexicon:
        if c.concept_id in vectors:
            raise EmbeddingError(f"duplicate concept id {c.concept_id}")
        try:
            if method is Method.FEMB:
                vec = embed_femb(c, table)
            elif method is Method.HEMB:
                vec = embed_hemb(c, table)
            else:
                vec = embed_wemb(c, table, dfs)
        except EmbeddingError as exc:
            raise EmbeddingError(f"cannot embed concept {c.concept_id}: {exc}") from exc
        vectors[c.concept_id] = vec
    return ConceptVectorSet(table.dim, method, vectors)


def missing_words(lexicon: Sequence[ConceptRecord], table: EmbeddingTable) -> list[str]:
    """Distinct lexicon words with no stored vector, first-appearance order."""
    seen: dict[str, None] = {}
    for c in lexicon:
        for w in concept_word_union(c):
            if w not in table:
                seen.setdefault(w, None)
    return list(seen)


def save_concept_vectors(vset: ConceptVectorSet, path: str | os.PathLike) -> None:
    save_word_vectors(vset.vectors, vset.dim, path)


def load_concept_vectors(path: str | os.PathLike, method: Method | str | None = None) -> ConceptVectorSet:
    """Read a concept-vector file (same format as word vectors)."""
    table = load_word_vectors(path)
    return ConceptVectorSet(table.dim, Method(method) if method else None, dict(table.entries))
