"""Concept -> term -> string hierarchy, read from a small MRCONSO-like TSV.

Each data line is ``<concept_id>\\t<term_id>\\t<string_id>\\t<text>``; lines
starting with ``#`` are comments. Rows for a concept need not be contiguous.
"""
from __future__ import annotations

import os
import re
import warnings
from dataclasses import dataclass

from ._io import FormatError, iter_data_lines

# \w minus underscore: alphanumeric runs, Unicode-aware
_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric runs, first occurrence kept."""
    seen: dict[str, None] = {}
    for tok in _TOKEN_RE.findall(text.lower()):
        seen.setdefault(tok, None)
    return list(seen)


@dataclass(frozen=True)
class StringRecord:
    string_id: str
    text: str
    words: tuple[str, ...]


@dataclass(frozen=True)
class TermRecord:
    term_id: str
    strings: tuple[StringRecord, ...]


@dataclass(frozen=True)
class ConceptRecord:
    concept_id: str
    terms: tuple[TermRecord, ...]

    def iter_strings(self):
        for term in self.terms:
            yield from term.strings


def concept_word_union(c: ConceptRecord) -> list[str]:
    seen: dict[str, None] = {}
    for s in c.iter_strings():
        for w in s.words:
            seen.setdefault(w, None)
    return list(seen)


def make_concept(concept_id: str, terms: dict[str, dict[str, str]]) -> ConceptRecord:
    """Build a record from ``{term_id: {string_id: text}}``, tokenizing each text.

    Convenience constructor for programmatic use; strings with no tokens are
    kept, so embedding methods may reject the result.
    """
    return ConceptRecord(concept_id, tuple(
        TermRecord(tid, tuple(StringRecord(sid, text, tuple(tokenize(text))) for sid, text in strings.items()))
        for tid, strings in terms.items()
    ))


def load_lexicon(path: str | os.PathLike) -> list[ConceptRecord]:
    # concept -> term -> string -> (text, words); dicts keep first-appearance order
    tree: dict[str, dict[str, dict[str, StringRecord]]] = {}
    seen_concepts: dict[str, int] = {}
    for lineno, line in iter_data_lines(path, comments=True):
        parts = line.split("\t")
        if len(parts) != 4 or not all(p.strip() for p in parts[:3]):
            raise FormatError("malformed line, expected '<concept_id>\\t<term_id>\\t<string_id>\\t<text>'",
                              path, lineno)
        cid, tid, sid, text = (p.strip() for p in parts)
        seen_concepts.setdefault(cid, lineno)
        terms = tree.setdefault(cid, {})
        strings = terms.setdefault(tid, {})
        if sid in strings:
            raise FormatError(f"duplicate (concept, term, string) triple ({cid}, {tid}, {sid})", path, lineno)
        words = tokenize(text)
        if not words:
            warnings.warn(f"{path}:{lineno}: string {sid} of concept {cid} has no tokens; dropped",
                          stacklevel=2)
            # placeholder so a repeated triple is still caught
            strings[sid] = None  # type: ignore[assignment]
            continue
        strings[sid] = StringRecord(sid, text, tuple(words))

    concepts = []
    for cid, terms in tree.items():
        term_records = []
        for tid, strings in terms.items():
            kept = tuple(s for s in strings.values() if s is not None)
            if kept:
                term_records.append(TermRecord(tid, kept))
        if not term_records:
            raise FormatError(f"concept {cid} has no usable strings", path, seen_concepts[cid])
        concepts.append(ConceptRecord(cid, tuple(term_records)))
    return concepts
