"""Word vectors and corpus document frequencies.

Vectors are read from the plain word2vec text format::

    <count> <dim>
    <token> <v1> ... <vdim>

Words absent from the table get a fixed pseudo-random vector derived from the
word itself, so the same missing word always maps to the same point.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ._io import FormatError, atomic_write, iter_data_lines

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

VECTOR_FORMAT = ".9g"


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def fallback_vector(word: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic vector for a word missing from the table.

    Components are i.i.d. uniform in ``[-0.5/dim, 0.5/dim]``, drawn from a
    SplitMix64 stream seeded with ``fnv1a_64(utf8(word)) ^ seed``.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    state = fnv1a_64(word.encode("utf-8")) ^ (seed & _MASK64)
    out = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        state, z = splitmix64(state)
        u = (z >> 11) * (1.0 / (1 << 53))
        out[i] = (u - 0.5) / dim
    if not out.any():
        out[0] = 0.5 / dim
    return out


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: Mapping[str, np.ndarray]
    fallback_seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        for token, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"vector for {token!r} has non-finite components")

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def with_seed(self, seed: int) -> "EmbeddingTable":
        return EmbeddingTable(self.dim, self.entries, seed)


def vector_of(table: EmbeddingTable, word: str) -> np.ndarray:
    """Stored vector for ``word``, or its fallback vector. Returns a copy."""
    vec = table.entries.get(word)
    if vec is not None:
        return vec.copy()
    return fallback_vector(word, table.dim, table.fallback_seed)


def load_word_vectors(path: str | os.PathLike, fallback_seed: int = 0) -> EmbeddingTable:
    lines = iter_data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("empty file, expected header '<count> <dim>'", path) from None
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(f"malformed header {header!r}, expected '<count> <dim>'", path, lineno) from None
    if count < 0 or dim < 1:
        raise FormatError(f"malformed header {header!r}: count must be >= 0 and dim >= 1", path, lineno)

    entries: dict[str, np.ndarray] = {}
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != dim + 1:
            raise FormatError(f"wrong component count at line {lineno}: got {len(parts) - 1}, expected {dim}",
                              path, lineno)
        token = parts[0]
        if token in entries:
            raise FormatError(f"duplicate token {token}", path, lineno)
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise FormatError(f"non-numeric component for token {token}", path, lineno) from None
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"non-finite component for token {token}", path, lineno)
        entries[token] = vec
        if len(entries) > count:
            raise FormatError(f"more vectors than the {count} declared in the header", path, lineno)
    if len(entries) != count:
        raise FormatError(f"header declares {count} vectors but file has {len(entries)}", path)
    return EmbeddingTable(dim, entries, fallback_seed)


def save_word_vectors(entries: Iterable[tuple[str, np.ndarray]] | Mapping[str, np.ndarray],
                      dim: int, path: str | os.PathLike) -> None:
    """Write vectors in the text format read by :func:`load_word_vectors`."""
    if isinstance(entries, Mapping):
        entries = entries.items()
    items = list(entries)
    with atomic_write(path) as fh:
        fh.write(f"{len(items)} {dim}\n")
        for token, vec in items:
            if not token or any(ch.isspace() for ch in token):
                raise ValueError(f"token {token!r} is empty or contains whitespace")
            if len(vec) != dim:
                raise ValueError(f"vector for {token!r} has {len(vec)} components, expected {dim}")
            fh.write(token)
            for x in vec:
                fh.write(" " + format(float(x), VECTOR_FORMAT))
            fh.write("\n")


@dataclass(frozen=True)
class DfTable:
    total_docs: int
    df: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.total_docs < 1:
            raise ValueError("N must be positive")
        for token, n in self.df.items():
            if n < 1 or n > self.total_docs:
                raise ValueError(f"df({token})={n} outside [1, {self.total_docs}]")


def load_df_table(path: str | os.PathLike) -> DfTable:
    lines = iter_data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("empty file, expected '<N>' on the first line", path) from None
    try:
        total = int(header.strip())
    except ValueError:
        raise FormatError(f"malformed first line {header!r}, expected '<N>'", path, lineno) from None
    if total < 1:
        raise FormatError("N must be positive", path, lineno)

    df: dict[str, int] = {}
    for lineno, line in lines:
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or any(ch.isspace() for ch in parts[0]):
            raise FormatError(f"malformed line {line!r}, expected '<token>\\t<df>'", path, lineno)
        token, raw = parts
        try:
            n = int(raw)
        except ValueError:
            raise FormatError(f"malformed df {raw!r}", path, lineno) from None
        if n > total:
            raise FormatError(f"df exceeds N for {token}: {n} > {total}", path, lineno)
        if n < 1:
            raise FormatError(f"df below 1 for {token}: {n}", path, lineno)
        if token in df:
            raise FormatError(f"duplicate token {token}", path, lineno)
        df[token] = n
    return DfTable(total, df)


def idf_weight(dfs: DfTable, word: str) -> float:
    """``ln((N+1)/n)``; unknown words are treated as occurring everywhere (n = N)."""
    n = dfs.df.get(word, dfs.total_docs)
    return math.log((dfs.total_docs + 1) / n)
