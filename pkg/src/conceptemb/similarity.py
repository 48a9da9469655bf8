"""Inter-concept similarity back-ends.

``eq2``
    ``beta * cos^2`` between concept vectors, 0 when the cosine is not positive.
``leacock``
    is-a path measure ``-ln(len / 2D)``, by default normalized to ``[0, 1]``
    by dividing by ``ln(2D)`` so that a concept matches itself with 1.
``nosim``
    exact match only.
"""
from __future__ import annotations

import enum
import math
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ._io import FormatError, iter_data_lines
from .embedder import ConceptVectorSet

NORM_EPS = 1e-12

SimilarityFn = Callable[[str, str], float]


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < NORM_EPS or nv < NORM_EPS:
        return 0.0
    c = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def sim_from_cosine(cos: float, beta: float = 0.5) -> float:
    return 0.0 if cos <= 0.0 else beta * cos * cos


def sim_eq2(u, v, beta: float = 0.5) -> float:
    return sim_from_cosine(cosine(u, v), beta)


@dataclass(frozen=True)
class Taxonomy:
    nodes: frozenset[str]
    isa_edges: frozenset[tuple[str, str]]
    max_depth: int | None
    # undirected adjacency, neighbours sorted for reproducible traversal
    neighbours: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_edges(cls, edges) -> "Taxonomy":
        """Validate an is-a edge list ``(child, parent)`` and compute the depth.

        Raises ``ValueError`` naming one edge of a cycle if the graph is cyclic.
        """
        edges = list(dict.fromkeys(edges))
        parents: dict[str, list[str]] = {}
        adj: dict[str, set[str]] = {}
        for child, parent in edges:
            parents.setdefault(child, []).append(parent)
            parents.setdefault(parent, [])
            adj.setdefault(child, set()).add(parent)
            adj.setdefault(parent, set()).add(child)

        # depth in nodes along child->parent chains; roots have depth 1
        depth: dict[str, int] = {}
        on_stack: set[str] = set()
        for start in sorted(parents):
            if start in depth:
                continue
            stack = [(start, iter(parents[start]))]
            on_stack.add(start)
            while stack:
                node, it = stack[-1]
                advanced = False
                for p in it:
                    if p in on_stack:
                        raise ValueError(f"cycle in is-a edges at edge {node} -> {p}")
                    if p not in depth:
                        stack.append((p, iter(parents[p])))
                        on_stack.add(p)
                        advanced = True
                        break
                if advanced:
                    continue
                stack.pop()
                on_stack.discard(node)
                depth[node] = 1 + max((depth[p] for p in parents[node]), default=0)

        return cls(
            nodes=frozenset(parents),
            isa_edges=frozenset(edges),
            max_depth=max(depth.values()) if depth else None,
            neighbours={n: tuple(sorted(ns)) for n, ns in adj.items()},
        )


def load_taxonomy(path: str | os.PathLike) -> Taxonomy:
    edges = []
    for lineno, line in iter_data_lines(path, comments=True):
        parts = line.split("\t")
        if len(parts) != 2 or not all(p.strip() for p in parts):
            raise FormatError("malformed line, expected '<child_id>\\t<parent_id>'", path, lineno)
        child, parent = parts[0].strip(), parts[1].strip()
        if child == parent:
            raise FormatError(f"cycle in is-a edges at edge {child} -> {parent}", path, lineno)
        edges.append((child, parent))
    try:
        return Taxonomy.from_edges(edges)
    except ValueError as exc:
        raise FormatError(str(exc), path) from None


def path_length(tax: Taxonomy, c1: str, c2: str) -> int | None:
    """Nodes on the shortest undirected is-a path, endpoints included."""
    if c1 not in tax.nodes or c2 not in tax.nodes:
        return None
    if c1 == c2:
        return 1
    seen = {c1}
    frontier = deque([(c1, 1)])
    while frontier:
        node, n = frontier.popleft()
        for nb in tax.neighbours[node]:
            if nb == c2:
                return n + 1
            if nb not in seen:
                seen.add(nb)
                frontier.append((nb, n + 1))
    return None


def sim_leacock(tax: Taxonomy, c1: str, c2: str, normalize: bool = True) -> float:
    length = path_length(tax, c1, c2)
    if length is None or tax.max_depth is None:
        return 0.0
    two_d = 2.0 * tax.max_depth
    if not normalize:
        return max(0.0, -math.log(length / two_d))
    # ln(1) = 0 exactly, so a concept scores exactly 1 against itself
    return min(1.0, max(0.0, 1.0 - math.log(length) / math.log(two_d)))


class SimKind(str, enum.Enum):
    EQ2 = "eq2"
    LEACOCK = "leacock"
    NOSIM = "nosim"


@dataclass(frozen=True)
class SimilarityConfig:
    kind: SimKind = SimKind.NOSIM
    beta: float = 0.5
    leacock_raw: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SimKind(self.kind))
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")


def _check_resources(cfg: SimilarityConfig, vectors, tax) -> None:
    if cfg.kind is SimKind.EQ2 and vectors is None:
        raise ValueError("eq2 similarity requires concept vectors")
    if cfg.kind is SimKind.LEACOCK and tax is None:
        raise ValueError("leacock similarity requires a taxonomy")


def sim_dispatch(cfg: SimilarityConfig, c1: str, c2: str,
                 vectors: ConceptVectorSet | None = None, tax: Taxonomy | None = None) -> float:
    _check_resources(cfg, vectors, tax)
    if cfg.kind is SimKind.NOSIM:
        return 1.0 if c1 == c2 else 0.0
    if cfg.kind is SimKind.LEACOCK:
        return sim_leacock(tax, c1, c2, normalize=not cfg.leacock_raw)
    u = vectors.vectors.get(c1)
    v = vectors.vectors.get(c2)
    if u is None or v is None:
        return 0.0
    return sim_eq2(u, v, cfg.beta)


def make_similarity(cfg: SimilarityConfig, vectors: ConceptVectorSet | None = None,
                    tax: Taxonomy | None = None) -> SimilarityFn:
    """Return a memoized ``sim(c1, c2)`` bound to the given resources.

    Values are identical to :func:`sim_dispatch`; symmetric pairs share a cache slot.
    """
    _check_resources(cfg, vectors, tax)
    cache: dict[tuple[str, str], float] = {}

    def sim(c1: str, c2: str) -> float:
        key = (c1, c2) if c1 <= c2 else (c2, c1)
        val = cache.get(key)
        if val is None:
            val = sim_dispatch(cfg, key[0], key[1], vectors, tax)
            cache[key] = val
        return val

    return sim
