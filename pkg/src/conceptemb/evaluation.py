"""Run evaluation (MAP, P@10) and paired significance testing.

Qrels use the TREC format ``<qid> 0 <docid> <grade>``; runs use
``<qid> Q0 <docid> <rank> <score> <tag>``.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._io import FormatError, atomic_write, iter_data_lines

ALPHA = 0.05


@dataclass(frozen=True)
class RankedRun:
    """Per-query ranked ``(doc_id, score)`` lists, best first."""

    rankings: Mapping[str, Sequence[tuple[str, float]]]

    def __post_init__(self):
        for qid, ranking in self.rankings.items():
            docs = [doc for doc, _ in ranking]
            if len(set(docs)) != len(docs):
                raise ValueError(f"duplicate document in ranking of query {qid}")
            for (_, a), (_, b) in zip(ranking, ranking[1:]):
                if b > a:
                    raise ValueError(f"scores of query {qid} are not non-increasing")

    def doc_ids(self, qid: str) -> list[str]:
        return [doc for doc, _ in self.rankings.get(qid, ())]


@dataclass(frozen=True)
class QrelSet:
    judgments: Mapping[tuple[str, str], int]

    def relevant(self, qid: str) -> set[str]:
        return {d for (q, d), g in self.judgments.items() if q == qid and g > 0}

    def relevant_by_query(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for (q, d), g in self.judgments.items():
            rel = out.setdefault(q, set())
            if g > 0:
                rel.add(d)
        return out


def load_qrels(path: str | os.PathLike) -> QrelSet:
    judgments: dict[tuple[str, str], int] = {}
    for lineno, line in iter_data_lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise FormatError("malformed qrels line, expected '<qid> 0 <docid> <grade>'", path, lineno)
        qid, _, docid, raw = parts
        try:
            grade = int(raw)
        except ValueError:
            raise FormatError(f"non-integer relevance grade {raw!r}", path, lineno) from None
        if (qid, docid) in judgments:
            raise FormatError(f"duplicate judgment for ({qid}, {docid})", path, lineno)
        judgments[(qid, docid)] = grade
    return QrelSet(judgments)


def average_precision(ranked: Sequence[str], relevant: set[str] | frozenset[str]) -> float:
    if not relevant:
        raise ValueError("average precision is undefined without relevant documents")
    hits = 0
    total = 0.0
    for rank, doc in enumerate(ranked, start=1):
        if doc in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at_k(ranked: Sequence[str], relevant: set[str] | frozenset[str], k: int = 10) -> float:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return sum(1 for doc in ranked[:k] if doc in relevant) / k


@dataclass(frozen=True)
class EvalReport:
    ap: Mapping[str, float]
    p10: Mapping[str, float]

    @property
    def n_queries(self) -> int:
        return len(self.ap)

    @property
    def map(self) -> float:
        return sum(self.ap.values()) / len(self.ap)

    @property
    def mean_p10(self) -> float:
        return sum(self.p10.values()) / len(self.p10)

    def per_query(self, metric: str) -> Mapping[str, float]:
        if metric == "map":
            return self.ap
        if metric == "p10":
            return self.p10
        raise ValueError(f"unknown metric {metric!r}")


def evaluate_run(run: RankedRun, qrels: QrelSet, queries: Sequence[str] | None = None) -> EvalReport:
    """Score each query of ``run`` (or of ``queries``) that has relevant documents.

    Queries without a relevant document in ``qrels`` are skipped with a
    warning. A listed query missing from the run is scored as an empty ranking.
    """
    rel = qrels.relevant_by_query()
    ap: dict[str, float] = {}
    p10: dict[str, float] = {}
    skipped = []
    for qid in sorted(run.rankings if queries is None else queries):
        relevant = rel.get(qid)
        if not relevant:
            skipped.append(qid)
            continue
        ranked = run.doc_ids(qid)
        ap[qid] = average_precision(ranked, relevant)
        p10[qid] = precision_at_k(ranked, relevant, 10)
    if skipped:
        warnings.warn(f"skipped {len(skipped)} queries without relevant documents: {', '.join(skipped)}",
                      stacklevel=2)
    if not ap:
        raise ValueError("no evaluable queries: none has a relevant document in the qrels")
    return EvalReport(ap, p10)


def report_lines(report: EvalReport) -> list[str]:
    """Machine-readable ``metric<TAB>qid<TAB>value`` lines, aggregate qid ``all``."""
    lines = []
    for qid in report.ap:
        lines.append(f"map\t{qid}\t{report.ap[qid]:.4f}")
        lines.append(f"P_10\t{qid}\t{report.p10[qid]:.4f}")
    lines.append(f"num_q\tall\t{report.n_queries}")
    lines.append(f"map\tall\t{report.map:.4f}")
    lines.append(f"P_10\tall\t{report.mean_p10:.4f}")
    return lines


def format_table(report: EvalReport) -> str:
    width = max([len("query"), len("all")] + [len(q) for q in report.ap])
    rows = [f"{'query':<{width}}  {'AP':>6}  {'P@10':>6}"]
    for qid in report.ap:
        rows.append(f"{qid:<{width}}  {report.ap[qid]:>6.4f}  {report.p10[qid]:>6.4f}")
    rows.append(f"{'all':<{width}}  {report.map:>6.4f}  {report.mean_p10:>6.4f}")
    return "\n".join(rows)


@dataclass(frozen=True)
class SignificanceResult:
    mean_difference: float
    statistic: float
    p_value: float
    mode: str
    permutations: int
    seed: int | None

    def significant(self, alpha: float = ALPHA) -> bool:
        return self.p_value < alpha


def _tie_tolerance(diffs: np.ndarray) -> float:
    return 1e-10 * float(np.abs(diffs).sum())


def fisher_randomization(a: Sequence[float], b: Sequence[float], max_exact: int = 20,
                         samples: int = 100_000, seed: int = 0) -> SignificanceResult:
    """Paired two-sided randomization test on per-query metric values.

    The null distribution flips the sign of each per-query difference
    independently. Up to ``max_exact`` queries all ``2**Q`` assignments are
    enumerated; beyond that ``samples`` random assignments are drawn and the
    observed one is counted in, so ``p >= 1/(samples+1)``.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    q = len(a)
    if q < 2:
        raise ValueError("at least two paired queries are required")
    diffs = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    observed_sum = 0.0
    for d in diffs:
        observed_sum += d
    stat_sum = abs(observed_sum)
    threshold = stat_sum - _tie_tolerance(diffs)

    if q <= max_exact:
        # sums over all sign assignments, accumulated in query order
        sums = np.zeros(1)
        for d in diffs:
            sums = np.concatenate((sums + d, sums - d))
        count = int(np.count_nonzero(np.abs(sums) >= threshold))
        total = sums.size
        mode, used, used_seed = "exact", total, None
        p = count / total
    else:
        if samples < 1:
            raise ValueError("samples must be positive")
        rng = np.random.default_rng(seed)
        count = 0
        remaining = samples
        chunk = max(1, min(samples, 1 << 20) // q)
        while remaining:
            n = min(chunk, remaining)
            signs = rng.integers(0, 2, size=(n, q), dtype=np.int8) * 2 - 1
            sums = signs @ diffs
            count += int(np.count_nonzero(np.abs(sums) >= threshold))
            remaining -= n
        mode, used, used_seed = "sampled", samples + 1, seed
        p = (count + 1) / (samples + 1)

    return SignificanceResult(
        mean_difference=float(observed_sum) / q,
        statistic=float(stat_sum) / q,
        p_value=min(1.0, p),
        mode=mode,
        permutations=used,
        seed=used_seed,
    )


# --- run files ------------------------------------------------------------

def write_run(run: RankedRun, path: str | os.PathLike, tag: str = "conceptemb") -> None:
    if not tag or any(ch.isspace() for ch in tag):
        raise ValueError(f"run tag {tag!r} must be non-empty without whitespace")
    with atomic_write(path) as fh:
        for qid, ranking in run.rankings.items():
            for rank, (doc, score) in enumerate(ranking, start=1):
                fh.write(f"{qid} Q0 {doc} {rank} {score:.6f} {tag}\n")


def read_run(path: str | os.PathLike) -> RankedRun:
    rankings: dict[str, list[tuple[str, float]]] = {}
    seen: dict[str, set[str]] = {}
    for lineno, line in iter_data_lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise FormatError("malformed run line, expected '<qid> Q0 <docid> <rank> <score> <tag>'",
                              path, lineno)
        qid, _, doc, raw_rank, raw_score, _ = parts
        try:
            rank = int(raw_rank)
            score = float(raw_score)
        except ValueError:
            raise FormatError("non-numeric rank or score", path, lineno) from None
        if not math.isfinite(score):
            raise FormatError("non-finite score", path, lineno)
        ranking = rankings.setdefault(qid, [])
        if rank != len(ranking) + 1:
            raise FormatError(f"rank {rank} for query {qid} where {len(ranking) + 1} was expected",
                              path, lineno)
        if ranking and score > ranking[-1][1]:
            raise FormatError(f"score for query {qid} increases at rank {rank}", path, lineno)
        docs = seen.setdefault(qid, set())
        if doc in docs:
            raise FormatError(f"duplicate document {doc} for query {qid}", path, lineno)
        docs.add(doc)
        ranking.append((doc, score))
    return RankedRun(rankings)
