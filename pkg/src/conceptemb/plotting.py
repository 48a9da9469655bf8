"""Figures for evaluation and comparison reports.

Rendering goes through the Agg backend so it works headless; figures are
written next to the tab-delimited report output.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport, SignificanceResult  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 7,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "conceptemb",
}


def _figsize(n_queries: int) -> tuple[float, float]:
    width = min(14.0, max(4.5, 0.35 * n_queries + 1.5))
    return width, 3.2


_STABLE_METADATA = {
    ".png": {"Software": None},
    ".svg": {"Creator": None, "Date": None},
    ".pdf": {"Creator": None, "Producer": None, "CreationDate": None},
}


def _save(fig, path: str | os.PathLike) -> None:
    # strip version/timestamp metadata so repeated renders compare equal
    suffix = os.path.splitext(str(path))[1].lower()
    fmt = suffix.lstrip(".") or "png"
    tmp = f"{path}.tmp{suffix}"
    try:
        fig.savefig(tmp, format=fmt, dpi=150, bbox_inches="tight", metadata=_STABLE_METADATA.get(suffix))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def plot_eval_report(report: EvalReport, path: str | os.PathLike, title: str | None = None) -> None:
    """Grouped bars of per-query AP and P@10 with the aggregates as lines."""
    qids = list(report.ap)
    xs = range(len(qids))
    width = 0.4
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_figsize(len(qids)))
        ax.bar([x - width / 2 for x in xs], [report.ap[q] for q in qids], width, label="AP", color="#4477aa")
        ax.bar([x + width / 2 for x in xs], [report.p10[q] for q in qids], width, label="P@10", color="#ee6677")
        ax.axhline(report.map, color="#4477aa", ls="--", lw=1, label=f"MAP {report.map:.4f}")
        ax.axhline(report.mean_p10, color="#ee6677", ls=":", lw=1, label=f"P@10 {report.mean_p10:.4f}")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(qids, rotation=90)
        ax.set_ylim(0, 1.3)
        ax.set_yticks([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        ax.set_xlabel("query")
        ax.set_ylabel("score")
        ax.set_title(title or f"{report.n_queries} queries")
        ax.legend(loc="upper center", frameon=False, ncol=4)
        _save(fig, path)


def plot_comparison(per_query_a: dict[str, float], per_query_b: dict[str, float], result: SignificanceResult,
                    path: str | os.PathLike, metric: str = "map", labels: tuple[str, str] = ("A", "B")) -> None:
    """Per-query differences (A - B), sorted, annotated with the test outcome."""
    qids = list(per_query_a)
    diffs = sorted(((per_query_a[q] - per_query_b[q], q) for q in qids), reverse=True)
    colors = ["#228833" if d > 0 else "#cc3311" if d < 0 else "#bbbbbb" for d, _ in diffs]
    verdict = "significant" if result.significant() else "not significant"
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_figsize(len(qids)))
        ax.bar(range(len(diffs)), [d for d, _ in diffs], color=colors)
        ax.axhline(0.0, color="black", lw=0.6)
        ax.axhline(result.mean_difference, color="#4477aa", ls="--", lw=1,
                   label=f"mean {result.mean_difference:+.4f}")
        ax.set_xticks(range(len(diffs)))
        ax.set_xticklabels([q for _, q in diffs], rotation=90)
        ax.set_xlabel("query")
        ax.set_ylabel(f"{metric} difference ({labels[0]} - {labels[1]})")
        ax.set_title(f"p = {result.p_value:.4g} ({result.mode}), {verdict}")
        ax.legend(loc="upper right", frameon=False)
        _save(fig, path)
