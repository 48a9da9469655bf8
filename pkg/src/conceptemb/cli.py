"""Command-line pipeline: build-vectors -> index -> search -> evaluate -> compare.

Exit status is 0 on success, 1 when flags or input files are invalid, and 2
on any other runtime failure. Output files are written atomically, so a
failed command never leaves a partial file behind.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from typing import Sequence

from . import __version__
from ._io import FormatError, atomic_write
from .embedder import Method, build_concept_vectors, load_concept_vectors, missing_words, save_concept_vectors
from .embedding_store import load_df_table, load_word_vectors
from .evaluation import (ALPHA, evaluate_run, fisher_randomization, format_table, load_qrels, read_run,
                         report_lines, write_run)
from .lexicon import load_lexicon
from .retrieval import (WeightingConfig, build_index, load_concept_docs, load_index, run_queries,
                        save_index)
from .similarity import SimilarityConfig, load_taxonomy

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

FORMATS = """\
file formats:
  word / concept vectors  first line "<count> <dim>", then "<token> <v1> ... <vdim>"
  df table                first line "<N>", then "<token>\\t<df>"
  lexicon                 "<concept_id>\\t<term_id>\\t<string_id>\\t<text>", '#' comments
  taxonomy                "<child_id>\\t<parent_id>" is-a edges, '#' comments
  docs / queries          "<id>\\t<concept_id> <concept_id> ..." (repeats encode tf)
  run                     "<qid> Q0 <docid> <rank> <score> <tag>"
  qrels                   "<qid> 0 <docid> <grade>", grade > 0 is relevant
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    def _get_help_string(self, action):
        # required flags and switches have no meaningful default to show
        if action.default is None or action.default is False:
            return action.help or ""
        return super()._get_help_string(action)


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {raw}")
    return value


def _seed(raw: str) -> int:
    value = int(raw, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conceptemb", description=__doc__.split("\n\n")[0], epilog=FORMATS,
                     formatter_class=_Formatter, allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, epilog=FORMATS,
                              formatter_class=_Formatter, allow_abbrev=False)

    p = add("build-vectors", "Build concept vectors from word vectors and a concept lexicon.")
    p.add_argument("--method", required=True, choices=[m.value for m in Method],
                   help="femb: mean of distinct words; hemb: nested string/term mean; wemb: idf-weighted")
    p.add_argument("--word-vectors", required=True, metavar="PATH", help="word vectors (text format)")
    p.add_argument("--lexicon", required=True, metavar="PATH", help="concept lexicon TSV")
    p.add_argument("--df", metavar="PATH", help="document-frequency table (required for wemb only)")
    p.add_argument("--out", required=True, metavar="PATH", help="output concept-vector file")
    p.add_argument("--seed", type=_seed, default=0, help="seed for fallback vectors of missing words")
    p.set_defaults(func=cmd_build_vectors)

    p = add("index", "Index a concept-annotated document collection.")
    p.add_argument("--docs", required=True, metavar="PATH", help="documents file")
    p.add_argument("--out", required=True, metavar="PATH", help="output index file (JSON)")
    p.set_defaults(func=cmd_index)

    p = add("search", "Rank indexed documents for each query and write a TREC run.")
    p.add_argument("--index", required=True, metavar="PATH")
    p.add_argument("--queries", required=True, metavar="PATH", help="queries file (same format as docs)")
    p.add_argument("--sim", required=True, choices=["eq2", "leacock", "nosim"],
                   help="inter-concept similarity: eq2 = beta*cos^2 clamped at 0; leacock = is-a path; "
                        "nosim = exact match")
    p.add_argument("--weighting", required=True, choices=["piv", "bm25"])
    p.add_argument("--concept-vectors", metavar="PATH", help="concept vectors (required for eq2)")
    p.add_argument("--taxonomy", metavar="PATH", help="is-a edges (required for leacock)")
    p.add_argument("--beta", type=float, default=0.5, help="eq2 scale, in (0, 1]")
    p.add_argument("--leacock-raw", action="store_true",
                   help="use -ln(len/2D) without dividing by ln(2D)")
    p.add_argument("--min-sim", type=float, default=0.0,
                   help="ignore non-exact matches with similarity below this value")
    p.add_argument("--k", type=_positive_int, default=1000, help="documents kept per query")
    p.add_argument("--s", type=float, default=0.2, help="pivoted slope")
    p.add_argument("--k1", type=float, default=1.2, help="BM25 k1")
    p.add_argument("--b", type=float, default=0.75, help="BM25 b")
    p.add_argument("--k3", type=float, default=1000.0, help="BM25 query-side k3")
    p.add_argument("--tag", default="conceptemb", help="run tag written in the last column")
    p.add_argument("--out", required=True, metavar="PATH", help="output run file")
    p.set_defaults(func=cmd_search)

    p = add("evaluate", "Report per-query AP and P@10 with MAP and mean P@10.")
    p.add_argument("--run", required=True, metavar="PATH")
    p.add_argument("--qrels", required=True, metavar="PATH")
    p.add_argument("--complete", action="store_true",
                   help="also score qrels queries absent from the run (as empty rankings)")
    p.add_argument("--tsv", action="store_true",
                   help="print metric<TAB>qid<TAB>value lines instead of the aligned table")
    p.add_argument("--out", metavar="PATH", help="also write the metric<TAB>qid<TAB>value lines here")
    p.add_argument("--figure", metavar="PATH", help="render per-query bars (png/pdf/svg)")
    p.set_defaults(func=cmd_evaluate)

    p = add("compare", "Compare two runs with a paired Fisher randomization test.")
    p.add_argument("--run-a", required=True, metavar="PATH")
    p.add_argument("--run-b", required=True, metavar="PATH")
    p.add_argument("--qrels", required=True, metavar="PATH")
    p.add_argument("--metric", choices=["map", "p10"], default="map", help="per-query metric to test")
    p.add_argument("--samples", type=_positive_int, default=100_000,
                   help="random sign assignments when the query count exceeds --max-exact")
    p.add_argument("--max-exact", type=int, default=20, help="enumerate all 2^Q assignments up to this Q")
    p.add_argument("--seed", type=_seed, default=0, help="seed for sampled mode")
    p.add_argument("--figure", metavar="PATH", help="render per-query differences (png/pdf/svg)")
    p.set_defaults(func=cmd_compare)
    return parser


# --- validation (no I/O) --------------------------------------------------

def validate(args: argparse.Namespace) -> None:
    if args.command == "build-vectors":
        if args.method == "wemb" and not args.df:
            raise UsageError("--method wemb requires --df")
        if args.method != "wemb" and args.df:
            raise UsageError(f"--df is only used with --method wemb, not {args.method}")
    elif args.command == "search":
        if args.sim == "eq2" and not args.concept_vectors:
            raise UsageError("--sim eq2 requires --concept-vectors")
        if args.sim == "leacock" and not args.taxonomy:
            raise UsageError("--sim leacock requires --taxonomy")
        if args.min_sim < 0:
            raise UsageError("--min-sim must be >= 0")
        try:
            args.scfg = SimilarityConfig(args.sim, args.beta, args.leacock_raw)
            args.wcfg = WeightingConfig(args.weighting, args.s, args.k1, args.b, args.k3)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not args.tag or any(ch.isspace() for ch in args.tag):
            raise UsageError("--tag must be non-empty without whitespace")
    elif args.command == "compare":
        if args.max_exact < 1:
            raise UsageError("--max-exact must be positive")


# --- subcommands ----------------------------------------------------------

def cmd_build_vectors(args) -> None:
    table = load_word_vectors(args.word_vectors, fallback_seed=args.seed)
    lexicon = load_lexicon(args.lexicon)
    dfs = load_df_table(args.df) if args.df else None
    vset = build_concept_vectors(lexicon, args.method, table, dfs)
    save_concept_vectors(vset, args.out)
    print(f"concepts\t{len(vset)}")
    print(f"dim\t{vset.dim}")
    print(f"missing_words\t{len(missing_words(lexicon, table))}")


def cmd_index(args) -> None:
    idx = build_index(load_concept_docs(args.docs))
    save_index(idx, args.out)
    print(f"docs\t{idx.n_docs}")
    print(f"concepts\t{len(idx.df)}")
    print(f"avdl\t{idx.avdl:.4f}")


def cmd_search(args) -> None:
    idx = load_index(args.index)
    queries = load_concept_docs(args.queries, allow_empty=True)
    vectors = load_concept_vectors(args.concept_vectors) if args.sim == "eq2" else None
    tax = load_taxonomy(args.taxonomy) if args.sim == "leacock" else None
    run = run_queries(queries, idx, args.wcfg, args.scfg, vectors, tax, k=args.k, min_sim=args.min_sim)
    write_run(run, args.out, tag=args.tag)
    print(f"queries\t{len(run.rankings)}")
    print(f"retrieved\t{sum(len(r) for r in run.rankings.values())}")


def cmd_evaluate(args) -> None:
    run, qrels = read_run(args.run), load_qrels(args.qrels)
    queries = None
    if args.complete:
        queries = sorted(set(run.rankings) | {q for q, _ in qrels.judgments})
    report = evaluate_run(run, qrels, queries)
    lines = report_lines(report)
    if args.out:
        with atomic_write(args.out) as fh:
            fh.write("\n".join(lines) + "\n")
    if args.figure:
        from .plotting import plot_eval_report

        plot_eval_report(report, args.figure, title=args.run)
    print("\n".join(lines) if args.tsv else format_table(report))


def cmd_compare(args) -> None:
    run_a, run_b = read_run(args.run_a), read_run(args.run_b)
    qrels = load_qrels(args.qrels)
    queries = sorted(set(run_a.rankings) | set(run_b.rankings))
    rep_a = evaluate_run(run_a, qrels, queries)
    rep_b = evaluate_run(run_b, qrels, queries)
    a, b = rep_a.per_query(args.metric), rep_b.per_query(args.metric)
    qids = list(a)
    result = fisher_randomization([a[q] for q in qids], [b[q] for q in qids], max_exact=args.max_exact,
                                  samples=args.samples, seed=args.seed)
    name = "MAP" if args.metric == "map" else "P@10"
    verdict = "significant" if result.significant(ALPHA) else "not significant"
    print(f"queries\t{len(qids)}")
    print(f"{name}_a\t{sum(a.values()) / len(a):.4f}")
    print(f"{name}_b\t{sum(b.values()) / len(b):.4f}")
    print(f"mean_difference\t{result.mean_difference:+.6f}")
    print(f"p_value\t{result.p_value:.6f}")
    print(f"mode\t{result.mode}\t{result.permutations}")
    print(f"verdict\t{verdict} at alpha={ALPHA}")
    if args.figure:
        from .plotting import plot_comparison

        plot_comparison(a, b, result, args.figure, metric=args.metric, labels=("A", "B"))


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        validate(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"conceptemb {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            args.func(args)
        except (FormatError, ValueError) as exc:
            print(f"conceptemb {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except Exception as exc:  # noqa: BLE001
            print(f"conceptemb {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
