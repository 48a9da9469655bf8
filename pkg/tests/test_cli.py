import shutil

import pytest

from conceptemb.cli import EXIT_RUNTIME, EXIT_VALIDATION, main


@pytest.fixture
def work(tmp_path, mismatch_dir):
    for f in mismatch_dir.iterdir():
        shutil.copy(f, tmp_path / f.name)
    return tmp_path


def run_cli(*args):
    return main([str(a) for a in args])


def build_vectors(work, method="femb", out="c.vec", *extra):
    args = ["build-vectors", "--method", method, "--word-vectors", work / "words.vec",
            "--lexicon", work / "lexicon.tsv", "--out", work / out, *extra]
    if method == "wemb":
        args += ["--df", work / "df.tsv"]
    return run_cli(*args)


def search(work, sim, out, weighting="bm25", *extra):
    return run_cli("search", "--index", work / "idx.json", "--queries", work / "queries.tsv",
                   "--sim", sim, "--weighting", weighting, "--concept-vectors", work / "c.vec",
                   "--taxonomy", work / "taxonomy.tsv", "--out", work / out, *extra)


def test_build_vectors(work, capsys):
    assert build_vectors(work) == 0
    lines = (work / "c.vec").read_text().splitlines()
    assert lines[0] == "5 5"
    out = capsys.readouterr().out
    assert "concepts\t5" in out and "dim\t5" in out
    # arrests, infarctions, arterial have no stored vector
    assert "missing_words\t3" in out


@pytest.mark.parametrize("method", ["femb", "hemb", "wemb"])
def test_build_vectors_is_byte_identical(work, method):
    assert build_vectors(work, method, "a.vec") == 0
    assert build_vectors(work, method, "b.vec") == 0
    assert (work / "a.vec").read_bytes() == (work / "b.vec").read_bytes()


def test_seed_changes_only_missing_word_contributions(work):
    assert build_vectors(work, "femb", "s0.vec") == 0
    assert build_vectors(work, "femb", "s1.vec", "--seed", "1") == 0
    rows0 = dict(line.split(" ", 1) for line in (work / "s0.vec").read_text().splitlines()[1:])
    rows1 = dict(line.split(" ", 1) for line in (work / "s1.vec").read_text().splitlines()[1:])
    # fracture/skin concepts use only stored words
    assert rows0["C0016658"] == rows1["C0016658"]
    assert rows0["C0018790"] != rows1["C0018790"]


def test_wemb_without_df_fails_before_io(tmp_path, capsys):
    code = run_cli("build-vectors", "--method", "wemb", "--word-vectors", tmp_path / "nope.vec",
                   "--lexicon", tmp_path / "nope.tsv", "--out", tmp_path / "c.vec")
    assert code == EXIT_VALIDATION
    assert "--df" in capsys.readouterr().err
    assert not (tmp_path / "c.vec").exists()


@pytest.mark.parametrize("sim, flag", [("eq2", "--concept-vectors"), ("leacock", "--taxonomy")])
def test_search_resource_flags_validated(tmp_path, capsys, sim, flag):
    code = run_cli("search", "--index", tmp_path / "i", "--queries", tmp_path / "q", "--sim", sim,
                   "--weighting", "piv", "--out", tmp_path / "r")
    assert code == EXIT_VALIDATION
    assert flag in capsys.readouterr().err


def test_bad_parameter_values_are_validation_errors(work, capsys):
    assert run_cli("index", "--docs", work / "docs.tsv", "--out", work / "idx.json") == 0
    assert search(work, "nosim", "r.run", "bm25", "--beta", "0") == EXIT_VALIDATION
    assert search(work, "nosim", "r.run", "piv", "--s", "1.5") == EXIT_VALIDATION
    assert not (work / "r.run").exists()


@pytest.mark.parametrize("argv", [
    ["search", "--sim", "bogus"],
    ["search"],
    ["index", "--docs", "d.tsv", "--out", "i.json", "--k", "0"],
    ["compare", "--run-a", "a", "--run-b", "b", "--qrels", "q", "--samples", "0"],
    [],
])
def test_argparse_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_VALIDATION


def test_parse_failure_leaves_no_output(work, capsys):
    (work / "lexicon.tsv").write_text("C1\tL1\tS1\t--\n")
    code = build_vectors(work)
    assert code == EXIT_VALIDATION
    assert not (work / "c.vec").exists()
    assert "no usable strings" in capsys.readouterr().err


def test_runtime_error_exit_2(work, capsys):
    code = run_cli("index", "--docs", work / "docs.tsv", "--out", work / "missing_dir" / "idx.json")
    assert code == EXIT_RUNTIME


def test_full_pipeline(work, capsys):
    assert build_vectors(work) == 0
    assert run_cli("index", "--docs", work / "docs.tsv", "--out", work / "idx.json") == 0
    assert search(work, "nosim", "nosim.run") == 0
    assert search(work, "eq2", "eq2.run") == 0
    assert search(work, "leacock", "leacock.run", "piv") == 0

    nosim = (work / "nosim.run").read_text().splitlines()
    eq2 = (work / "eq2.run").read_text().splitlines()
    assert not any(line.startswith("Q1 ") for line in nosim)
    assert eq2[0].split()[:4] == ["Q1", "Q0", "D1", "1"]
    assert all(line.split()[5] == "conceptemb" for line in eq2)
    assert all(len(line.split()[4].split(".")[1]) == 6 for line in eq2)

    capsys.readouterr()
    assert run_cli("evaluate", "--run", work / "eq2.run", "--qrels", work / "qrels.txt", "--tsv",
                   "--out", work / "eq2.tsv", "--figure", work / "eq2.png") == 0
    out = capsys.readouterr().out
    assert "map\tQ1\t1.0000" in out
    assert (work / "eq2.tsv").read_text().splitlines() == out.splitlines()
    assert (work / "eq2.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    assert run_cli("evaluate", "--run", work / "nosim.run", "--qrels", work / "qrels.txt", "--complete") == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["query", "AP", "P@10"]
    assert table[1].split()[:2] == ["Q1", "0.0000"]

    assert run_cli("compare", "--run-a", work / "eq2.run", "--run-b", work / "nosim.run",
                   "--qrels", work / "qrels.txt", "--figure", work / "cmp.svg") == 0
    out = capsys.readouterr().out
    assert "queries\t2" in out and "MAP_a\t1.0000" in out and "MAP_b\t0.5000" in out
    assert (work / "cmp.svg").exists()


def test_pipeline_outputs_are_byte_identical(work):
    assert build_vectors(work, "wemb") == 0
    for tag in ("a", "b"):
        assert run_cli("index", "--docs", work / "docs.tsv", "--out", work / f"idx_{tag}.json") == 0
    assert (work / "idx_a.json").read_bytes() == (work / "idx_b.json").read_bytes()
    shutil.copy(work / "idx_a.json", work / "idx.json")
    for sim in ("eq2", "leacock", "nosim"):
        for weighting in ("piv", "bm25"):
            assert search(work, sim, "r1.run", weighting) == 0
            assert search(work, sim, "r2.run", weighting) == 0
            assert (work / "r1.run").read_bytes() == (work / "r2.run").read_bytes()


def test_compare_run_against_itself(work, capsys):
    assert run_cli("index", "--docs", work / "docs.tsv", "--out", work / "idx.json") == 0
    assert search(work, "leacock", "l.run") == 0
    capsys.readouterr()
    assert run_cli("compare", "--run-a", work / "l.run", "--run-b", work / "l.run", "--qrels", work / "qrels.txt",
                   "--metric", "p10") == 0
    out = capsys.readouterr().out
    assert "p_value\t1.000000" in out
    assert "verdict\tnot significant" in out


def test_evaluate_perfect_ranking(work, capsys):
    (work / "perfect.run").write_text("Q1 Q0 D1 1 3.0 x\nQ2 Q0 D2 1 3.0 x\nQ2 Q0 D4 2 2.0 x\nQ2 Q0 D6 3 1.0 x\n")
    assert run_cli("evaluate", "--run", work / "perfect.run", "--qrels", work / "qrels.txt", "--tsv") == 0
    assert "map\tall\t1.0000" in capsys.readouterr().out


def test_bad_run_file_is_validation_error(work, capsys):
    (work / "bad.run").write_text("Q1 Q0 D1 1 1.0 x\nQ1 Q0 D2 3 0.5 x\n")
    assert run_cli("evaluate", "--run", work / "bad.run", "--qrels", work / "qrels.txt") == EXIT_VALIDATION
    assert "rank 3" in capsys.readouterr().err


@pytest.mark.parametrize("command, needles", [
    ("search", ["0.5", "0.2", "1.2", "0.75", "1000", "--leacock-raw", "--min-sim", "file formats"]),
    ("build-vectors", ["femb", "hemb", "wemb", "--seed", "file formats"]),
    ("compare", ["100000", "--max-exact", "--seed"]),
    ("evaluate", ["--figure", "--complete"]),
    ("index", ["--docs"]),
])
def test_help_documents_flags(capsys, command, needles):
    with pytest.raises(SystemExit) as info:
        main([command, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for needle in needles:
        assert needle in text
