import pytest

from conftest import FIXTURES
from fpdatalog.cli import main

PROGRAMS = {k: str(FIXTURES / f"{k}.dl") for k in ("i_am_sam", "engine", "engine_naive", "flights", "flights_cmr", "i_am_sam_broken_filter")}
DIGITS = str(FIXTURES / "digits")


def test_run_prints_sorted_tuples(capsys):
    assert main(["run", PROGRAMS["i_am_sam"], "--facts", DIGITS]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == sorted(lines) and "9,7,5,6" in lines and len(lines) == 7


def test_run_transformed_same_output(capsys):
    main(["run", PROGRAMS["i_am_sam"], "--facts", DIGITS])
    a = capsys.readouterr().out
    main(["run", PROGRAMS["i_am_sam"], "--facts", DIGITS, "--transform"])
    assert capsys.readouterr().out == a


def test_transform_prints_program(capsys):
    assert main(["transform", PROGRAMS["engine"]]) == 0
    assert "ub_e[]=n <- n = max(ub_p[],ub_s[])." in capsys.readouterr().out


def test_naive_engine_exit_code(capsys):
    assert main(["run", PROGRAMS["engine_naive"]]) == 1
    assert "RecursionThroughAggregation" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.dl"
    bad.write_text("p(x) <- q(x)")
    assert main(["run", str(bad)]) == 1
    assert "1:" in capsys.readouterr().err


def test_limit_exit_code(tmp_path, capsys):
    facts = tmp_path / "f"
    assert main(["gen-graph", "--preset", "1", "--out", str(facts)]) == 0
    assert main(["run", PROGRAMS["flights"], "--facts", str(facts), "--max-iterations", "1"]) == 2
    assert "LimitExceeded" in capsys.readouterr().err


def test_diff_identical_and_broken(capsys):
    assert main(["diff", PROGRAMS["i_am_sam"], "--facts", DIGITS]) == 0
    assert "no differences" in capsys.readouterr().out
    assert main(["diff", PROGRAMS["i_am_sam"], "--facts", DIGITS, "--against", PROGRAMS["i_am_sam_broken_filter"]]) == 1
    out = capsys.readouterr().out
    assert out.startswith("solution: 7 missing, 0 extra")


def test_diff_without_filters(tmp_path, capsys):
    p = tmp_path / "p.dl"
    p.write_text("a(x) -> int[64](x).\nb(x) -> int[64](x).\nb(x) <- a(x).\n")
    assert main(["diff", str(p)]) == 0
    assert "identical programs" in capsys.readouterr().out


def test_bench_corpus_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--corpus", "Engine Set2", "--repeat", "1", "--warmup", "0", "--out", str(out)]) == 0
    assert out.read_text().startswith("benchmark,variant")
    assert "Engine Set2" in capsys.readouterr().out


def test_bench_files_with_cmr(tmp_path, capsys):
    facts = tmp_path / "f"
    main(["gen-graph", "--family", "disjoint-complete", "--n", "4", "--m", "2", "--out", str(facts)])
    rc = main(["bench", PROGRAMS["flights"], "--cmr", PROGRAMS["flights_cmr"], "--facts", str(facts),
               "--variants", "original,fp,cmr,cmr+fp", "--repeat", "1", "--warmup", "0"])
    assert rc == 0
    assert "cmr+fp" in capsys.readouterr().out


def test_deps_dot(capsys):
    assert main(["deps", PROGRAMS["engine"]]) == 0
    out = capsys.readouterr().out
    assert out.startswith("digraph deps") and '"e" -> "s"' in out


def test_corpus_writes_files(tmp_path):
    assert main(["corpus", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "send_more_money" / "program.dl").exists()
    assert (tmp_path / "cmr_graph3" / "cmr.dl").exists()
    assert (tmp_path / "engine_set1" / "facts" / "s.csv").exists()


def test_gen_graph_stdout(capsys):
    assert main(["gen-graph", "--preset", "11"]) == 0
    assert capsys.readouterr().out.startswith('"')


def test_usage_errors():
    with pytest.raises(SystemExit):
        main(["run"])
    assert main(["gen-graph"]) == 1
