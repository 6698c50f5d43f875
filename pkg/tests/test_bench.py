import csv

import pytest

from fpdatalog.bench import (
    CSV_COLUMNS,
    BenchConfig,
    answers_hash,
    run_benchmark,
    run_config,
    write_report_csv,
)
from fpdatalog.corpus import get_benchmark
from fpdatalog.facts import write_facts


def test_run_benchmark_reports_variants():
    rep = run_benchmark(get_benchmark("Flights"), repeat=1, warmup=0)
    assert [r.variant for r in rep.results] == ["original", "fp", "cmr", "cmr+fp"]
    assert not rep.failed
    assert rep.result("original").relative_pct == 100.0
    assert rep.result("fp").domain_ratio is not None
    assert rep.result("original").domain_ratio is None
    assert "Flights" in rep.format()


def test_csv_report(tmp_path):
    rep = run_benchmark(get_benchmark("I*AM=SAM"), repeat=1, warmup=0)
    path = tmp_path / "out" / "r.csv"
    write_report_csv(path, [rep])
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r[1] for r in rows[1:]] == ["original", "fp"]
    assert rows[1][-1] == rows[2][-1]


def test_run_config_from_files(tmp_path):
    b = get_benchmark("Engine Set2")
    (tmp_path / "p.dl").write_text(b.program)
    write_facts(tmp_path / "facts", b.facts)
    rep = run_config(BenchConfig(program=str(tmp_path / "p.dl"), facts=str(tmp_path / "facts"), repeat=1, warmup=0))
    assert not rep.failed
    assert rep.result("fp").instantiations < rep.result("original").instantiations


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(repeat=0)
    with pytest.raises(ValueError):
        BenchConfig(variants=("fast",))


def test_answers_hash_is_order_sensitive_and_stable():
    assert answers_hash([(1, 2)]) == answers_hash([(1, 2)])
    assert answers_hash([(1, 2), (3, 4)]) != answers_hash([(1, 2)])
