import pytest

from fpdatalog.corpus import PRODUCTION, digit_facts, production_facts, puzzle_program, PUZZLES
from fpdatalog.engine import FunctionalDependencyError, query
from fpdatalog.facts import TypeMismatch, database_from, edb_predicates, load_facts, write_facts
from fpdatalog.parser import parse_program


def test_edb_predicates(i_am_sam, flights_cmr):
    assert edb_predicates(i_am_sam) == ["digit", "val"]
    assert edb_predicates(flights_cmr) == ["e"]


def test_round_trip_through_csv(tmp_path):
    program = parse_program(PRODUCTION)
    facts = production_facts((1, 500), stride=25)
    write_facts(tmp_path, facts)
    a = load_facts(tmp_path, program)
    b = database_from(program, facts)
    for pred in edb_predicates(program):
        assert query(a, pred) == query(b, pred)


def test_refmode_creates_entities(tmp_path, i_am_sam):
    write_facts(tmp_path, digit_facts())
    db = load_facts(tmp_path, i_am_sam)
    assert len(db["digit"].rows) == 10
    assert query(db, "val")[0] == ("0", 0)


def test_type_mismatch_reports_location(tmp_path, flights):
    (tmp_path / "e.csv").write_text('"Sydney","A",12\n"A","B",x1\n')
    with pytest.raises(TypeMismatch) as e:
        load_facts(tmp_path, flights)
    assert e.value.row == 2 and e.value.col == 2


def test_unsigned_rejects_negative(tmp_path):
    program = parse_program(puzzle_program(PUZZLES[0]))
    (tmp_path / "val.csv").write_text('"0",-1\n')
    with pytest.raises(TypeMismatch):
        load_facts(tmp_path, program)


def test_refmode_must_be_one_to_one(tmp_path, i_am_sam):
    (tmp_path / "val.csv").write_text('"a",1\n"b",1\n')
    with pytest.raises(FunctionalDependencyError):
        load_facts(tmp_path, i_am_sam)


def test_missing_file_is_empty(tmp_path, flights, caplog):
    db = load_facts(tmp_path, flights)
    assert len(db["e"].rows) == 0
    assert "MissingFactFile" in caplog.text
