"""Fact files: one header-less RFC 4180 CSV per EDB predicate (`<pred>.csv`)."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .engine import Database, _empty, unique_rows
from .ir import Program

log = logging.getLogger(__name__)

INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1


class TypeMismatch(ValueError):
    code = "TypeMismatch"

    def __init__(self, file, row, col, value, expected):
        self.file, self.row, self.col = str(file), row, col
        super().__init__(f"TypeMismatch({self.file}, row {row}, col {col}): {value!r} is not {expected}")


class MissingFactFile(UserWarning):
    code = "MissingFactFile"


def edb_predicates(program: Program) -> list:
    """Declared predicates without defining rules, facts or aggregates."""
    defined = program.defined_preds()
    return sorted(p for p in program.schema if p not in defined)


def _parse_int(text, file, row, col, tname, nonneg):
    try:
        v = int(text.strip())
    except ValueError:
        raise TypeMismatch(file, row, col, text, tname) from None
    if v < INT64_MIN or v > INT64_MAX or (nonneg and tname.startswith("uint") and v < 0):
        raise TypeMismatch(file, row, col, text, tname)
    return v


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return [r for r in csv.reader(f) if r]


def write_csv(path, rows):
    """Write rows; strings are quoted, numbers are not."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        for r in rows:
            w.writerow(r)


def load_facts(directory, program: Program, db: Database | None = None) -> Database:
    """Load `<pred>.csv` for every EDB predicate of `program`.

    Refmode files hold `label,value` rows and create the entities they name;
    an entity file holds one label per row. A missing file yields an empty
    relation and a warning.
    """
    directory = Path(directory)
    schema = program.schema
    db = db or Database()
    for pred, info in schema.items():
        db.ensure(pred, info)
    edb = edb_predicates(program)
    # refmode and entity files first so other files can refer to entity labels
    order = sorted(edb, key=lambda p: (schema[p].kind not in ("entity", "refmode"), schema[p].kind != "entity", p))
    for pred in order:
        info = schema[pred]
        path = directory / f"{pred}.csv"
        if info.kind == "entity" and info.refmode and info.refmode in edb:
            if not path.exists():
                continue  # populated by its refmode file
        if not path.exists():
            log.warning("MissingFactFile(%s): %s treated as empty", path, pred)
            continue
        rows = read_csv(path)
        out, ents = [], {}
        for r_i, row in enumerate(rows, start=1):
            if len(row) != info.arity:
                raise TypeMismatch(path, r_i, len(row), ",".join(row), f"{info.arity} columns")
            enc = []
            for c_i, (text, ctype, tname, nn) in enumerate(zip(row, info.types, info.type_names, info.nonneg)):
                if ctype.kind == "int":
                    enc.append(_parse_int(text, path, r_i, c_i, tname, nn))
                elif ctype.kind == "string":
                    enc.append(db.symbols.intern(text))
                else:
                    eid = db.symbols.entity(ctype.entity, text)
                    ents.setdefault(ctype.entity, []).append((eid,))
                    enc.append(eid)
            out.append(tuple(enc))
        for etype, ids in ents.items():
            db.add(etype, ids)
        arr = unique_rows(np.asarray(out, dtype=np.int64).reshape(-1, info.arity)) if out else _empty(info.arity)
        rel = db.relations[pred]
        rel.rows = unique_rows(np.vstack([rel.rows, arr]))
        _check_keys(rel, info, path)
    return db


def _check_keys(rel, info, source):
    """Refmodes must be one-to-one, functional predicates single-valued."""
    from .engine import FunctionalDependencyError, check_functional

    if info.kind == "refmode":
        ents, vals = rel.rows[:, 0], rel.rows[:, 1]
        if len(np.unique(ents)) != len(ents) or len(np.unique(vals)) != len(vals):
            raise FunctionalDependencyError(f"FunctionalDependencyError: {source} is not one-to-one")
    elif info.key_arity is not None:
        check_functional(rel)


def encode_rows(db: Database, program: Program, pred, rows):
    """Encode python values (ints, strings, entity labels) for `pred`."""
    info = program.schema[pred]
    out, ents = [], {}
    for row in rows:
        enc = []
        for v, ctype in zip(row, info.types):
            if ctype.kind == "entity":
                eid = db.symbols.entity(ctype.entity, str(v))
                ents.setdefault(ctype.entity, []).append((eid,))
                enc.append(eid)
            else:
                enc.append(db.encode(v, ctype))
        out.append(tuple(enc))
    for etype, ids in ents.items():
        db.ensure(etype, program.schema[etype])
        db.add(etype, ids)
    return out


def database_from(program: Program, facts: dict) -> Database:
    """Database from `{pred: [python tuples]}`; refmode rows are (label, value)."""
    db = Database()
    for pred, info in program.schema.items():
        db.ensure(pred, info)
    for pred in sorted(facts, key=lambda p: program.schema[p].kind != "refmode"):
        rows = encode_rows(db, program, pred, facts[pred])
        if rows:
            _check_keys(db.add(pred, rows), program.schema[pred], pred)
    return db


def write_facts(directory, facts: dict):
    """Write `{pred: rows}` as `<pred>.csv` files."""
    for pred, rows in facts.items():
        write_csv(Path(directory) / f"{pred}.csv", rows)


__all__ = [
    "MissingFactFile",
    "TypeMismatch",
    "database_from",
    "edb_predicates",
    "encode_rows",
    "load_facts",
    "read_csv",
    "write_csv",
    "write_facts",
]

