"""Bottom-up Datalog with arithmetic constraints and a filter-predicate optimizer.

Typical use::

    from fpdatalog import parse_program, transform, evaluate, query
    program = parse_program(text)
    db, stats = evaluate(transform(program).program, edb)
"""

from .analysis import build_dep_graph, find_generator_chains, safety_order, stratify
from .engine import Database, EvalStats, Limits, eval_aggregate, evaluate, query
from .facts import database_from, load_facts
from .interval import Interval, bound_exprs, lower_constraint
from .ir import Program, validate
from .parser import format_program, parse_program
from .transform import transform, transform_program

__all__ = [
    "Database",
    "EvalStats",
    "Interval",
    "Limits",
    "Program",
    "bound_exprs",
    "build_dep_graph",
    "database_from",
    "eval_aggregate",
    "evaluate",
    "find_generator_chains",
    "format_program",
    "load_facts",
    "lower_constraint",
    "parse_program",
    "query",
    "safety_order",
    "stratify",
    "transform",
    "transform_program",
    "validate",
]
