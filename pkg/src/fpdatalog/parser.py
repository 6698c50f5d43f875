"""Recursive-descent parser and pretty printer for `.dl` programs."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ir import (
    AggRule,
    BinOp,
    Builtin,
    Compare,
    Const,
    Declaration,
    FuncAtom,
    FuncLookup,
    Negation,
    Program,
    RefModeAtom,
    RelAtom,
    Rule,
    SourceSpan,
    Var,
    is_anonymous,
)


class ParseError(Exception):
    def __init__(self, message, span, expected=()):
        self.span = span
        self.expected = tuple(sorted(set(expected)))
        exp = f" (expected one of: {' '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{span}: {message}{exp}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><-|->|<<|>>|<=|>=|!=|[<>=()\[\],.:+\-*!])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        tok = m.group()
        span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
        if kind != "ws":
            tokens.append(Token(kind if kind != "op" else tok, tok, span))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(pos, pos, line, pos - line_start + 1)))
    return tokens


def _unquote(s):
    return re.sub(r"\\(.)", r"\1", s[1:-1])


_TERMINATORS = {",", ".", "<-", "->", "eof"}


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.wild = 0

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def eat(self, kind):
        if self.tok.kind != kind:
            raise ParseError(f"unexpected {self.tok.text or 'end of input'!r}", self.tok.span, [kind])
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind):
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    # grammar
    def program(self):
        clauses = []
        while self.tok.kind != "eof":
            clauses.append(self.clause())
        return Program(tuple(clauses))

    def clause(self):
        self.wild = 0
        start = self.tok.span
        lhs = self.literals()
        if self.accept("->"):
            rhs = () if self.tok.kind == "." else tuple(self.literals())
            self.eat(".")
            return Declaration(tuple(lhs), rhs, span=start)
        for a in lhs:
            if not isinstance(a, (RelAtom, FuncAtom)):
                raise ParseError("rule heads must be atoms", start, ["->"])
        if self.accept("<-"):
            if self.tok.kind == "ident" and self.tok.text == "agg" and self.peek().kind == "<<":
                agg = self.aggregate()
                body = tuple(self.literals())
                self.eat(".")
                if len(lhs) != 1 or not isinstance(lhs[0], FuncAtom):
                    raise ParseError("aggregate head must be p[keys]=v", start)
                head = lhs[0]
                result, method, value = agg
                if not isinstance(head.value, Var) or head.value.name != result:
                    raise ParseError(f"aggregate result {result} must be the head value", start)
                return AggRule(head, method, value, body, span=start)
            body = tuple(self.literals())
            self.eat(".")
            return Rule(tuple(lhs), body, span=start)
        self.eat(".")
        return Rule(tuple(lhs), (), span=start)

    def aggregate(self):
        self.eat("ident")
        self.eat("<<")
        result = self.eat("ident").text
        self.eat("=")
        method = self.eat("ident").text
        self.eat("(")
        value = self.eat("ident").text
        self.eat(")")
        self.eat(">>")
        return result, method, value

    def literals(self):
        out = [self.literal()]
        while self.accept(","):
            out.append(self.literal())
        return out

    def literal(self):
        span = self.tok.span
        if self.accept("!"):
            return Negation(self.atom(), span=span)
        if self.tok.kind == "ident":
            save, wild = self.i, self.wild
            try:
                a = self.atom()
                if self.tok.kind in _TERMINATORS:
                    return a
            except ParseError:
                pass
            self.i, self.wild = save, wild
        lhs = self.expr()
        op = self.tok
        if op.kind not in ("=", "!=", "<", "<=", ">", ">="):
            raise ParseError(f"unexpected {op.text or 'end of input'!r}", op.span, ["=", "!=", "<", "<=", ">", ">=", ",", "."])
        self.i += 1
        rhs = self.expr()
        return Compare(op.kind, lhs, rhs, span=span)

    def atom(self):
        name_tok = self.eat("ident")
        name, span = name_tok.text, name_tok.span
        if self.tok.kind == "[":
            self.i += 1
            if self.tok.kind == "int" and self.peek().kind == "]" and self.peek(2).kind == "(":
                # primitive type atom such as int[64](x)
                name = f"{name}[{self.eat('int').text}]"
                self.eat("]")
                return RelAtom(name, tuple(self.args()), span=span)
            keys = []
            if self.tok.kind != "]":
                keys.append(self.term())
                while self.accept(","):
                    keys.append(self.term())
            self.eat("]")
            self.eat("=")
            return FuncAtom(name, tuple(keys), self.term(), span=span)
        self.eat("(")
        if self.tok.kind == ")":
            self.i += 1
            return RelAtom(name, (), span=span)
        first = self.term()
        if self.accept(":"):
            value = self.term()
            self.eat(")")
            return RefModeAtom(name, first, value, span=span)
        args = [first]
        while self.accept(","):
            args.append(self.term())
        self.eat(")")
        return RelAtom(name, tuple(args), span=span)

    def args(self):
        self.eat("(")
        out = []
        if self.tok.kind != ")":
            out.append(self.term())
            while self.accept(","):
                out.append(self.term())
        self.eat(")")
        return out

    def term(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text == "_":
                self.wild += 1
                return Var(f"_{self.wild}", span=t.span)
            return Var(t.text, span=t.span)
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text), span=t.span)
        if t.kind == "-" and self.peek().kind == "int":
            self.i += 2
            return Const(-int(self.toks[self.i - 1].text), span=t.span)
        if t.kind == "string":
            self.i += 1
            return Const(_unquote(t.text), span=t.span)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span, ["ident", "int", "string", "_"])

    def expr(self):
        left = self.product()
        while self.tok.kind in ("+", "-"):
            op = self.tok
            self.i += 1
            left = BinOp(op.kind, left, self.product(), span=op.span)
        return left

    def product(self):
        left = self.factor()
        while self.tok.kind == "*":
            op = self.tok
            self.i += 1
            left = BinOp("*", left, self.factor(), span=op.span)
        return left

    def factor(self):
        t = self.tok
        if t.kind == "(":
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        if t.kind == "-":
            self.i += 1
            if self.tok.kind == "int":
                return Const(-int(self.eat("int").text), span=t.span)
            return BinOp("-", Const(0), self.factor(), span=t.span)
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text), span=t.span)
        if t.kind == "string":
            self.i += 1
            return Const(_unquote(t.text), span=t.span)
        if t.kind == "ident":
            if t.text in ("min", "max") and self.peek().kind == "(":
                self.i += 2
                items = [self.expr()]
                while self.accept(","):
                    items.append(self.expr())
                self.eat(")")
                if len(items) < 2:
                    raise ParseError(f"{t.text} needs at least two arguments", t.span, [","])
                e = items[0]
                for it in items[1:]:
                    e = Builtin(t.text, e, it, span=t.span)
                return e
            if self.peek().kind == "[":
                self.i += 2
                keys = []
                if self.tok.kind != "]":
                    keys.append(self.expr())
                    while self.accept(","):
                        keys.append(self.expr())
                self.eat("]")
                return FuncLookup(t.text, tuple(keys), span=t.span)
            return self.term()
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span, ["(", "-", "int", "ident", "string"])


def parse_program(text: str) -> Program:
    """Parse program text. Raises ParseError on the first error."""
    return _Parser(text).program()


def parse_clause(text: str):
    prog = parse_program(text)
    if len(prog.clauses) != 1:
        raise ValueError("expected exactly one clause")
    return prog.clauses[0]


def parse_literal(text: str):
    p = _Parser(text)
    lit = p.literal()
    p.eat("eof")
    return lit


def parse_expr(text: str):
    p = _Parser(text)
    e = p.expr()
    p.eat("eof")
    return e


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2}


def format_expr(e, anon=frozenset()) -> str:
    if isinstance(e, Var):
        return "_" if e.name in anon else e.name
    if isinstance(e, Const):
        if not isinstance(e.value, (int, str)):
            raise ValueError(f"entity constant {e.value} has no textual form")
        return str(e)
    if isinstance(e, FuncLookup):
        return f"{e.pred}[{','.join(format_expr(k, anon) for k in e.keys)}]"
    if isinstance(e, Builtin):
        return f"{e.fn}({format_expr(e.left, anon)},{format_expr(e.right, anon)})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = format_expr(e.left, anon)
        if isinstance(e.left, BinOp) and _PREC[e.left.op] < p:
            left = f"({left})"
        right = format_expr(e.right, anon)
        if isinstance(e.right, BinOp) and _PREC[e.right.op] <= p:
            right = f"({right})"
        if e.op == "*":
            return f"{left}*{right}"
        return f"{left} {e.op} {right}"
    raise TypeError(e)


def format_literal(lit, anon=frozenset()) -> str:
    f = lambda t: format_expr(t, anon)  # noqa: E731
    if isinstance(lit, RelAtom):
        return f"{lit.pred}({','.join(f(a) for a in lit.args)})"
    if isinstance(lit, RefModeAtom):
        return f"{lit.pred}({f(lit.key)}:{f(lit.value)})"
    if isinstance(lit, FuncAtom):
        return f"{lit.pred}[{','.join(f(k) for k in lit.keys)}]={f(lit.value)}"
    if isinstance(lit, Compare):
        return f"{f(lit.lhs)} {lit.op} {f(lit.rhs)}"
    if isinstance(lit, Negation):
        return "!" + format_literal(lit.atom, anon)
    raise TypeError(lit)


def _anonymous_vars(clause):
    """Parser-made wildcard names that occur once and print as `_`."""
    counts = {}
    lits = []
    if isinstance(clause, Rule):
        lits = list(clause.head) + list(clause.body)
    elif isinstance(clause, AggRule):
        lits = [clause.head] + list(clause.body)
    elif isinstance(clause, Declaration):
        lits = list(clause.lhs) + list(clause.rhs)
    order = []
    for lit in lits:
        for t in _literal_terms_in_order(lit):
            counts[t] = counts.get(t, 0) + 1
            order.append(t)
    if isinstance(clause, AggRule):
        counts[clause.value_var] = counts.get(clause.value_var, 0) + 1
    # only the canonical numbering _1, _2, ... in textual order survives a reparse
    anon = set()
    k = 0
    for name in order:
        if is_anonymous(name) and counts[name] == 1:
            k += 1
            if name != f"_{k}":
                return frozenset()
            anon.add(name)
    return frozenset(anon)


def _literal_terms_in_order(lit):
    from .ir import expr_vars

    if isinstance(lit, (RelAtom, RefModeAtom, FuncAtom)):
        return [t.name for t in lit.terms if isinstance(t, Var)]
    if isinstance(lit, Compare):
        return list(expr_vars(lit.lhs)) + list(expr_vars(lit.rhs))
    if isinstance(lit, Negation):
        return _literal_terms_in_order(lit.atom)
    return []


def format_clause(clause, width=78) -> str:
    anon = _anonymous_vars(clause)
    if isinstance(clause, Declaration):
        lhs = ", ".join(format_literal(l, anon) for l in clause.lhs)
        if not clause.rhs:
            return f"{lhs} -> ."
        rhs = ", ".join(format_literal(l, anon) for l in clause.rhs)
        return f"{lhs} -> {rhs}."
    if isinstance(clause, AggRule):
        head = format_literal(clause.head, anon)
        agg = f"agg<<{format_expr(clause.head.value)}={clause.method}({clause.value_var})>>"
        body = [format_literal(l, anon) for l in clause.body]
        return _layout(f"{head} <- {agg}", body, width)
    head = ", ".join(format_literal(h, anon) for h in clause.head)
    if clause.is_fact:
        return f"{head}."
    body = [format_literal(l, anon) for l in clause.body]
    return _layout(f"{head} <-", body, width)


def _layout(prefix, body, width):
    one = f"{prefix} {', '.join(body)}."
    if len(one) <= width:
        return one
    return prefix + "\n   " + ",\n   ".join(body) + "."


def format_program(program: Program) -> str:
    if not program.clauses:
        return ""
    return "\n".join(format_clause(c) for c in program.clauses) + "\n"


__all__ = [
    "ParseError",
    "format_clause",
    "format_expr",
    "format_literal",
    "format_program",
    "parse_clause",
    "parse_expr",
    "parse_literal",
    "parse_program",
    "tokenize",
]
