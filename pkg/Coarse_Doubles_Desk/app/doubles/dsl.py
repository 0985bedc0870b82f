"""Cross-metric expression language.

Grammar (left-associative, '-' is binary only)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := INT | VAR | 'dxy' | ('abs' | 'min' | 'max') '(' args ')' | '(' expr ')'

VAR is one of x0..x3 / y0..y3 (coordinates of the two points), `dxy` is the base
distance between them. Values are integers; only the final value is checked
against the 1-quantum floor.
"""
from __future__ import annotations
import re
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EvalError, ParseError
from .models import MAX_QUANTA, FiniteMetric

MAX_SOURCE_BYTES = 64 * 1024

VARIABLES = tuple(f"x{k}" for k in range(4)) + tuple(f"y{k}" for k in range(4))
FUNCTIONS = {"abs": 1, "min": 2, "max": 2}


# ================================================================
# Syntax tree
# ================================================================
@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def side(self) -> str:
        return self.name[0]

    @property
    def coord(self) -> int:
        return int(self.name[1])


@dataclass(frozen=True)
class Dxy:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "CrossExpr"
    right: "CrossExpr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple["CrossExpr", ...]


CrossExpr = Union[Num, Var, Dxy, BinOp, Call]

_PREC = {"+": 1, "-": 1, "*": 2}


# ================================================================
# Tokenizer
# ================================================================
_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*(),]))")


@dataclass(frozen=True)
class _Tok:
    kind: str      # int | name | op | eof
    text: str
    pos: int       # character offset


def _tokenize(text: str) -> List[_Tok]:
    toks: List[_Tok] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            pos = len(text)
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(_byte_offset(text, start), frozenset({"INT", "VAR", "dxy", "(", "+", "-", "*", ")", ","}),
                             f"unexpected character {text[start]!r}")
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


# ================================================================
# Recursive-descent parser
# ================================================================
class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.k = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.k]

    def fail(self, expected: Sequence[str], message: str = "", tok: Optional[_Tok] = None) -> ParseError:
        tok = tok or self.cur
        return ParseError(_byte_offset(self.text, tok.pos), frozenset(expected), message)

    def take(self, text: str) -> _Tok:
        if self.cur.text != text or self.cur.kind not in ("op",):
            raise self.fail([text], f"expected {text!r}, found {self.cur.text or 'end of input'!r}")
        tok = self.cur
        self.k += 1
        return tok

    def parse(self) -> CrossExpr:
        node = self.expr()
        if self.cur.kind != "eof":
            raise self.fail(["+", "-", "*", "end of input"], f"unexpected {self.cur.text!r}")
        return node

    def expr(self) -> CrossExpr:
        node = self.term()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.cur.text
            self.k += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> CrossExpr:
        node = self.factor()
        while self.cur.kind == "op" and self.cur.text == "*":
            self.k += 1
            node = BinOp("*", node, self.factor())
        return node

    def factor(self) -> CrossExpr:
        tok = self.cur
        if tok.kind == "int":
            self.k += 1
            return Num(int(tok.text))
        if tok.kind == "name":
            if tok.text in VARIABLES:
                self.k += 1
                return Var(tok.text)
            if tok.text == "dxy":
                self.k += 1
                return Dxy()
            if tok.text in FUNCTIONS:
                self.k += 1
                return self.call(tok)
            raise self.fail(list(VARIABLES) + ["dxy"] + list(FUNCTIONS), f"unknown name {tok.text!r}")
        if tok.kind == "op" and tok.text == "(":
            self.k += 1
            node = self.expr()
            self.take(")")
            return node
        raise self.fail(["INT", "VAR", "dxy", "abs", "min", "max", "("],
                        f"unexpected {tok.text or 'end of input'!r}")

    def call(self, name_tok: _Tok) -> CrossExpr:
        fn = name_tok.text
        arity = FUNCTIONS[fn]
        self.take("(")
        args = [self.expr()]
        while len(args) < arity:
            if not (self.cur.kind == "op" and self.cur.text == ","):
                noun = "argument" if arity == 1 else "arguments"
                raise self.fail([","], f"{fn} requires {arity} {noun}")
            self.k += 1
            args.append(self.expr())
        if self.cur.kind == "op" and self.cur.text == ",":
            noun = "argument" if arity == 1 else "arguments"
            raise self.fail([")"], f"{fn} takes {arity} {noun}")
        self.take(")")
        return Call(fn, tuple(args))


def parse_cross_expr(text: str) -> CrossExpr:
    if len(text.encode("utf-8")) > MAX_SOURCE_BYTES:
        raise ParseError(0, frozenset(), "expression exceeds 64 KiB")
    return _Parser(text).parse()


# ================================================================
# Printer
# ================================================================
def to_text(e: CrossExpr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Dxy):
        return "dxy"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(to_text(a) for a in e.args)})"
    mine = _PREC[e.op]
    left = to_text(e.left)
    if isinstance(e.left, BinOp) and _PREC[e.left.op] < mine:
        left = f"({left})"
    right = to_text(e.right)
    if isinstance(e.right, BinOp) and _PREC[e.right.op] <= mine:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def terms(e: CrossExpr) -> List[CrossExpr]:
    """Top-level additive terms of a left-associated +/- chain."""
    if isinstance(e, BinOp) and e.op in ("+", "-"):
        return terms(e.left) + [e.right]
    return [e]


def variables(e: CrossExpr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        out = set()
        for a in e.args:
            out |= variables(a)
        return out
    return set()


def required_dim(e: CrossExpr) -> int:
    names = variables(e)
    return 1 + max((int(n[1]) for n in names), default=-1)


# ================================================================
# Evaluation
# ================================================================
def _fold(e: CrossExpr, x: Any, y: Any, dxy: Any, lo: Callable, hi: Callable) -> Any:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Dxy):
        return dxy
    if isinstance(e, Var):
        coords = x if e.side == "x" else y
        if e.coord >= len(coords):
            raise EvalError("arity", f"{e.name} needs coordinate {e.coord} but labels have {len(coords)}")
        return coords[e.coord]
    if isinstance(e, Call):
        vals = [_fold(a, x, y, dxy, lo, hi) for a in e.args]
        if e.fn == "abs":
            return abs(vals[0])
        return lo(vals[0], vals[1]) if e.fn == "min" else hi(vals[0], vals[1])
    a = _fold(e.left, x, y, dxy, lo, hi)
    b = _fold(e.right, x, y, dxy, lo, hi)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    return a * b


def eval_cross_expr(e: CrossExpr, x_label: Sequence[int], y_label: Sequence[int], base_distance: int) -> int:
    value = int(_fold(e, tuple(x_label), tuple(y_label), int(base_distance), min, max))
    if value < 1:
        raise EvalError("floor", f"value {value} below the 1-quantum floor", value)
    if value > MAX_QUANTA:
        raise EvalError("overflow", f"value {value} exceeds the 2^40 cap", value)
    return value


def eval_cross_matrix(e: CrossExpr, base: FiniteMetric) -> np.ndarray:
    """Vectorized evaluation over every (x_i, y_j) pair of `base`.

    The fold runs on Python-int object arrays so intermediate values never wrap;
    the floor and the 2^40 cap are checked before the cast to int64.
    """
    n = base.n
    need = required_dim(e)
    if need and (base.labels is None or base.dim < need):
        raise EvalError("arity", f"expression needs {need} coordinate(s), base has {base.dim}")
    if base.labels is not None and base.dim:
        coords = np.array([[int(v) for v in lab] for lab in base.labels], dtype=object).reshape(n, base.dim)
        xs = [coords[:, k][:, None] for k in range(base.dim)]
        ys = [coords[:, k][None, :] for k in range(base.dim)]
    else:
        xs, ys = [], []
    raw = _fold(e, xs, ys, base.dist.astype(object), np.minimum, np.maximum)
    out = np.broadcast_to(np.asarray(raw, dtype=object), (n, n))
    low = int(out.min())
    if low < 1:
        i, j = np.unravel_index(int(np.argmin(out)), out.shape)
        raise EvalError("floor", f"value {low} below the 1-quantum floor at ({i}, {j})", low)
    high = int(out.max())
    if high > MAX_QUANTA:
        i, j = np.unravel_index(int(np.argmax(out)), out.shape)
        raise EvalError("overflow", f"value {high} exceeds the 2^40 cap at ({i}, {j})", high)
    return out.astype(np.int64)
