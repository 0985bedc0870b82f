import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doubles.double_space import make_catalog_double
from doubles.dsl import (
    VARIABLES,
    BinOp,
    Call,
    Dxy,
    Num,
    Var,
    eval_cross_expr,
    eval_cross_matrix,
    parse_cross_expr,
    required_dim,
    terms,
    to_text,
)
from doubles.errors import EvalError, ParseError
from doubles.metric_core import generate_space

WEDGE = "abs(x0-y0)+min(x0,y0)+1"


# ---------- Parsing ----------
def test_parse_wedge():
    e = parse_cross_expr(WEDGE)
    assert len(terms(e)) == 3
    assert terms(e)[-1] == Num(1)
    assert required_dim(e) == 1


def test_min_needs_two_arguments():
    with pytest.raises(ParseError) as exc:
        parse_cross_expr("min(x0)")
    assert exc.value.position == 6
    assert exc.value.expected == frozenset({","})
    assert "min requires 2 arguments" in str(exc.value)


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as exc:
        parse_cross_expr("x0 + z9")
    assert exc.value.position == 5
    with pytest.raises(ParseError):
        parse_cross_expr("abs(x0, y0)")
    with pytest.raises(ParseError):
        parse_cross_expr("(x0 + 1")
    with pytest.raises(ParseError):
        parse_cross_expr("-x0")
    with pytest.raises(ParseError) as exc:
        parse_cross_expr("x0 $ 1")
    assert exc.value.position == 3


def test_source_size_limit():
    with pytest.raises(ParseError) as exc:
        parse_cross_expr("1+" * 40000 + "1")
    assert exc.value.position == 0


def test_subtraction_is_left_associative():
    e = parse_cross_expr("10 - 3 - 2")
    assert e == BinOp("-", BinOp("-", Num(10), Num(3)), Num(2))
    assert eval_cross_expr(e, (0,), (0,), 0) == 5


# ---------- Evaluation ----------
def test_wedge_values():
    assert eval_cross_expr(parse_cross_expr(WEDGE), (3,), (3,), 0) == 4
    assert eval_cross_expr(parse_cross_expr("dxy + 1"), (2,), (9,), 7) == 8


def test_floor_error():
    with pytest.raises(EvalError) as exc:
        eval_cross_expr(parse_cross_expr("x0 - y0"), (1,), (5,), 4)
    assert exc.value.reason == "floor"
    assert exc.value.value == -4


def test_arity_error():
    with pytest.raises(EvalError) as exc:
        eval_cross_expr(parse_cross_expr("x1 + 1"), (3,), (3,), 0)
    assert exc.value.reason == "arity"


def test_dxy_plus_one_is_the_unit_double():
    base = generate_space("halfline", None, 12)
    via_dsl = make_catalog_double(base, "dsl", {"expr": "dxy + 1"})
    assert via_dsl == make_catalog_double(base, "lambda", {"lambda": 1})


def test_matrix_evaluation_matches_pointwise():
    base = generate_space("grid", {"width": 4}, 12)
    e = parse_cross_expr("dxy + abs(x1 - y1) + max(x0, y0) + 1")
    m = eval_cross_matrix(e, base)
    for i in range(base.n):
        for j in range(base.n):
            assert m[i, j] == eval_cross_expr(e, base.labels[i], base.labels[j], base.dist[i, j])


def test_matrix_floor_error():
    base = generate_space("halfline", None, 4)
    with pytest.raises(EvalError) as exc:
        eval_cross_matrix(parse_cross_expr("x0 - y0 + 1"), base)
    assert exc.value.reason == "floor"
    assert exc.value.value == -2


def test_matrix_and_pointwise_agree_on_overflow():
    base = generate_space("halfline", None, 8)
    e = parse_cross_expr("x0 * 4294967296 * 4294967296 + dxy + 1")
    with pytest.raises(EvalError) as pointwise:
        eval_cross_expr(e, base.labels[3], base.labels[5], base.dist[3, 5])
    with pytest.raises(EvalError) as matrix:
        eval_cross_matrix(e, base)
    assert pointwise.value.reason == matrix.value.reason == "overflow"
    # largest at x = 7, y = 0
    assert matrix.value.value == 7 * 2**64 + 8


def test_oversized_literal_is_an_eval_error():
    base = generate_space("halfline", None, 4)
    with pytest.raises(EvalError) as exc:
        eval_cross_matrix(parse_cross_expr("99999999999999999999 + dxy"), base)
    assert exc.value.reason == "overflow"

# ---------- Printing ----------
@st.composite
def cross_exprs(draw, depth: int = 6):
    choice = draw(st.sampled_from(["leaf", "bin", "call"])) if depth > 0 else "leaf"
    if choice == "leaf":
        return draw(
            st.one_of(
                st.integers(0, 999).map(Num),
                st.sampled_from(VARIABLES).map(Var),
                st.just(Dxy()),
            )
        )
    if choice == "bin":
        op = draw(st.sampled_from(["+", "-", "*"]))
        return BinOp(op, draw(cross_exprs(depth - 1)), draw(cross_exprs(depth - 1)))
    fn = draw(st.sampled_from(["abs", "min", "max"]))
    arity = 1 if fn == "abs" else 2
    return Call(fn, tuple(draw(cross_exprs(depth - 1)) for _ in range(arity)))


@settings(max_examples=500, deadline=None)
@given(cross_exprs())
def test_printed_expressions_parse_back(e):
    assert parse_cross_expr(to_text(e)) == e


def test_printer_parenthesizes_by_precedence():
    e = BinOp("*", BinOp("-", Var("x0"), Var("y0")), Num(2))
    assert to_text(e) == "(x0 - y0) * 2"
    right = BinOp("-", Num(5), BinOp("-", Num(3), Num(1)))
    assert to_text(right) == "5 - (3 - 1)"
    assert eval_cross_expr(parse_cross_expr(to_text(right)), (0,), (0,), 0) == 3
    assert eval_cross_expr(parse_cross_expr("2 * (dxy + 1)"), (0,), (4,), 4) == 10
