from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sepbasis.core import ONE, X, Polynomial
from sepbasis.expr import ParseError, parse_operator, parse_poly, tokenize
from sepbasis.opspace import (
    D,
    DINV,
    XOP,
    Atom,
    Compose,
    Const,
    Pow,
    Scale,
    Sub,
    add,
    apply_operator,
    compose,
    const,
    format_operator,
    power,
    scale,
    sub,
)
from strategies import polys, small_rationals

P = Polynomial


def test_poly_examples():
    assert parse_poly("x^2 - 1") == P([-1, 0, 1])
    assert parse_poly("1/2*(x^2 - 4*x + 2)") == P([2, -4, 1]) / 2
    assert parse_poly("3/2") == P([Fraction(3, 2)])
    assert parse_poly("(x+1)*(x-1)") == P([-1, 0, 1])


def test_precedence():
    assert parse_poly("2*x^2") == P([0, 0, 2])
    assert parse_poly("-x^2") == P([0, 0, -1])
    assert parse_poly("(-x)^2") == P([0, 0, 1])
    assert parse_poly("1 - x - x") == P([1, -2])
    assert parse_poly("x^0") == ONE
    assert parse_operator("-x^2") == Scale(-1, Pow(XOP, 2))


@pytest.mark.parametrize(
    "text, offset, fragment",
    [
        ("x^-1", 2, "negative exponent"),
        ("2x", 1, "implicit multiplication"),
        ("y + 1", 0, "unknown identifier"),
        ("(x + 1", 6, "parenthesis"),
        ("x +", 3, "unexpected end"),
        ("", 0, "empty"),
        ("x^2^3", 3, "chained"),
        ("x / x", 4, "constant"),
        ("x / 0", 4, "division by zero"),
        ("x $ 1", 2, "unexpected character"),
        ("x^1.5", 3, "unexpected character"),
        ("x^100000", 2, "exceeds"),
    ],
)
def test_poly_errors(text, offset, fragment):
    with pytest.raises(ParseError) as exc:
        parse_poly(text)
    assert exc.value.position == offset
    assert fragment in str(exc.value)
    assert 0 <= exc.value.position <= len(text.encode())
    assert exc.value.expected


def test_unknown_operator_identifier_lists_atoms():
    with pytest.raises(ParseError) as exc:
        parse_operator("D + y")
    assert "D, Dinv, x" in str(exc.value)
    assert exc.value.position == 4


def test_polynomials_reject_operator_atoms():
    with pytest.raises(ParseError):
        parse_poly("D")


def test_operator_examples():
    assert parse_operator("x - D") == Sub(XOP, D)
    assert parse_operator("1 - Dinv") == Sub(Const(1), DINV)
    sq = parse_operator("(D - 1)^2")
    assert sq == Pow(Sub(D, Const(1)), 2)
    assert apply_operator(sq, X ** 2) == P([2, -4, 1])


def test_star_is_composition_right_first():
    # x*D applied to x^3 is x * 3x^2, D*x applied to x^3 is 4x^3
    assert apply_operator(parse_operator("x*D"), X ** 3) == P([0, 0, 0, 3])
    assert apply_operator(parse_operator("D*x"), X ** 3) == P([0, 0, 0, 4])
    assert parse_operator("D*x") == Compose(D, XOP)


def test_token_positions_increase():
    toks = tokenize("12*x^2 - Dinv")
    positions = [t.position for t in toks]
    assert positions == sorted(set(positions))
    assert [t.kind for t in toks[:-1]] == ["integer", "star", "ident", "caret", "integer", "minus", "ident"]


def atoms():
    return st.sampled_from([D, DINV, XOP]) | small_rationals.map(const)


def operator_asts():
    return st.recursive(
        atoms(),
        lambda kids: st.one_of(
            st.tuples(kids, kids).map(lambda ab: add(*ab)),
            st.tuples(kids, kids).map(lambda ab: sub(*ab)),
            st.tuples(kids, kids).map(lambda ab: compose(*ab)),
            st.tuples(kids, st.integers(0, 3)).map(lambda bn: power(*bn)),
            st.tuples(small_rationals, kids).map(lambda ce: scale(*ce)),
        ),
        max_leaves=8,
    )


@given(operator_asts())
def test_operator_round_trip(expr):
    text = format_operator(expr)
    parsed = parse_operator(text)
    assert parsed == expr
    assert format_operator(parsed) == text


@given(operator_asts(), polys(max_degree=3, coeffs=small_rationals))
def test_round_trip_preserves_action(expr, p):
    assert apply_operator(parse_operator(format_operator(expr)), p) == apply_operator(expr, p)


@given(polys(coeffs=small_rationals))
def test_poly_round_trip(p):
    assert parse_poly(str(p)) == p
    assert str(parse_poly(str(p))) == str(p)


@given(st.text(alphabet="x0123456789+-*/^() D", max_size=12))
def test_errors_carry_valid_offsets(text):
    try:
        parse_poly(text)
    except ParseError as exc:
        assert 0 <= exc.position <= len(text.encode())
