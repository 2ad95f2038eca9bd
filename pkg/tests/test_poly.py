from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nambulab.linalg import in_rowspan, matmul, nullspace, rank, rref
from nambulab.poly import ParseError, Polynomial, as_fraction_point


@st.composite
def polys(draw, n=3):
    terms = draw(st.dictionaries(st.tuples(*[st.integers(0, 2)] * n),
                                 st.fractions(min_value=-4, max_value=4, max_denominator=3), max_size=4))
    return Polynomial(n, terms)


def test_parse_roundtrip():
    p = Polynomial.parse("x1^2 - 3/2*x2*x3 + 1", 3)
    assert p((2, 1, 2)) == 4 - 3 + 1
    assert Polynomial.parse(p.to_string(), 3) == p
    assert Polynomial.parse("(x1 + x2)**2", 2) == Polynomial.parse("x1^2 + 2*x1*x2 + x2^2", 2)
    assert Polynomial.parse("0.5*x1", 1) == Polynomial.parse("1/2*x1", 1)


@pytest.mark.parametrize("text,col", [
    ("x1 + ", 6),
    ("x4", 1),
    ("x1 / x2", 4),
    ("x1 ^ y", 6),
    ("2 * (x1 + 1", 12),
    ("x", 1),
    ("x1 $ 2", 4),
])
def test_parse_errors_have_columns(text, col):
    with pytest.raises(ParseError) as info:
        Polynomial.parse(text, 3)
    assert info.value.column == col


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(p, q, s):
    assert (p + q) * s == p * s + q * s
    assert (p * q) * s == p * (q * s)
    assert p - p == Polynomial.zero(3)


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_derivative_leibniz(p, q):
    for i in range(3):
        assert (p * q).diff(i) == p.diff(i) * q + p * q.diff(i)


@settings(max_examples=40, deadline=None)
@given(polys(), st.lists(st.lists(st.integers(-2, 2), min_size=2, max_size=2), min_size=3, max_size=3),
       st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
def test_compose_linear_evaluates_at_image(p, M, y):
    x = [sum(M[i][j] * y[j] for j in range(2)) for i in range(3)]
    assert p.compose_linear(M)(y) == p(x)


def test_numeric_evaluation_matches_exact():
    p = Polynomial.parse("x1^3 - x1*x2 + 7/3", 2)
    x = (Fraction(1, 3), Fraction(-2, 5))
    assert abs(p.compiled()(np.array([float(v) for v in x])) - float(p(x))) < 1e-14


def test_as_fraction_point():
    assert as_fraction_point([0.5, 1]) == (Fraction(1, 2), Fraction(1))


def test_linalg_exact():
    M = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    R, piv = rref(M)
    assert piv == [0, 1] and rank(M) == 2
    ker = nullspace(M)
    assert len(ker) == 1
    assert all(v == 0 for v in matmul(M, [[c] for c in ker[0]]) for v in v)
    assert in_rowspan([3, 2, 5], M) and not in_rowspan([0, 0, 1], M)
