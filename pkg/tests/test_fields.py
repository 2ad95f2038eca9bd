import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nambulab.fields import (Box, DomainError, FlowError, FormField, VectorField, d_form, differential,
                             eval_scalar, flow, flow_with_jacobian, interior_vector, lie_bracket,
                             lie_bracket_at, lie_derivative_form, wedge_fields, wedge_vectors)
from nambulab.poly import Polynomial

n = 3
X = [Polynomial.var(n, i) for i in range(n)]


@st.composite
def polys(draw):
    terms = draw(st.dictionaries(st.tuples(*[st.integers(0, 2)] * n), st.integers(-3, 3), max_size=3))
    return Polynomial(n, terms)


@st.composite
def fields(draw):
    return VectorField([draw(polys()) for _ in range(n)])


@st.composite
def forms(draw, degree):
    idx = list(itertools.combinations(range(n), degree))
    keys = draw(st.lists(st.sampled_from(idx), max_size=3, unique=True))
    return FormField(n, degree, {k: draw(polys()) for k in keys})


@settings(max_examples=40, deadline=None)
@given(forms(1))
def test_d_squared_zero(a):
    assert d_form(d_form(a)).is_zero()


@settings(max_examples=40, deadline=None)
@given(polys())
def test_d_of_differential_zero(f):
    assert d_form(differential(f)).is_zero()


@settings(max_examples=30, deadline=None)
@given(fields(), fields(), fields())
def test_jacobi_identity(A, B, C):
    total = lie_bracket(A, lie_bracket(B, C)) + lie_bracket(B, lie_bracket(C, A)) + lie_bracket(C, lie_bracket(A, B))
    assert total.is_zero()


@settings(max_examples=30, deadline=None)
@given(fields(), polys())
def test_lie_derivative_of_function_and_commutes_with_d(A, f):
    # L_X df = d(X f), a consequence of the Cartan formula
    assert lie_derivative_form(A, differential(f)) == differential(A.apply(f))


@settings(max_examples=30, deadline=None)
@given(fields(), fields(), forms(1))
def test_commutator_of_lie_derivatives(A, B, a):
    lhs = lie_derivative_form(A, lie_derivative_form(B, a)) - lie_derivative_form(B, lie_derivative_form(A, a))
    assert lhs == lie_derivative_form(lie_bracket(A, B), a)


@settings(max_examples=30, deadline=None)
@given(fields(), forms(1), forms(1))
def test_interior_is_antiderivation(A, a, b):
    lhs = interior_vector(A, wedge_fields(a, b))
    rhs = wedge_fields(interior_vector(A, a), b) - wedge_fields(a, interior_vector(A, b))
    assert lhs == rhs


def test_lie_bracket_known_and_numeric():
    d1 = VectorField.coordinate(n, 0)
    x1d3 = VectorField.coordinate(n, 2, X[0])
    assert lie_bracket(d1, x1d3) == VectorField.coordinate(n, 2)
    v = lie_bracket_at(d1, x1d3, np.array([0.2, 0.1, 0.0]))
    assert np.allclose(v, [0, 0, 1])


def test_wedge_vectors_antisymmetric():
    a, b = VectorField.coordinate(n, 0), VectorField.coordinate(n, 1, X[2])
    assert wedge_vectors([a, b]) == wedge_vectors([b, a]).scale(-1)


def test_flow_rotation_against_exact_solution():
    rot = VectorField([-X[1], X[0], Polynomial.zero(n)])
    t = 1.3
    y = flow(rot, [1.0, 0.0, 0.5], t, tol=1e-12)
    assert np.allclose(y, [np.cos(t), np.sin(t), 0.5], atol=1e-10)


def test_flow_jacobian_matches_exact():
    # x' = x^2 has phi_t(x) = x/(1 - t x) with d phi/dx = 1/(1 - t x)^2
    sq = VectorField([X[0] ** 2, Polynomial.zero(n), Polynomial.zero(n)])
    y, J = flow_with_jacobian(sq, [0.5, 0, 0], 0.8, tol=1e-12)
    assert abs(y[0] - 0.5 / 0.6) < 1e-9
    assert abs(J[0, 0] - 1 / 0.36) < 1e-8


def test_flow_leaving_box_raises():
    d1 = VectorField.coordinate(n, 0)
    with pytest.raises(FlowError):
        flow(d1, [0, 0, 0], 5.0, box=Box.cube(n, 1))


def test_box_and_domain():
    B = Box.cube(2, 1)
    assert B.contains((Fraction(1), 0)) and not B.contains((1.5, 0))
    with pytest.raises(DomainError):
        B.require((2, 0))
    with pytest.raises(ValueError):
        Box([0, 1], [1, 1])
    pts = B.sample(np.random.default_rng(0), 5)
    assert pts == B.sample(np.random.default_rng(0), 5)
    assert all(B.contains(p) for p in pts)


def test_eval_scalar_respects_box():
    with pytest.raises(DomainError):
        eval_scalar(X[0], (3, 0, 0), Box.cube(n, 2))
    value, grad, hess = eval_scalar(X[0] * X[1], (Fraction(1, 2), 2, 0))
    assert value == 1 and grad == [2, Fraction(1, 2), 0]
    assert hess[0][1] == hess[1][0] == 1
