import pytest

from nambulab.algebroid import (algebroid_bracket, anchor, check_anchor_morphism, check_exact_forms_identity,
                                check_leibniz_identity, check_module_rules, hagiwara_bracket, random_forms)
from nambulab.fields import FormField, differential, wedge_many
from nambulab.gallery import canonical_structure, scaled_structure
from nambulab.poly import Polynomial


def P(text, n):
    return Polynomial.parse(text, n)


def suite(S, count=6, seed=0):
    forms = random_forms(S, 3 * count, seed=seed)
    pairs = list(zip(forms[:count], forms[count:2 * count]))
    triples = list(zip(forms[:count], forms[count:2 * count], forms[2 * count:]))
    return pairs, triples


def br(S, **kw):
    return lambda a, b: algebroid_bracket(S, a, b, **kw)


def hb(S, **kw):
    return lambda a, b: hagiwara_bracket(S, a, b, **kw)


def test_random_forms_deterministic_and_typed():
    S = canonical_structure(3, 3)
    a = random_forms(S, 4, seed=5)
    assert [f.coeffs for f in a] == [f.coeffs for f in random_forms(S, 4, seed=5)]
    assert all(f.degree == 2 for f in a)


def test_anchor_of_exact_form_is_hamiltonian():
    S = scaled_structure(3, 3, "x1")
    f, g = P("x1*x2", 3), P("x3^2", 3)
    X = anchor(S, wedge_many([differential(f), differential(g)]))
    h = P("x2 + x3", 3)
    assert X.apply(h) == S.tensor.eval_forms([differential(f), differential(g), differential(h)])


@pytest.mark.parametrize("convention", ["scalar", "interior"])
@pytest.mark.parametrize("h", ["1", "x1", "x1^2 + 1"])
def test_axioms_when_n_equals_r(convention, h):
    S = scaled_structure(3, 3, h)
    pairs, triples = suite(S)
    b = br(S, convention=convention)
    assert check_anchor_morphism(S, pairs, b).passed
    assert check_module_rules(S, P("x1*x2 + 1", 3), pairs, b).passed
    assert check_leibniz_identity(S, triples, b).passed
    assert check_leibniz_identity(S, triples, b, form="left").passed
    assert check_exact_forms_identity(S, [P("x1^2", 3), P("x2", 3)], [P("x3", 3), P("x1*x2", 3)], b).passed


def test_singular_points_in_anchor_check():
    S = scaled_structure(3, 3, "x1")
    pairs, _ = suite(S, 4)
    rep = check_anchor_morphism(S, pairs, singular_points=[(0, 0, 0), (0, 1, -1)])
    assert rep.passed and rep.details["singular_points"] == 2


def test_n_greater_than_r():
    S = scaled_structure(4, 3, "x1")
    pairs, triples = suite(S, 5, seed=2)
    f = P("x2*x4 + 1", 4)
    # module rules single out the scalar reading of the correction term
    assert check_module_rules(S, f, pairs, br(S)).passed
    assert check_module_rules(S, f, pairs, br(S, convention="interior")).failed
    # the left Leibniz form holds, the right-nested form does not on kernel directions
    assert check_leibniz_identity(S, triples, br(S), form="left").passed
    assert check_anchor_morphism(S, pairs, br(S)).passed


def test_right_form_counterexample_by_hand():
    n = 4
    S = canonical_structure(n, 3)
    dx = [differential(Polynomial.var(n, i)) for i in range(n)]
    x1, x3 = Polynomial.var(n, 0), Polynomial.var(n, 2)
    a = wedge_many([dx[0], dx[1]])
    b = a.scale(x1)
    c = wedge_many([dx[2], dx[3]]).scale(x3)
    rep = check_leibniz_identity(S, [(a, b, c)], br(S))
    assert rep.failed
    assert check_leibniz_identity(S, [(a, b, c)], br(S), form="left").passed


@pytest.mark.parametrize("n,r", [(2, 2), (4, 4)])
def test_even_order_conventions(n, r):
    S = canonical_structure(n, r).scaled(Polynomial.var(n, 0) + 2)
    _, triples = suite(S, 5, seed=1)
    assert check_leibniz_identity(S, triples, br(S, convention="scalar")).passed
    assert check_leibniz_identity(S, triples, hb(S, convention="interior")).passed
    assert check_leibniz_identity(S, triples, hb(S, convention="scalar")).failed


def test_hagiwara_bracket_axioms():
    S = scaled_structure(3, 3, "x1")
    pairs, triples = suite(S)
    assert check_anchor_morphism(S, pairs, hb(S)).passed
    assert check_leibniz_identity(S, triples, hb(S)).passed


def test_negative_controls():
    S = scaled_structure(3, 3, "x1")
    pairs, _ = suite(S)
    assert check_anchor_morphism(S, pairs, br(S, drop_correction=True)).failed
    assert check_module_rules(S, P("x2 + x1^2", 3), pairs, flip_second_sign=True).failed


def test_bad_inputs():
    S = canonical_structure(3, 3)
    one_form = differential(Polynomial.var(3, 0))
    with pytest.raises(ValueError):
        algebroid_bracket(S, one_form, one_form)
    with pytest.raises(ValueError):
        algebroid_bracket(S, *random_forms(S, 2), convention="other")
    with pytest.raises(ValueError):
        check_leibniz_identity(S, [], form="middle")
    assert isinstance(random_forms(S, 1)[0], FormField)
