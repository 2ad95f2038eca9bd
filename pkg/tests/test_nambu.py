import itertools
from fractions import Fraction

import numpy as np
import pytest

from nambulab.fields import Box, MultiVectorField, VectorField, wedge_vectors
from nambulab.gallery import canonical_structure, l1_truncated, scaled_structure
from nambulab.multilinear import COVECTOR, AltTensor, wedge_all
from nambulab.nambu import (ConfigurationError, NambuStructure, RestrictionError, admissible_fn_check,
                            bracket_eval, bracket_field, check_filippov_direct, check_filippov_structural,
                            check_leibniz, check_lie_derivative_criterion, classify_point,
                            commutator_identity_check, fi_battery, fi_residual, fixed_slot_anchor,
                            hamiltonian_field, plucker_check, sharp)
from nambulab.nambu import test_family as family_of
from nambulab.poly import NumericFunction, Polynomial, UnsupportedModeError
from nambulab.reports import FAIL, PASS, UNSUPPORTED


def P(text, n=3):
    return Polynomial.parse(text, n)


def non_involutive():
    # d1 ^ d2 ^ (d3 + x1 d4) is decomposable, but [d1, d3 + x1 d4] = d4 leaves the span
    n = 4
    x1 = Polynomial.var(n, 0)
    X3 = VectorField([Polynomial.zero(n), Polynomial.zero(n), Polynomial.const(n, 1), x1])
    return NambuStructure(wedge_vectors([VectorField.coordinate(n, 0), VectorField.coordinate(n, 1), X3]),
                          name="non-involutive")


def test_bracket_is_jacobian_determinant():
    S = canonical_structure(3, 3)
    fs = [P("x1^2 + x2"), P("x2*x3"), P("x1 - x3^2")]
    b = bracket_field(S, fs)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-1, 1, (5, 3)):
        J = np.array([f.compiled()(x) for f in [g.diff(i) for g in fs for i in range(3)]]).reshape(3, 3)
        assert abs(b.compiled()(x) - np.linalg.det(J)) < 1e-12


def test_bracket_eval_matches_field_and_hamiltonian():
    S = scaled_structure(3, 3, "x1")
    fs, g = [P("x1*x2"), P("x3")], P("x2^2 + x1")
    x = (Fraction(1, 2), Fraction(1, 3), Fraction(-1))
    assert bracket_eval(S, fs, g, x) == bracket_field(S, fs + [g])(x)
    assert hamiltonian_field(S, fs).apply(g) == bracket_field(S, fs + [g])


@pytest.mark.parametrize("S", [canonical_structure(3, 3), scaled_structure(3, 3, "x1^2 + 1"),
                               canonical_structure(2, 2), l1_truncated(6, [1, 2, 3])],
                         ids=lambda S: S.name)
def test_nambu_examples_pass_every_route(S):
    reps = fi_battery(S, "quad")
    assert all(r.verdict in (PASS, UNSUPPORTED) for r in reps)
    assert reps[0].passed and reps[1].passed


@pytest.mark.parametrize("make", [lambda: l1_truncated(6, range(1, 7)), non_involutive])
def test_non_nambu_examples_fail_every_route(make):
    S = make()
    reps = fi_battery(S, "quad")
    assert [r.verdict for r in reps] == [FAIL, FAIL, FAIL]
    assert all(r.witnesses for r in reps)


def test_structural_failure_reasons():
    assert check_filippov_structural(l1_truncated(6, range(1, 7))).witnesses[0]["failure"] == "not decomposable"
    assert check_filippov_structural(non_involutive()).witnesses[0]["failure"] == "not involutive"
    assert check_filippov_structural(canonical_structure(2, 2)).verdict == UNSUPPORTED


def test_fi_residual_explicit():
    S = scaled_structure(3, 3, "x1")
    assert fi_residual(S, [P("x1^2"), P("x2*x3")], [P("x1"), P("x2"), P("x3")]).is_zero()
    bad = non_involutive()
    gs = bad.generators()
    assert any(not fi_residual(bad, list(fs), list(g)).is_zero()
               for fs in itertools.combinations(gs, 2) for g in itertools.combinations(gs, 3))


def test_g_slot_modes_agree():
    S = scaled_structure(3, 3, "x1")
    assert check_filippov_direct(S, "quad", g_slots="family").passed
    assert check_filippov_direct(non_involutive(), "coords", g_slots="family").failed


def test_numeric_mode():
    def h(x):
        return x[0], np.array([1.0, 0, 0]), np.zeros((3, 3))

    S = NambuStructure(MultiVectorField(3, 3, {(0, 1, 2): NumericFunction(3, h, "x1")}))
    assert check_filippov_direct(S, "quad").passed
    assert check_lie_derivative_criterion(S).verdict == UNSUPPORTED


def test_leibniz_and_negative_control():
    S = scaled_structure(3, 3, "x1")
    assert check_leibniz(S).passed

    def bad(fs, g):
        return g * g  # not a derivation
    assert check_leibniz(S, bracket=bad).failed


def test_commutator_identity():
    S = scaled_structure(3, 3, "x1")
    assert commutator_identity_check(S, [P("x1"), P("x2^2")], [P("x3"), P("x1*x2")]).passed


def test_plucker_examples():
    e = lambda *I: AltTensor.basis(6, I)  # noqa: E731
    assert plucker_check(e(0, 1, 2))[0]
    assert not plucker_check(e(0, 1, 2) + e(3, 4, 5))[0]
    assert not plucker_check(e(0, 1, 2) + e(0, 3, 4))[0]
    assert plucker_check(AltTensor(6, 3))[0]
    with pytest.raises(UnsupportedModeError):
        plucker_check(AltTensor.basis(3, (0, 1)))


def test_plucker_factorization_rewedges():
    u = [AltTensor.vector(v) for v in ([1, 1, 0, 0], [0, 2, 1, 0], [0, 0, 3, -1])]
    t = wedge_all(u)
    ok, factors = plucker_check(t)
    assert ok and wedge_all(factors) == t
    tf = AltTensor(4, 3, {k: float(v) for k, v in t.coeffs.items()})
    okf, ff = plucker_check(tf)
    assert okf and all(abs(wedge_all(ff).coeffs.get(k, 0) - v) < 1e-12 for k, v in tf.coeffs.items())


def test_classify_point():
    S = scaled_structure(3, 3, "x1")
    assert classify_point(S, (1, 0, 0)).cls == "Regular"
    c = classify_point(S, (0, Fraction(1, 2), 0))
    assert c.cls == "Singular" and c.rank == 0


def test_restriction_admissibility():
    S = NambuStructure(MultiVectorField(3, 2, {(0, 1): P("1 + x3^2")}), [[1, 0, 0], [0, 1, 0]])
    assert S.is_partial and S.m == 2
    assert admissible_fn_check(S, P("x1*x2")) and not admissible_fn_check(S, P("x3"))
    with pytest.raises(RestrictionError):
        bracket_field(S, [P("x1"), P("x3")])
    with pytest.raises(RestrictionError):
        sharp(S, AltTensor.basis(3, (2,), COVECTOR), (0, 0, 0))
    assert check_filippov_direct(S, "quad").passed


def test_fixed_slot_anchor():
    S = canonical_structure(3, 3)
    T = fixed_slot_anchor(S, [[0, 0, 1]])
    assert T.r == 2 and T.tensor.at((0, 0, 0)) == AltTensor.basis(3, (0, 1))
    with pytest.raises(ValueError):
        fixed_slot_anchor(S, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_families_and_config_errors():
    S = canonical_structure(3, 3)
    assert len(family_of(S, "coords")) == 3
    assert len(family_of(S, "quad")) == 3 + 6
    assert family_of(S, "full", seed=4) == family_of(S, "full", seed=4)
    with pytest.raises(ConfigurationError):
        family_of(S, "cubic")
    with pytest.raises(ConfigurationError):
        check_filippov_direct(S, [P("x1")])
    with pytest.raises(ValueError):
        NambuStructure(MultiVectorField(3, 3, {(0, 1, 2): 1}), [[1, 0, 0], [2, 0, 0]])
    with pytest.raises(ValueError):
        NambuStructure(MultiVectorField(3, 3, {(0, 1, 2): 1}), box=Box.cube(2))
