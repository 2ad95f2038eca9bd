import itertools
import warnings
from fractions import Fraction

import numpy as np
import pytest

from nambulab.fields import DomainError
from nambulab.gallery import (GALLERY_NAMES, DiscretizedLoop, LieAlgebraPresentation, TruncationWarning,
                              abelian, bernoulli_plus, build, census, classify_loop, gl2, heisenberg,
                              heisenberg_times_r, l1_summability, l1_truncated, left_invariant_fields,
                              left_invariant_structure, left_translation_defect, loop_bracket, scaled_structure,
                              so3, subalgebra_check)
from nambulab.nambu import bracket_field
from nambulab.poly import Polynomial


def test_subalgebras():
    assert subalgebra_check(so3(), ["L1", "L2", "L3"])
    assert not subalgebra_check(gl2(), ["E12", "E21", [1, 0, 0, 1]])
    assert subalgebra_check(gl2(), ["E11", "E12", "E22"])
    assert subalgebra_check(heisenberg_times_r(), ["X", "Z", "W"])
    assert not subalgebra_check(heisenberg_times_r(), ["X", "Y", "W"])
    with pytest.raises(ValueError):
        subalgebra_check(so3(), ["L1", [2, 0, 0]])


def test_presentation_validation():
    with pytest.raises(ValueError):
        LieAlgebraPresentation(["X", "Y", "Z"], {("X", "Y"): {"Z": 1}},
                               [np.eye(3), np.eye(3), np.eye(3)])
    with pytest.raises(ValueError):
        # [X,Y]=Y, [X,Z]=Y, [Y,Z]=X: the Jacobi sum is -X
        LieAlgebraPresentation(["X", "Y", "Z"], {("X", "Y"): {"Y": 1}, ("X", "Z"): {"Y": 1},
                                                 ("Y", "Z"): {"X": 1}})


def test_bernoulli_plus():
    assert bernoulli_plus(6) == [1, Fraction(1, 2), Fraction(1, 6), 0, Fraction(-1, 30), 0, Fraction(1, 42)]


def test_left_invariant_exactness():
    fields, exact = left_invariant_fields(heisenberg(), ["X", "Y", "Z"])
    assert exact
    assert left_translation_defect(heisenberg(), fields, [0.3, -0.2, 0.5], [0.1, 0.4, -0.3]) < 1e-8
    fields, exact = left_invariant_fields(abelian(3), ["A1", "A2"])
    assert exact


def test_truncated_series_warns_and_converges():
    with pytest.warns(TruncationWarning):
        left_invariant_fields(so3(), ["L1"], order=2)
    defects = []
    for order in (2, 4, 8):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            fields, exact = left_invariant_fields(so3(), ["L1", "L2", "L3"], order=order)
        assert not exact
        defects.append(left_translation_defect(so3(), fields, [0.2, -0.1, 0.1], [0.1, 0.15, -0.1]))
    assert defects[0] > defects[1] > defects[2]


def test_left_invariant_structure_flag():
    S = left_invariant_structure(heisenberg(), ["X", "Y", "Z"])
    assert S.exact_series and S.r == 3


def test_l1_truncation_and_summability():
    S = l1_truncated(6, [2, 3, 5])
    assert S.m == 3 and S.tensor.at((0,) * 6).coeffs == {(1, 2, 4): Fraction(1, 30)}
    I = range(1, 7)
    total, bound = l1_summability(I)
    assert total == sum(Fraction(1, i * j * k) for i, j, k in itertools.combinations(I, 3))
    assert bound == sum(Fraction(1, i ** 3) for i in I)
    with pytest.raises(ValueError):
        l1_truncated(6, [1, 2])
    with pytest.raises(ValueError):
        l1_truncated(4, [1, 2, 7])


def test_loops():
    S = scaled_structure(3, 3, "x1")
    fs = [Polynomial.var(3, i) for i in range(3)]
    x = (Fraction(1, 2), Fraction(1, 3), 0)
    assert loop_bracket(S, fs, DiscretizedLoop.constant(x)) == bracket_field(S, fs)(x)
    with pytest.raises(DomainError):
        loop_bracket(S, fs, DiscretizedLoop.constant((3, 0, 0)))
    with pytest.raises(ValueError):
        DiscretizedLoop([(0, 0, 0)] * 3)
    # a loop through the singular plane x1 = 0 is still regular
    circle = DiscretizedLoop.from_function(lambda t: (np.cos(2 * np.pi * t), np.sin(2 * np.pi * t), 0.0), 16)
    lc = classify_loop(S, circle)
    assert lc.cls == "Regular" and lc.witness is not None
    assert classify_loop(S, DiscretizedLoop.constant((0, 1, 0))).cls == "Singular"


def test_census_shape():
    items = census()
    assert len(items) == 10 and len({i.name for i in items}) == 10
    assert {i.expected["fi"] for i in items} == {"pass", "fail"}


def test_build_registry():
    assert build("l1", {"I": "2..5"}).expected["fi"] == "pass"
    assert build("l1", {"I": [1, 2, 3, 4, 5]}).expected["fi"] == "fail"
    assert build("heisenberg", {"times_r": True, "span": ["X", "Y", "W"]}).expected["fi"] == "fail"
    assert build("scaled", {"h": "x2^2"}).structure.tensor.at((0, 3, 0)).coeffs == {(0, 1, 2): 9}
    for name in GALLERY_NAMES:
        build(name)
    with pytest.raises(KeyError):
        build("nope")
    with pytest.raises(KeyError):
        build("canonical", {"q": 1})
