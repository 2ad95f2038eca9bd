"""The ten acceptance criteria, each at its stated tolerance and time budget.

Each test records a one-line verdict that ``conftest.py`` prints at the end of
the session; running this file as a script prints the same lines.
"""

import io
import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from nambulab import cli
from nambulab.algebroid import (algebroid_bracket, check_anchor_morphism, check_exact_forms_identity,
                                check_leibniz_identity, check_module_rules, hagiwara_bracket,
                                random_forms)
from nambulab.fields import VectorField, lie_bracket, wedge_vectors
from nambulab.gallery import (DiscretizedLoop, census, classify_loop, heisenberg, heisenberg_times_r,
                              left_invariant_structure, loop_bracket, loop_examples, scaled_structure,
                              canonical_structure, subalgebra_check)
from nambulab.linalg import rank
from nambulab.multilinear import VECTOR, AltTensor, perm_sign, wedge_all
from nambulab.nambu import bracket_eval, check_filippov_direct, fi_battery, plucker_check
from nambulab.nambu import test_family as family_of
from nambulab.normal_form import characteristic_frame, darboux_chart, frame_identities, verify_chart
from nambulab.poly import Polynomial
from nambulab.reports import FAIL, UNSUPPORTED
from nambulab.towers import (check_compat, check_limit_bracket, classify_tower_point, example_towers,
                             sample_tower_points)

from conftest import ACCEPTANCE


def record(k: int, ok: bool, desc: str) -> None:
    ACCEPTANCE[k] = (ok, desc)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {desc}")


# --- 1 ---------------------------------------------------------------------------------

def test_criterion_01_fi_triple_verifier_agreement():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for item in census():
        reps = fi_battery(item.structure)
        verdicts = [r.verdict for r in reps if r.verdict != UNSUPPORTED]
        agree = len(set(verdicts)) == 1
        match = agree and verdicts[0] == item.expected["fi"]
        failing_have_witness = all(r.witnesses for r in reps if r.verdict == FAIL)
        ok &= agree and match and failing_have_witness
        rows.append((item.name, [r.verdict for r in reps]))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    record(1, ok, f"FI verifiers agree on {len(rows)} census structures, expected verdicts, {elapsed:.1f}s < 60s")
    assert ok, rows


# --- 2 ---------------------------------------------------------------------------------

def _support_rank(n: int, coeffs: dict) -> int:
    """Dimension of the span of all contractions of a 3-vector by basis 2-covectors.

    Computed here from scratch (permutation parity) so it shares nothing with the
    Plücker code: a nonzero 3-vector is decomposable iff this dimension is 3.
    """
    vecs = []
    for a, b in itertools.combinations(range(n), 2):
        v = [0] * n
        for I, c in coeffs.items():
            if a in I and b in I:
                (k,) = [i for i in I if i not in (a, b)]
                v[k] += perm_sign([I.index(a), I.index(b), I.index(k)]) * c
        vecs.append(v)
    return rank(vecs)


def test_criterion_02_plucker_oracle():
    t0 = time.perf_counter()
    total = mismatches = bad_factors = 0
    for n in range(3, 7):
        idx = list(itertools.combinations(range(n), 3))
        for k in range(4):
            for supp in itertools.combinations(idx, k):
                for signs in itertools.product((1, -1), repeat=k):
                    coeffs = dict(zip(supp, signs))
                    t = AltTensor(n, 3, coeffs, VECTOR)
                    ok, factors = plucker_check(t)
                    oracle = not coeffs or _support_rank(n, coeffs) == 3
                    total += 1
                    mismatches += ok != oracle
                    if ok and coeffs and wedge_all(factors, n) != t:
                        bad_factors += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and bad_factors == 0 and elapsed < 300
    record(2, ok, f"plucker_check matches support-rank oracle on {total} tensors "
                  f"({mismatches} mismatches, {bad_factors} bad factorizations), {elapsed:.1f}s")
    assert ok


# --- 3 and 4 ---------------------------------------------------------------------------

DARBOUX_CASES = [
    ("canonical(3,3) at 0", lambda: canonical_structure(3, 3), (0, 0, 0)),
    ("h=x1 at (1,0,0)", lambda: scaled_structure(3, 3, "x1"), (1, 0, 0)),
    ("h=x1^2+1 at 0", lambda: scaled_structure(3, 3, "x1^2 + 1"), (0, 0, 0)),
    ("d1^d2^(x1 d3) on R^4 at (1,0,0,0)", lambda: scaled_structure(4, 3, "x1"), (1, 0, 0, 0)),
]


@pytest.fixture(scope="module")
def darboux_results():
    out = []
    for name, make, x in DARBOUX_CASES:
        S = make()
        t0 = time.perf_counter()
        chart = darboux_chart(S, x)
        rep = verify_chart(S, chart, samples=32, seed=0, tol=1e-6)
        out.append((name, S, x, rep, time.perf_counter() - t0))
    return out


def test_criterion_03_darboux_reproduction(darboux_results):
    ok = all(rep.passed and rep.residual_max < 1e-6 and dt < 30 for _, _, _, rep, dt in darboux_results)
    worst = max(rep.residual_max for _, _, _, rep, _ in darboux_results)
    slowest = max(dt for *_, dt in darboux_results)
    record(3, ok, f"4 Darboux charts verified at 32 points, worst residual {worst:.1e} < 1e-6, "
                  f"slowest {slowest:.1f}s < 30s")
    assert ok


def test_criterion_04_frame_identities(darboux_results):
    ok = True
    for _, S, x, _, _ in darboux_results:
        ids = frame_identities(S, characteristic_frame(S, x))
        ok &= all(p.is_zero() for p in ids["orthogonality"].values())
        ok &= ids["determinant"].is_zero() and ids["wedge"].is_zero()
    record(4, ok, "orthogonality and determinant relations exactly zero for all 4 frames")
    assert ok


# --- 5 ---------------------------------------------------------------------------------

def _algebroid_suite(S, count=20, seed=0):
    forms = random_forms(S, 3 * count, seed=seed, max_degree=2)
    pairs = list(zip(forms[:count], forms[count:2 * count]))
    triples = list(zip(forms[:count], forms[count:2 * count], forms[2 * count:]))
    br = lambda a, b: algebroid_bracket(S, a, b)  # noqa: E731
    hb = lambda a, b: hagiwara_bracket(S, a, b)  # noqa: E731
    singular = [(Fraction(0), Fraction(k, 3), Fraction(-k, 5)) for k in range(4)]
    sing = [x for x in singular if S.tensor_at(x).is_zero()]
    fam = family_of(S, "quad")
    rng = np.random.default_rng(seed)
    combos = list(itertools.combinations(fam, S.r - 1))
    exact_ok = all(check_exact_forms_identity(S, combos[int(rng.integers(len(combos)))],
                                              combos[int(rng.integers(len(combos)))], br).passed
                   for _ in range(count))
    f = fam[int(rng.integers(len(fam)))] * fam[int(rng.integers(len(fam)))] + 1
    return {
        "leibniz": check_leibniz_identity(S, triples, br).passed,
        "anchor-morphism": check_anchor_morphism(S, pairs, br, singular_points=sing).passed,
        "exact-forms": exact_ok,
        "module-rules": check_module_rules(S, f, pairs, br).passed,
        "hagiwara-leibniz": check_leibniz_identity(S, triples, hb).passed,
        "hagiwara-anchor": check_anchor_morphism(S, pairs, hb, singular_points=sing).passed,
        "singular-points": len(sing),
    }


def test_criterion_05_algebroid_axioms():
    t0 = time.perf_counter()
    canon = _algebroid_suite(canonical_structure(3, 3))
    scaled = _algebroid_suite(scaled_structure(3, 3, "x1"))
    elapsed = time.perf_counter() - t0
    ok = all(v for k, v in canon.items() if k != "singular-points")
    ok &= all(v for k, v in scaled.items() if k != "singular-points")
    ok &= scaled["singular-points"] > 0 and elapsed < 120
    record(5, ok, f"bracket axioms exact on 20 pairs/triples for canonical and h=x1 "
                  f"({scaled['singular-points']} singular points), Hagiwara too, {elapsed:.1f}s")
    assert ok, (canon, scaled)


# --- 6 ---------------------------------------------------------------------------------

def test_criterion_06_singular_witness():
    n = 3
    x1 = Polynomial.var(n, 0)
    S = scaled_structure(3, 3, x1)
    d1, d2 = VectorField.coordinate(n, 0), VectorField.coordinate(n, 1)
    X3 = VectorField.coordinate(n, 2, x1)
    d3 = VectorField.coordinate(n, 2)
    factors_ok = wedge_vectors([d1, d2, X3]) == S.tensor
    bracket_ok = lie_bracket(d1, X3) == d3
    x = np.array([0.0, 0.3, -0.7])
    D = np.column_stack([Y.evaluator()(x) for Y in (d1, d2, X3)])
    rank_D = np.linalg.matrix_rank(D)
    rank_jump = np.linalg.matrix_rank(np.column_stack([D, d3.evaluator()(x)]))
    fi = check_filippov_direct(S)
    ok = factors_ok and bracket_ok and rank_D == 2 and rank_jump == 3 and fi.passed
    record(6, ok, "[d1, x1 d3] = d3 not in span{d1, d2, x1 d3} at x1 = 0 (rank 2 -> 3), direct FI passes")
    assert ok


# --- 7 ---------------------------------------------------------------------------------

def test_criterion_07_lie_group_correspondence():
    t0 = time.perf_counter()
    rows = []
    ok = True
    H = heisenberg()
    S = left_invariant_structure(H, ["X", "Y", "Z"])
    rep = check_filippov_direct(S)
    ok &= subalgebra_check(H, ["X", "Y", "Z"]) and rep.passed and S.exact_series
    HR = heisenberg_times_r()
    for span in itertools.combinations(["X", "Y", "Z", "W"], 3):
        sub = subalgebra_check(HR, span)
        S = left_invariant_structure(HR, span)
        rep = check_filippov_direct(S)
        rows.append((span, sub, rep.verdict))
        ok &= S.exact_series
        ok &= rep.passed if sub else (rep.failed and bool(rep.witnesses))
    elapsed = time.perf_counter() - t0
    failing = [s for s, sub, _ in rows if not sub]
    ok &= failing == [("X", "Y", "W")] and elapsed < 120
    record(7, ok, f"subalgebra <=> FI on Heisenberg and all 4 coordinate 3-spans of H x R "
                  f"(non-subalgebra {failing}), {elapsed:.1f}s")
    assert ok, rows


# --- 8 ---------------------------------------------------------------------------------

def test_criterion_08_loop_quadrature():
    S = scaled_structure(3, 3, "x1")
    coords = [Polynomial.var(3, i) for i in range(3)]
    fam = family_of(S, "quad")
    rng = np.random.default_rng(0)
    worst_const = 0.0
    for _ in range(10):
        x = tuple(rng.uniform(-1.5, 1.5, 3))
        fs = [fam[int(i)] for i in rng.choice(len(fam), 3, replace=False)]
        v = loop_bracket(S, fs, DiscretizedLoop.constant(x))
        worst_const = max(worst_const, abs(v - bracket_eval(S, fs[:2], fs[2], x)))

    exact = 0.1 / np.sqrt(0.19)
    Ns = [8, 16, 32, 64]
    errs = []
    for N in Ns:
        loop = DiscretizedLoop.from_function(
            lambda t: (0.1 / (1 - 0.9 * np.cos(2 * np.pi * t)), np.sin(2 * np.pi * t), 0.0), N)
        errs.append(abs(loop_bracket(S, coords, loop) - exact))
    slope = -np.polyfit(np.log(Ns), np.log(errs), 1)[0]

    classes = [(name, classify_loop(S, loop).cls, want) for name, loop, want in loop_examples()]
    ok = worst_const < 1e-12 and slope >= 1.9 and all(got == want for _, got, want in classes)
    record(8, ok, f"constant loops match pointwise ({worst_const:.1e} < 1e-12), quadrature slope "
                  f"{slope:.1f} >= 1.9, 3 loop classifications correct")
    assert ok, classes


# --- 9 ---------------------------------------------------------------------------------

def test_criterion_09_tower_theorems():
    t0 = time.perf_counter()
    ok = True
    towers = 0
    for T, expected in example_towers():
        rep = check_compat(T)
        ok &= rep.verdict == expected
        if not rep.passed:
            continue
        towers += 1
        for p in sample_tower_points(T, 200, seed=0):
            tc = classify_tower_point(T, p)
            ok &= tc.violation is None and tc.cls != "Mixed"
        if T.kind == "projective":
            pts = sample_tower_points(T, 20, seed=1)
            gens = T.levels[0].generators()[:T.r]
            ok &= check_limit_bracket(T, gens, 0, pts, exact=True).passed
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    record(9, ok, f"{towers} compat-passing towers x 200 points: no mixed class, strata well defined, "
                  f"limit bracket level independent, {elapsed:.1f}s")
    assert ok


# --- 10 --------------------------------------------------------------------------------

SUITE = [
    ["check", "fixtures/canonical3.json"],
    ["check", "fixtures/scaled_x1.json"],
    ["check", "fixtures/heisenberg_r_xyw.json"],
    ["check", "fixtures/partial_poisson.json"],
    ["darboux", "fixtures/scaled_x1.json"],
    ["algebroid", "fixtures/scaled_x1.json"],
    ["tower", "fixtures/tower_projective.json"],
    ["tower", "fixtures/tower_sumsq_direct.json"],
    ["tower", "fixtures/tower_projective_bad.json"],
]


def _suite_stream(seed: int) -> tuple[bytes, list]:
    buf = io.StringIO()
    codes = [cli.run(argv + ["--seed", str(seed)], out=buf) for argv in SUITE]
    return buf.getvalue().encode(), codes


def test_criterion_10_determinism(monkeypatch):
    from conftest import ROOT
    monkeypatch.chdir(ROOT)
    a, codes_a = _suite_stream(7)
    b, codes_b = _suite_stream(7)
    ok = a == b and codes_a == codes_b and all(c == 0 for c in codes_a) and len(a) > 0
    record(10, ok, f"two suite runs with seed 7 give byte-identical streams ({len(a)} bytes)")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
