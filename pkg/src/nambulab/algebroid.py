"""Brackets on (r-1)-forms induced by a Nambu tensor, and their axiom checks.

``[a, b]_P = L_{#a} b + (-1)^r c(a, b)`` where ``#a`` contracts ``a`` into the
tensor and the correction ``c`` is read either as ``<da, tensor> b`` (the
``scalar`` convention, default) or as ``i_{#b} da`` (``interior``).  The
alternative bracket is ``L_{#a} b - i_{#b} da``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from .fields import (FormField, VectorField, contract, d_form, differential, full_pairing,
                     interior_vector, lie_bracket, lie_derivative_form, multivector_to_vector,
                     wedge_fields, wedge_many)
from .nambu import NambuStructure, bracket_field
from .poly import Polynomial, UnsupportedModeError, as_fraction_point
from .reports import CheckReport, make_report

CONVENTIONS = ("scalar", "interior")

Bracket = Callable[[FormField, FormField], FormField]


def _check(S: NambuStructure, *forms: FormField) -> None:
    if not S.is_exact:
        raise UnsupportedModeError("algebroid brackets need exact data")
    for a in forms:
        if a.degree != S.r - 1 or a.n != S.n:
            raise ValueError(f"algebroid elements are {S.r - 1}-forms on R^{S.n}")
        if not a.is_exact:
            raise UnsupportedModeError("algebroid brackets need exact coefficients")


def anchor(S: NambuStructure, alpha: FormField) -> VectorField:
    """The vector field obtained by contracting ``alpha`` into the tensor."""
    return multivector_to_vector(contract(alpha, S.tensor))


def _correction(S: NambuStructure, alpha: FormField, beta: FormField, convention: str) -> FormField:
    da = d_form(alpha)
    if convention == "scalar":
        return beta.scale(full_pairing(da, S.tensor))
    if convention == "interior":
        return interior_vector(anchor(S, beta), da)
    raise ValueError(f"unknown convention {convention!r}; use one of {CONVENTIONS}")


def algebroid_bracket(S: NambuStructure, alpha: FormField, beta: FormField,
                      convention: str = "scalar", drop_correction: bool = False) -> FormField:
    """``L_{#alpha} beta + (-1)^r correction``; ``drop_correction`` is a test hook."""
    _check(S, alpha, beta)
    out = lie_derivative_form(anchor(S, alpha), beta)
    if drop_correction:
        return out
    c = _correction(S, alpha, beta, convention)
    return out + c if S.r % 2 == 0 else out - c


def hagiwara_bracket(S: NambuStructure, alpha: FormField, beta: FormField,
                     convention: str = "interior") -> FormField:
    """``L_{#alpha} beta - correction`` (interior reading by default)."""
    _check(S, alpha, beta)
    return lie_derivative_form(anchor(S, alpha), beta) - _correction(S, alpha, beta, convention)


def _form_residuals(key, form) -> list:
    if not form.coeffs:
        return [(key, Polynomial.zero(form.n))]
    return [((key, tuple(i + 1 for i in k)), c) for k, c in sorted(form.coeffs.items())]


def _vec_residuals(key, X: VectorField) -> list:
    return [((key, k + 1), c) for k, c in enumerate(X.components)]


# --- seeded test forms --------------------------------------------------------------

def random_forms(S: NambuStructure, count: int, seed: int = 0, max_degree: int = 2,
                 terms: int = 2) -> list[FormField]:
    """Seeded (r-1)-forms with polynomial coefficients of degree <= ``max_degree``.

    Coefficient monomials use the admissible generators so forms stay admissible.
    """
    rng = np.random.default_rng(seed)
    gens = S.generators()
    mons = [Polynomial.const(S.n, 1)] + list(gens)
    if max_degree >= 2:
        mons += [gens[a] * gens[b] for a in range(len(gens)) for b in range(a, len(gens))]
    covs = [differential(g) for g in gens]
    idx = list(itertools.combinations(range(len(gens)), S.r - 1))
    out = []
    for _ in range(count):
        form = None
        for _ in range(terms):
            J = idx[int(rng.integers(len(idx)))]
            coeff = Polynomial.zero(S.n)
            for _ in range(2):
                coeff = coeff + mons[int(rng.integers(len(mons)))] * int(rng.integers(-2, 3))
            base = wedge_many([covs[j] for j in J]) if J else FormField.scalar(Polynomial.const(S.n, 1))
            piece = base.scale(coeff)
            form = piece if form is None else form + piece
        out.append(form)
    return out


# --- checks -------------------------------------------------------------------------

def _notes(S: NambuStructure, fi_ok: bool | None) -> list:
    return [] if fi_ok is not False else ["axioms not guaranteed: structure fails the fundamental identity"]


def check_anchor_morphism(S: NambuStructure, pairs: Sequence[tuple[FormField, FormField]],
                          bracket: Bracket | None = None, singular_points: Sequence = (),
                          seed: int | None = None, fi_ok: bool | None = None) -> CheckReport:
    """``#[a, b] = [#a, #b]`` symbolically, plus pointwise at given singular points."""
    bracket = bracket or (lambda a, b: algebroid_bracket(S, a, b))
    residuals = []
    point_residuals = []
    for k, (a, b) in enumerate(pairs):
        diff = anchor(S, bracket(a, b)) - lie_bracket(anchor(S, a), anchor(S, b))
        residuals += _vec_residuals(("pair", k), diff)
        for x in singular_points:
            xq = as_fraction_point(x)
            point_residuals += [((("pair", k), ("point", tuple(map(str, xq)))), c(xq))
                                for c in diff.components]
    rep = make_report("anchor-morphism", "anchor-is-bracket-morphism",
                      residuals + point_residuals, exact=True, seed=seed,
                      details={"pairs": len(pairs), "singular_points": len(singular_points)})
    rep.notes += _notes(S, fi_ok)
    return rep


def check_exact_forms_identity(S: NambuStructure, fs: Sequence[Polynomial],
                               gs: Sequence[Polynomial], bracket: Bracket | None = None) -> CheckReport:
    """Bracket of ``df_1^..^df_{r-1}`` and ``dg_1^..^dg_{r-1}`` against the expanded sum."""
    _check(S)
    bracket = bracket or (lambda a, b: algebroid_bracket(S, a, b))
    r = S.r
    alpha = _exact_form(S, fs)
    beta = _exact_form(S, gs)
    lhs = bracket(alpha, beta)
    rhs = FormField(S.n, r - 1, {})
    for i in range(r - 1):
        inner = bracket_field(S, list(fs) + [gs[i]])
        pieces = [differential(g) for g in gs]
        pieces[i] = differential(inner)
        rhs = rhs + wedge_many(pieces)
    return make_report("exact-forms-identity", "bracket-of-exact-forms",
                       _form_residuals((tuple(map(str, fs)), tuple(map(str, gs))), lhs - rhs),
                       exact=True)


def _exact_form(S: NambuStructure, fs: Sequence[Polynomial]) -> FormField:
    if len(fs) != S.r - 1:
        raise ValueError(f"need {S.r - 1} functions")
    if not fs:
        return FormField.scalar(Polynomial.const(S.n, 1))
    return wedge_many([differential(f) for f in fs])


def check_module_rules(S: NambuStructure, f: Polynomial, pairs: Sequence[tuple[FormField, FormField]],
                       bracket: Bracket | None = None, flip_second_sign: bool = False,
                       seed: int | None = None) -> CheckReport:
    """Right rule ``[a, f b] = f[a, b] + #a(f) b`` and left rule
    ``[f a, b] = f[a, b] - i_{#a}(df ^ b)``.

    ``flip_second_sign`` negates the correction in the left rule (negative control).
    """
    bracket = bracket or (lambda a, b: algebroid_bracket(S, a, b))
    df = differential(f)
    residuals = []
    for k, (a, b) in enumerate(pairs):
        X = anchor(S, a)
        right = bracket(a, b.scale(f)) - bracket(a, b).scale(f) - b.scale(X.apply(f))
        corr = interior_vector(X, wedge_fields(df, b))
        left = bracket(a.scale(f), b) - bracket(a, b).scale(f) + (corr if not flip_second_sign else -corr)
        residuals += _form_residuals(("right", k), right) + _form_residuals(("left", k), left)
    return make_report("module-rules", "anchored-module-rules", residuals, exact=True, seed=seed,
                       details={"pairs": len(pairs), "f": str(f)})


def check_leibniz_identity(S: NambuStructure, triples: Sequence[tuple[FormField, FormField, FormField]],
                           bracket: Bracket | None = None, seed: int | None = None,
                           fi_ok: bool | None = None, form: str = "right") -> CheckReport:
    """Residual ``[[a,b],c] - [[a,c],b] - [a,[b,c]]`` for each triple.

    ``form="left"`` checks ``[a,[b,c]] - [[a,b],c] - [b,[a,c]]`` instead.  The two
    agree when every form lies in the image directions (n = r); for n > r only the
    left form survives forms along the kernel of the anchor.
    """
    bracket = bracket or (lambda a, b: algebroid_bracket(S, a, b))
    if form not in ("right", "left"):
        raise ValueError("form must be 'right' or 'left'")
    residuals = []
    for k, (a, b, c) in enumerate(triples):
        if form == "right":
            res = bracket(bracket(a, b), c) - bracket(bracket(a, c), b) - bracket(a, bracket(b, c))
        else:
            res = bracket(a, bracket(b, c)) - bracket(bracket(a, b), c) - bracket(b, bracket(a, c))
        residuals += _form_residuals(("triple", k), res)
    rep = make_report("leibniz-identity", "leibniz-algebra", residuals, exact=True, seed=seed,
                      details={"triples": len(triples), "form": form})
    rep.notes += _notes(S, fi_ok)
    return rep
