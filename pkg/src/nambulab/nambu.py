"""Partial almost r-Nambu-Poisson structures, brackets and identity checks.

A structure bundles an r-vector field ``tensor`` with a constant restriction
matrix ``B`` whose rows span the admissible covectors.  The bracket convention
is ``{f_1, ..., f_r} = tensor(df_1, ..., df_r)``, so the canonical tensor gives
the Jacobian determinant, and the Hamiltonian field of ``f_1..f_{r-1}`` acts by
``X(g) = {f_1, ..., f_{r-1}, g}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .fields import (Box, FormField, MultiVectorField, ScalarField, VectorField,
                     contract, differential, lie_bracket, lie_bracket_at,
                     multivector_to_vector, wedge_many)
from .linalg import identity, in_rowspan, nullspace, rank, rref, svd_rank
from .multilinear import (COVECTOR, VECTOR, AltTensor, add_term, det_generic,
                          interior, interior_terms, sort_sign, wedge)
from .poly import Polynomial, UnsupportedModeError, is_rational_point
from .reports import FAIL, PASS, UNSUPPORTED, CheckReport, make_report

FI_ANCHOR = "filippov-identity"


class RestrictionError(ValueError):
    """A function or covector falls outside the admissible restriction."""


class ConfigurationError(ValueError):
    """Invalid check configuration (e.g. a test family that is too small)."""


class TheoremViolation(AssertionError):
    """A property guaranteed by the theory failed on the computed data."""


class NambuStructure:
    """``(n, r, tensor, B, box)`` defining a partial almost Nambu anchor."""

    def __init__(self, tensor: MultiVectorField, restriction: Sequence[Sequence] | None = None,
                 box: Box | None = None, name: str = ""):
        if not isinstance(tensor, MultiVectorField):
            raise TypeError("tensor must be a MultiVectorField")
        n, r = tensor.n, tensor.degree
        if not 1 <= r <= n:
            raise ValueError(f"order r={r} must satisfy 1 <= r <= n={n}")
        B = identity(n) if restriction is None else [[Fraction(v) for v in row]
                                                     for row in restriction]
        if any(len(row) != n for row in B):
            raise ValueError("restriction rows must have n entries")
        if rank(B) != len(B):
            raise ValueError("restriction matrix must have full row rank")
        self.tensor = tensor
        self.B = B
        self.box = box if box is not None else Box.cube(n, 2)
        if self.box.n != n:
            raise ValueError("box dimension differs from n")
        self.name = name
        self._annihilator = nullspace(B, n)
        self._gen_rows = rref(B)[0]

    @property
    def n(self) -> int:
        return self.tensor.n

    @property
    def r(self) -> int:
        return self.tensor.degree

    @property
    def m(self) -> int:
        return len(self.B)

    @property
    def is_partial(self) -> bool:
        return self.m < self.n

    @property
    def is_exact(self) -> bool:
        return self.tensor.is_exact

    def generators(self) -> list[Polynomial]:
        """Admissible linear functions spanning the restriction (RREF rows of B)."""
        return [Polynomial.linear(row) for row in self._gen_rows]

    def generator_names(self) -> list[str]:
        return [str(g) for g in self.generators()]

    def covector_basis(self) -> list[AltTensor]:
        """Degree-1 covectors spanning the restriction."""
        return [AltTensor(self.n, 1, {(i,): v for i, v in enumerate(row)}, COVECTOR)
                for row in self._gen_rows]

    def tensor_at(self, x: Sequence) -> AltTensor:
        return self.tensor.at(x)

    def scaled(self, h: Polynomial, name: str | None = None) -> "NambuStructure":
        """Structure with tensor ``h * tensor`` (same restriction and box)."""
        return NambuStructure(self.tensor.scale(h), self.B, self.box,
                              name if name is not None else f"({h})*{self.name}")

    def __repr__(self) -> str:
        return f"NambuStructure({self.name or 'unnamed'}, n={self.n}, r={self.r}, m={self.m})"


@dataclass(frozen=True)
class PointClass:
    point: tuple
    rank: int
    cls: str  # "Regular" | "Singular"

    @property
    def regular(self) -> bool:
        return self.cls == "Regular"


# --- admissibility ------------------------------------------------------------

def admissible_fn_check(S: NambuStructure, f: ScalarField, samples: int = 16,
                        seed: int = 0) -> bool:
    """True iff df lies in the row span of B everywhere.

    Exact polynomials are decided symbolically: every annihilator direction
    ``c`` of the row span must give ``sum_i c_i d_i f == 0``.  Numeric
    functions are tested at seeded points and the decision is approximate.
    """
    if isinstance(f, Polynomial):
        for c in S._annihilator:
            acc = Polynomial.zero(S.n)
            for i, ci in enumerate(c):
                if ci:
                    acc = acc + f.diff(i) * ci
            if not acc.is_zero():
                return False
        return True
    rng = np.random.default_rng(seed)
    C = np.array([[float(v) for v in c] for c in S._annihilator]).reshape(-1, S.n)
    for x in S.box.sample(rng, samples, exact=False):
        g = f.jet(x)[1]
        if C.size and np.max(np.abs(C @ g)) > 1e-9 * max(1.0, float(np.max(np.abs(g)))):
            return False
    return True


def _require_admissible(S: NambuStructure, fs: Sequence[ScalarField]) -> None:
    if not S.is_partial:
        return
    for f in fs:
        if not admissible_fn_check(S, f):
            raise RestrictionError(f"function {f} is not admissible for {S.name or 'structure'}")


def _form_in_restriction(S: NambuStructure, omega: AltTensor) -> bool:
    # omega lies in the exterior power of the row span iff inserting any
    # annihilator vector gives zero
    for c in S._annihilator:
        acc: dict = {}
        for I, v in omega.coeffs.items():
            for pos, i in enumerate(I):
                if c[i]:
                    t = v * c[i]
                    add_term(acc, I[:pos] + I[pos + 1:], t if pos % 2 == 0 else -t)
        if any((abs(v) > 1e-12) if isinstance(v, float) else v != 0 for v in acc.values()):
            return False
    return True


# --- anchor, brackets, Hamiltonian fields --------------------------------------

def sharp(S: NambuStructure, omega: AltTensor, x: Sequence) -> AltTensor:
    """Contract an (r-1)-covector into the tensor at ``x``."""
    if omega.variance != COVECTOR or omega.degree != S.r - 1:
        raise ValueError(f"expected a covector of degree {S.r - 1}")
    if S.is_partial and not _form_in_restriction(S, omega):
        raise RestrictionError("covector outside the restriction subspace")
    return interior(omega, S.tensor_at(x))


def bracket_field(S: NambuStructure, fs: Sequence[Polynomial]) -> Polynomial:
    """{f_1, ..., f_r} as a polynomial."""
    if len(fs) != S.r:
        raise ValueError(f"bracket needs {S.r} functions")
    _require_admissible(S, fs)
    return S.tensor.eval_forms([differential(f) for f in fs])


def bracket_eval(S: NambuStructure, fs: Sequence[ScalarField], g: ScalarField,
                 x: Sequence):
    """{f_1, ..., f_{r-1}, g}(x) from 1-jets at ``x``."""
    if len(fs) != S.r - 1:
        raise ValueError(f"bracket_eval needs {S.r - 1} leading functions")
    S.box.require(x)
    _require_admissible(S, list(fs) + [g])
    args = [f.jet(x)[1] for f in list(fs) + [g]]
    return _eval_point(S.tensor_at(x), args)


def _eval_point(t: AltTensor, args: Sequence[Sequence]):
    total = Fraction(0) if t.is_exact and all(is_rational_point(a) for a in args) else 0.0
    for I, c in t.coeffs.items():
        total = total + c * det_generic([[a[i] for i in I] for a in args])
    return total


def hamiltonian_field(S: NambuStructure, fs: Sequence[Polynomial]) -> VectorField:
    """X_{f_1..f_{r-1}}, with X(g) = {f_1, ..., f_{r-1}, g}."""
    if len(fs) != S.r - 1:
        raise ValueError(f"Hamiltonian field needs {S.r - 1} functions")
    _require_admissible(S, fs)
    return _ham(S.tensor, [differential(f) for f in fs])


def _ham(tensor: MultiVectorField, dfs: Sequence[FormField]) -> VectorField:
    if not dfs:
        return multivector_to_vector(tensor)
    return multivector_to_vector(contract(wedge_many(list(dfs)), tensor))


def fixed_slot_anchor(S: NambuStructure, betas: Sequence) -> NambuStructure:
    """Order-k structure obtained by fixing ``r - k`` constant covectors."""
    k = S.r - len(betas)
    if k < 1:
        raise ValueError(f"arity error: fixing {len(betas)} covectors leaves order {k} < 1")
    if not betas:
        return S
    covs = []
    for b in betas:
        t = b if isinstance(b, AltTensor) else AltTensor(S.n, 1, {(i,): v for i, v in enumerate(b)},
                                                         COVECTOR)
        if t.degree != 1 or t.variance != COVECTOR:
            raise ValueError("fixed slots take degree-1 covectors")
        if S.is_partial and not in_rowspan(t.dense(), S.B):
            raise RestrictionError("fixed covector outside the restriction")
        covs.append(t)
    omega = covs[0]
    for t in covs[1:]:
        omega = wedge(omega, t)
    form = FormField.constant(omega)
    tensor = contract(form, S.tensor)
    return NambuStructure(tensor, S.B, S.box, f"fixed({S.name})")


# --- test families --------------------------------------------------------------

def test_family(S: NambuStructure, kind: str = "full", seed: int = 0,
                n_random: int = 8) -> list[Polynomial]:
    """Admissible test functions: generators, their pairwise products, random quadratics.

    ``kind`` is ``coords`` (linear generators only), ``quad`` (plus products)
    or ``full`` (plus ``n_random`` seeded random quadratics).
    """
    if kind not in ("coords", "quad", "full"):
        raise ConfigurationError(f"unknown family {kind!r}")
    gens = S.generators()
    fam = list(gens)
    if kind in ("quad", "full"):
        fam += [gens[a] * gens[b] for a in range(len(gens)) for b in range(a, len(gens))]
    if kind == "full":
        rng = np.random.default_rng(seed)
        m = len(gens)
        for _ in range(n_random):
            p = Polynomial.const(S.n, int(rng.integers(-3, 4)))
            for a in range(m):
                p = p + gens[a] * int(rng.integers(-3, 4))
                for b in range(a, m):
                    p = p + gens[a] * gens[b] * int(rng.integers(-3, 4))
            fam.append(p)
    out, seen = [], set()
    for p in fam:
        if p.is_constant() or p in seen:
            continue
        seen.add(p)
        out.append(p)
    return out


# --- Leibniz ------------------------------------------------------------------

BracketFn = Callable[[Sequence[Polynomial], Polynomial], Polynomial]


def check_leibniz(S: NambuStructure, bracket: BracketFn | None = None,
                  family: str = "quad", seed: int = 0) -> CheckReport:
    """Leibniz rule in the last slot over generators and products of pairs.

    ``bracket`` replaces the tensor bracket (a test hook); it receives the
    leading ``r - 1`` functions and the last one.
    """
    if not S.is_exact:
        return CheckReport("leibniz", "leibniz-rule", UNSUPPORTED, notes=["numeric structure"])
    if bracket is None:
        def bracket(fs, g):
            return _ham(S.tensor, [differential(f) for f in fs]).apply(g)
    gens = S.generators()
    fam = test_family(S, family, seed)
    residuals = []
    for fs in itertools.combinations(gens, S.r - 1):
        for g, h in itertools.combinations_with_replacement(fam, 2):
            res = bracket(fs, g * h) - g * bracket(fs, h) - h * bracket(fs, g)
            residuals.append(((tuple(map(str, fs)), str(g), str(h)), res))
    return make_report("leibniz", "leibniz-rule", residuals, exact=True, seed=seed)


# --- Filippov identity: direct ----------------------------------------------------

def _alt_sign(r: int, i: int) -> int:
    # {g_1..phi..g_r} with phi at 0-based slot i equals this sign times
    # {g_1..g^_i..g_r, phi}
    return -1 if (r - 1 - i) % 2 else 1


def fi_residual(S: NambuStructure, fs: Sequence[Polynomial],
                gs: Sequence[Polynomial]) -> Polynomial:
    """LHS minus RHS of the fundamental identity for one slot assignment."""
    r = S.r
    Xf = hamiltonian_field(S, fs)
    lhs = Xf.apply(bracket_field(S, gs))
    rhs = Polynomial.zero(S.n)
    for i in range(r):
        others = list(gs[:i]) + list(gs[i + 1:])
        rhs = rhs + hamiltonian_field(S, others).apply(Xf.apply(gs[i])) * _alt_sign(r, i)
    return lhs - rhs


def check_filippov_direct(S: NambuStructure, family: str | Sequence[Polynomial] = "full",
                          seed: int = 0, g_slots: str = "generators",
                          samples: int = 64, tol: float = 1e-9) -> CheckReport:
    """Fundamental identity residuals over a test family.

    f-slots run over ``(r-1)``-subsets of the family.  With
    ``g_slots="generators"`` the g-slots run over the admissible linear
    generators: the residual is a derivation in each g-slot once the Leibniz
    rule holds, so vanishing on generators gives vanishing on every polynomial.
    ``g_slots="family"`` enumerates the whole family instead.
    """
    r = S.r
    fam = test_family(S, family, seed) if isinstance(family, str) else list(family)
    if len(fam) < r + 1:
        raise ConfigurationError(f"test family has {len(fam)} functions; need at least {r + 1}")
    _require_admissible(S, fam)
    gpool = S.generators() if g_slots == "generators" else fam
    if len(gpool) < r:
        # too few admissible directions for a nonzero bracket: vacuous
        return CheckReport("filippov-direct", FI_ANCHOR, PASS, seed=seed,
                           details={"cases": 0, "note": "restriction rank below r"})
    if not S.is_exact:
        return _fi_direct_numeric(S, fam, gpool, seed, samples, tol)
    names = {p: str(p) for p in fam + gpool}
    gcombos = list(itertools.combinations(gpool, r))
    bg = {gs: bracket_field(S, gs) for gs in gcombos}
    ham_cache: dict = {}

    def ham(key):
        if key not in ham_cache:
            ham_cache[key] = _ham(S.tensor, [differential(f) for f in key])
        return ham_cache[key]

    residuals = []
    for fs in itertools.combinations(fam, r - 1):
        Xf = ham(fs)
        if Xf.is_zero():
            for gs in gcombos:
                residuals.append((_key(fs, gs, names), Polynomial.zero(S.n)))
            continue
        for gs in gcombos:
            lhs = Xf.apply(bg[gs])
            rhs = Polynomial.zero(S.n)
            for i in range(r):
                phi = Xf.apply(gs[i])
                if phi.is_zero():
                    continue
                term = ham(gs[:i] + gs[i + 1:]).apply(phi)
                rhs = rhs + (term if _alt_sign(r, i) > 0 else -term)
            residuals.append((_key(fs, gs, names), lhs - rhs))
    rep = make_report("filippov-direct", FI_ANCHOR, residuals, exact=True, seed=seed,
                      details={"family_size": len(fam), "g_slots": g_slots})
    return rep


def _key(fs, gs, names) -> tuple:
    return (tuple(names[f] for f in fs), tuple(names[g] for g in gs))


class _Jet1:
    """First-order jet (value, gradient) with ring operations."""

    __slots__ = ("v", "g")

    def __init__(self, v, g):
        self.v = v
        self.g = np.asarray(g, dtype=float)

    def __add__(self, o):
        return _Jet1(self.v + o.v, self.g + o.g) if isinstance(o, _Jet1) else _Jet1(self.v + o, self.g)

    __radd__ = __add__

    def __neg__(self):
        return _Jet1(-self.v, -self.g)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, _Jet1):
            return _Jet1(self.v * o.v, self.v * o.g + o.v * self.g)
        return _Jet1(self.v * o, self.g * o)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.v == 0 and not np.any(self.g)


def _tensor_jets(S: NambuStructure, x: np.ndarray) -> dict:
    out = {}
    for I, c in S.tensor.coeffs.items():
        v, g, _ = c.jet(x)
        out[I] = _Jet1(float(v), g)
    return out


def _fi_direct_numeric(S, fam, gpool, seed, samples, tol) -> CheckReport:
    r, n = S.r, S.n
    rng = np.random.default_rng(seed)
    pts = S.box.sample(rng, samples, exact=False)
    names = {p: str(p) for p in fam + gpool}
    residuals = []
    gvecs = {g: np.array([float(g.diff(i).constant_value()) for i in range(n)]) for g in gpool}
    if any(g.degree > 1 for g in gpool):
        raise ConfigurationError("numeric mode uses linear generators in the g-slots")
    for x in pts:
        xa = np.asarray(x)
        lam = _tensor_jets(S, xa)

        def ham_jet(dfs):
            form = {(): _Jet1(1.0, np.zeros(n))}
            for df in dfs:
                form = _wedge_jets(form, {(k,): df[k] for k in range(n) if not df[k].is_zero()})
            comp = interior_terms(form, lam)
            return [comp.get((k,), _Jet1(0.0, np.zeros(n))) for k in range(n)]

        def dpoly(f):
            v, g, h = f.jet(xa)
            return [_Jet1(g[k], h[k]) for k in range(n)]

        def dconst(g):
            return [_Jet1(gvecs[g][k], np.zeros(n)) for k in range(n)]

        gcombos = list(itertools.combinations(gpool, r))
        for fs in itertools.combinations(fam, r - 1):
            Xf = ham_jet([dpoly(f) for f in fs])
            Xf_val = np.array([c.v for c in Xf])
            Xf_jac = np.array([c.g for c in Xf])  # row k: gradient of X^k
            for gs in gcombos:
                full = ham_jet([dconst(g) for g in gs[:-1]])
                bg = sum((full[k] * gvecs[gs[-1]][k] for k in range(n)), _Jet1(0.0, np.zeros(n)))
                lhs = float(Xf_val @ bg.g)
                rhs = 0.0
                for i in range(r):
                    others = gs[:i] + gs[i + 1:]
                    Xo = np.array([c.v for c in ham_jet([dconst(g) for g in others])])
                    grad_phi = Xf_jac.T @ gvecs[gs[i]]
                    rhs += _alt_sign(r, i) * float(Xo @ grad_phi)
                residuals.append(((_key(fs, gs, names), tuple(round(v, 12) for v in x)), lhs - rhs))
    return make_report("filippov-direct", FI_ANCHOR, residuals, exact=False, tol=tol, seed=seed,
                       details={"family_size": len(fam), "samples": samples})


def _wedge_jets(a: dict, b: dict) -> dict:
    out: dict = {}
    for I, x in a.items():
        for J, y in b.items():
            K, s = sort_sign(I + J)
            if s == 0:
                continue
            p = x * y
            if K in out:
                out[K] = out[K] + (p if s > 0 else -p)
            else:
                out[K] = p if s > 0 else -p
    return out


# --- Filippov identity: Lie derivative of the tensor ---------------------------

def lie_derivative_tensor(X: VectorField, tensor: MultiVectorField) -> MultiVectorField:
    """Componentwise L_X tensor: X(T^I) - sum over slots of T^{..k..} d_k X^{i_s}."""
    n = tensor.n
    acc: dict = {}
    for I, c in tensor.coeffs.items():
        add_term(acc, I, X.apply(c))
    dX = {}
    for J, c in tensor.coeffs.items():
        for s, k in enumerate(J):
            for i in range(n):
                key = (i, k)
                if key not in dX:
                    dX[key] = X.components[i].diff(k)
                d = dX[key]
                if d.is_zero():
                    continue
                raw = J[:s] + (i,) + J[s + 1:]
                K, sg = sort_sign(raw)
                if sg == 0:
                    continue
                t = c * d
                add_term(acc, K, -t if sg > 0 else t)
    return MultiVectorField._raw(n, tensor.degree, acc)


def check_lie_derivative_criterion(S: NambuStructure, family: str | Sequence[Polynomial] = "full",
                                   seed: int = 0) -> CheckReport:
    """L_{X_f} tensor vanishes on the restriction for all (r-1)-subsets f."""
    anchor = "hamiltonian-fields-preserve-tensor"
    if not S.is_exact:
        return CheckReport("lie-derivative", anchor, UNSUPPORTED, seed=seed,
                           notes=["requires exact polynomial data"])
    r = S.r
    fam = test_family(S, family, seed) if isinstance(family, str) else list(family)
    if len(fam) < r + 1:
        raise ConfigurationError(f"test family has {len(fam)} functions; need at least {r + 1}")
    _require_admissible(S, fam)
    gens = S.generators()
    tests = []
    for gs in itertools.combinations(range(len(gens)), r):
        form = wedge_many([differential(gens[i]) for i in gs]) if r else None
        tests.append((tuple(str(gens[i]) for i in gs), form))
    residuals = []
    for fs in itertools.combinations(fam, r - 1):
        X = _ham(S.tensor, [differential(f) for f in fs])
        L = lie_derivative_tensor(X, S.tensor)
        for gkey, form in tests:
            val = _pair(form, L)
            residuals.append(((tuple(map(str, fs)), gkey), val))
    return make_report("lie-derivative", anchor, residuals, exact=True, seed=seed,
                       details={"family_size": len(fam)})


def _pair(form: FormField, mv: MultiVectorField) -> Polynomial:
    out = Polynomial.zero(mv.n)
    for I, c in form.coeffs.items():
        d = mv.coeffs.get(I)
        if d is not None:
            out = out + c * d
    return out


# --- Filippov identity: structural (decomposable + involutive) -------------------

def restriction_frame(S: NambuStructure) -> list[tuple[tuple, VectorField]]:
    """Hamiltonian fields of the basis (r-1)-covectors of the restriction."""
    if not S.is_exact:
        raise UnsupportedModeError("symbolic frame requires exact data")
    gens = S.generators()
    out = []
    for J in itertools.combinations(range(len(gens)), S.r - 1):
        X = _ham(S.tensor, [differential(gens[j]) for j in J])
        out.append((J, X))
    return out


def check_filippov_structural(S: NambuStructure, samples: int = 64, seed: int = 0,
                              rel: float = 1e-10, points: Sequence | None = None) -> CheckReport:
    """Pointwise decomposability plus rank-r involutive distribution at regular points.

    ``points`` replaces the seeded sample (used to replay a witness).
    """
    anchor = "decomposable-and-integrable"
    if S.r < 3:
        return CheckReport("filippov-structural", anchor, UNSUPPORTED, seed=seed,
                           notes=["order r < 3: use the direct check"])
    rng = np.random.default_rng(seed)
    pts = list(points) if points is not None else S.box.sample(rng, samples, exact=S.is_exact)
    frame = [X for _, X in restriction_frame(S)]
    witnesses, worst, n_regular = [], 0, 0
    for x in pts:
        ok, _ = plucker_check(S.tensor_at(x))
        xf = np.asarray(x, dtype=float)
        M = np.array([X.evaluator()(xf) for X in frame]).T
        rk = svd_rank(M, rel)
        if rk == 0:
            continue
        n_regular += 1
        if not ok:
            witnesses.append({"point": x, "failure": "not decomposable"})
            continue
        brackets = [lie_bracket_at(frame[a], frame[b], xf)
                    for a, b in itertools.combinations(range(len(frame)), 2)]
        big = np.column_stack([M] + brackets) if brackets else M
        rk_big = svd_rank(big, rel)
        if rk != S.r or rk_big > S.r:
            witnesses.append({"point": x, "failure": "rank" if rk != S.r else "not involutive",
                              "rank": rk, "rank_with_brackets": rk_big})
        worst = max(worst, rk_big - S.r)
    verdict = FAIL if witnesses else PASS
    rep = CheckReport("filippov-structural", anchor, verdict, worst, None, witnesses[:3], seed,
                      {"samples": samples, "regular_samples": n_regular,
                       "failing_samples": len(witnesses)})
    if n_regular == 0:
        rep.notes.append("no regular sample points")
    return rep


def plucker_check(t: AltTensor, tol: float = 1e-9) -> tuple[bool, list[AltTensor] | None]:
    """Decomposability by the quadratic relations over basis covectors.

    For every basis choice ``c_1..c_{r-2}, a, b`` checks
    ``T_{c,a} ^ T_b + T_{c,b} ^ T_a = 0``.  On success with ``t != 0`` a
    factorization ``X_1 ^ ... ^ X_r = t`` is returned.
    """
    r, n = t.degree, t.n
    if r < 3:
        raise UnsupportedModeError("the quadratic decomposability relations need r >= 3")
    if t.variance != VECTOR:
        raise ValueError("expected a vector-type tensor")
    exact = t.is_exact
    if t.is_zero():
        return True, None
    cov = [AltTensor.basis(n, (i,), COVECTOR) for i in range(n)]
    single = [interior(cov[i], t) for i in range(n)]
    norm2 = sum(float(v) ** 2 for v in t.coeffs.values())
    for c in itertools.combinations(range(n), r - 2):
        cform = AltTensor.basis(n, c, COVECTOR)
        pair = []
        for a in range(n):
            pair.append(None if a in c else interior(wedge(cform, cov[a]), t))
        for a in range(n):
            if pair[a] is None:
                continue
            for b in range(a, n):
                if pair[b] is None:
                    continue
                rel = wedge(pair[a], single[b]) + wedge(pair[b], single[a])
                if exact:
                    if not rel.is_zero():
                        return False, None
                elif rel.coeffs and max(abs(v) for v in rel.coeffs.values()) / norm2 > tol:
                    return False, None
    return True, _factorize(t)


def _factorize(t: AltTensor) -> list[AltTensor]:
    r, n = t.degree, t.n
    best = max(abs(v) for v in t.coeffs.values())
    I = min(k for k, v in t.coeffs.items() if abs(v) == best)
    c = t.coeffs[I]
    factors = []
    for k in range(r):
        rest = I[:k] + I[k + 1:]
        Y = interior(AltTensor.basis(n, rest, COVECTOR), t)
        # <dx^{I_k}, Y> = sign_k * c with sign_k from moving I_k past the rest
        sign = -1 if (r - 1 - k) % 2 else 1
        factors.append(Y.scale(sign / c ** (r - 1) if k == 0 else sign))
    return factors


# --- commutator form of the identity ----------------------------------------------

def commutator_identity_check(S: NambuStructure, f_slots: Sequence[Polynomial],
                              g_slots: Sequence[Polynomial]) -> CheckReport:
    """[X_f, X_g] against sum_i X_{g_1..X_f(g_i)..g_{r-1}} as polynomial fields."""
    anchor = "hamiltonian-commutator"
    if not S.is_exact:
        return CheckReport("commutator-identity", anchor, UNSUPPORTED)
    Xf = hamiltonian_field(S, f_slots)
    Xg = hamiltonian_field(S, g_slots)
    lhs = lie_bracket(Xf, Xg)
    rhs = VectorField.zero(S.n)
    for i, g in enumerate(g_slots):
        slots = list(g_slots)
        slots[i] = Xf.apply(g)
        rhs = rhs + hamiltonian_field(S, slots)
    diff = lhs - rhs
    residuals = [((tuple(map(str, f_slots)), tuple(map(str, g_slots)), f"component {k + 1}"), c)
                 for k, c in enumerate(diff.components)]
    return make_report("commutator-identity", anchor, residuals, exact=True,
                       details={"lhs": repr(lhs), "rhs": repr(rhs)})


# --- point classification ----------------------------------------------------------

def sharp_matrix(S: NambuStructure, x: Sequence) -> np.ndarray:
    """Columns: images of basis (r-1)-covectors of the restriction at ``x``."""
    t = S.tensor_at(x)
    covs = S.covector_basis()
    cols = []
    for J in itertools.combinations(range(len(covs)), S.r - 1):
        omega = AltTensor.scalar(S.n, 1, COVECTOR)
        for j in J:
            omega = wedge(omega, covs[j])
        v = interior(omega, t)
        cols.append([float(c) for c in v.dense()] if v.degree == 1 else [float(v.value())])
    return np.array(cols, dtype=float).T if cols else np.zeros((S.n, 0))


def classify_point(S: NambuStructure, x: Sequence, rel: float = 1e-10) -> PointClass:
    S.box.require(x)
    rk = svd_rank(sharp_matrix(S, x), rel)
    if 0 < rk < S.r:
        raise TheoremViolation(f"regular point ({', '.join(map(str, x))}) has anchor rank {rk} < r={S.r}")
    return PointClass(tuple(x), rk, "Regular" if rk > 0 else "Singular")


def fi_battery(S: NambuStructure, family: str = "full", seed: int = 0,
               samples: int = 64) -> list[CheckReport]:
    """Direct, Lie-derivative and (for r >= 3) structural verifiers."""
    out = [check_filippov_direct(S, family, seed),
           check_lie_derivative_criterion(S, family, seed)]
    out.append(check_filippov_structural(S, samples, seed))
    return out
