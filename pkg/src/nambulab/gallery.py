"""Concrete example structures, Lie-group constructions and loop brackets."""

from __future__ import annotations

import itertools
import warnings
from math import comb, factorial
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .fields import Box, DomainError, MultiVectorField, VectorField, wedge_vectors
from .linalg import in_rowspan, rank
from .nambu import (NambuStructure, TheoremViolation, bracket_field, classify_point,
                    test_family)
from .poly import Polynomial, is_rational_point


class TruncationWarning(UserWarning):
    """Left-invariant fields were truncated and are not exact."""


@dataclass
class GalleryItem:
    name: str
    structure: NambuStructure
    expected: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def _canonical_tensor(n: int, r: int, coeff: Polynomial | None = None) -> MultiVectorField:
    c = coeff if coeff is not None else Polynomial.const(n, 1)
    return MultiVectorField(n, r, {tuple(range(r)): c})


def canonical_structure(n: int, r: int, box: Box | None = None) -> NambuStructure:
    """d_1 ^ ... ^ d_r on R^n."""
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    return NambuStructure(_canonical_tensor(n, r), box=box, name=f"canonical({n},{r})")


def scaled_structure(n: int, r: int, h: Polynomial | str, box: Box | None = None) -> NambuStructure:
    """h * d_1 ^ ... ^ d_r on R^n."""
    if isinstance(h, str):
        h = Polynomial.parse(h, n)
    if not h.is_exact:
        raise TypeError("scaling function must be an exact polynomial")
    return NambuStructure(_canonical_tensor(n, r, h), box=box, name=f"scaled({n},{r},{h})")


def l1_truncated(N: int, index_set: Sequence[int], box: Box | None = None) -> NambuStructure:
    """Sum over i<j<k in I of d_i ^ d_j ^ d_k / (ijk), restricted to the I coordinates.

    ``index_set`` uses 1-based labels.
    """
    I = sorted(set(index_set))
    if len(I) < 3 or I[0] < 1 or I[-1] > N:
        raise ValueError("index set needs at least 3 labels within 1..N")
    coeffs = {(i - 1, j - 1, k - 1): Fraction(1, i * j * k)
              for i, j, k in itertools.combinations(I, 3)}
    B = [[int(c == i - 1) for c in range(N)] for i in I]
    return NambuStructure(MultiVectorField(N, 3, coeffs), B, box,
                          name=f"l1({N},{{{','.join(map(str, I))}}})")


def l1_summability(index_set: Sequence[int]) -> tuple[Fraction, Fraction]:
    """(sum of |lambda_ijk| over the truncation, bound sum_{i in I} 1/i^3)."""
    I = sorted(set(index_set))
    total = sum((Fraction(1, i * j * k) for i, j, k in itertools.combinations(I, 3)), Fraction(0))
    bound = sum((Fraction(1, i ** 3) for i in I), Fraction(0))
    return total, bound


def sequence_poisson(N: int, box: Box | None = None) -> NambuStructure:
    """sum_k d/dq_k ^ d/dp_k on R^{2N}; coordinates (q_1..q_N, p_1..p_N)."""
    if N < 1:
        raise ValueError("N >= 1")
    return NambuStructure(MultiVectorField(2 * N, 2, {(k, N + k): 1 for k in range(N)}),
                          box=box, name=f"seqpoisson({N})")


# --- Lie algebras ----------------------------------------------------------------

class LieAlgebraPresentation:
    """Structure constants ``c[i][j][k]`` with ``[a_i, a_j] = sum_k c[i][j][k] a_k``."""

    def __init__(self, labels: Sequence[str], brackets: dict, matrices: Sequence | None = None):
        self.labels = list(labels)
        d = self.dim = len(self.labels)
        idx = {l: i for i, l in enumerate(self.labels)}
        c = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
        for (a, b), out in brackets.items():
            i, j = idx[a], idx[b]
            for lab, v in out.items():
                c[i][j][idx[lab]] += Fraction(v)
                c[j][i][idx[lab]] -= Fraction(v)
        self.c = c
        self.matrices = [np.asarray(m, dtype=float) for m in matrices] if matrices else None
        self._validate()

    def _validate(self) -> None:
        d = self.dim
        for i, j, k in itertools.product(range(d), repeat=3):
            if self.c[i][j][k] != -self.c[j][i][k]:
                raise ValueError("structure constants are not antisymmetric")
        for i, j, k in itertools.combinations(range(d), 3):
            jac = [self.bracket_vec(self.basis(i), self.bracket_vec(self.basis(j), self.basis(k))),
                   self.bracket_vec(self.basis(j), self.bracket_vec(self.basis(k), self.basis(i))),
                   self.bracket_vec(self.basis(k), self.bracket_vec(self.basis(i), self.basis(j)))]
            if any(sum(v) != 0 for v in zip(*jac)):
                raise ValueError("structure constants violate the Jacobi identity")
        if self.matrices is not None:
            for i, j in itertools.combinations(range(d), 2):
                A, B = self.matrices[i], self.matrices[j]
                rhs = sum(float(self.c[i][j][k]) * self.matrices[k] for k in range(d))
                if not np.allclose(A @ B - B @ A, rhs, atol=1e-12):
                    raise ValueError("matrix realization does not match the brackets")

    def basis(self, i: int) -> list[Fraction]:
        return [Fraction(int(k == i)) for k in range(self.dim)]

    def vector(self, spec: str | Sequence) -> list[Fraction]:
        if isinstance(spec, str):
            return self.basis(self.labels.index(spec))
        return [Fraction(v) for v in spec]

    def bracket_vec(self, u: Sequence, v: Sequence) -> list[Fraction]:
        d = self.dim
        out = [Fraction(0)] * d
        for i in range(d):
            if not u[i]:
                continue
            for j in range(d):
                if not v[j]:
                    continue
                for k in range(d):
                    if self.c[i][j][k]:
                        out[k] += u[i] * v[j] * self.c[i][j][k]
        return out

    def ad_matrix(self) -> list[list[Polynomial]]:
        """Matrix of ad_xi with polynomial entries in the coordinates xi."""
        d = self.dim
        return [[sum((Polynomial.var(d, i) * self.c[i][j][k] for i in range(d) if self.c[i][j][k]),
                     Polynomial.zero(d)) for j in range(d)] for k in range(d)]

    def matrix_of(self, xi: Sequence[float]) -> np.ndarray:
        if self.matrices is None:
            raise ValueError("no matrix realization")
        return sum(float(x) * M for x, M in zip(xi, self.matrices))

    def coords_of(self, A: np.ndarray) -> np.ndarray:
        """Coordinates of a Lie-algebra matrix in the basis (least squares)."""
        basis = np.array([M.ravel() for M in self.matrices]).T
        sol, *_ = np.linalg.lstsq(basis, np.asarray(A, dtype=float).ravel(), rcond=None)
        return sol


def _E(m: int, i: int, j: int) -> np.ndarray:
    M = np.zeros((m, m))
    M[i, j] = 1.0
    return M


def heisenberg() -> LieAlgebraPresentation:
    """[X, Y] = Z realized by strictly upper triangular 3x3 matrices."""
    return LieAlgebraPresentation(["X", "Y", "Z"], {("X", "Y"): {"Z": 1}},
                                  [_E(3, 0, 1), _E(3, 1, 2), _E(3, 0, 2)])


def heisenberg_times_r() -> LieAlgebraPresentation:
    """Heisenberg algebra plus a central direction W."""
    return LieAlgebraPresentation(["X", "Y", "Z", "W"], {("X", "Y"): {"Z": 1}},
                                  [_E(4, 0, 1), _E(4, 1, 2), _E(4, 0, 2), _E(4, 3, 3)])


def so3() -> LieAlgebraPresentation:
    L1 = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], float)
    L2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], float)
    L3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], float)
    return LieAlgebraPresentation(["L1", "L2", "L3"],
                                  {("L1", "L2"): {"L3": 1}, ("L2", "L3"): {"L1": 1},
                                   ("L3", "L1"): {"L2": 1}}, [L1, L2, L3])


def gl2() -> LieAlgebraPresentation:
    return LieAlgebraPresentation(
        ["E11", "E12", "E21", "E22"],
        {("E11", "E12"): {"E12": 1}, ("E11", "E21"): {"E21": -1},
         ("E12", "E21"): {"E11": 1, "E22": -1}, ("E12", "E22"): {"E12": 1},
         ("E21", "E22"): {"E21": -1}},
        [_E(2, 0, 0), _E(2, 0, 1), _E(2, 1, 0), _E(2, 1, 1)])


def abelian(d: int) -> LieAlgebraPresentation:
    return LieAlgebraPresentation([f"A{i + 1}" for i in range(d)], {},
                                  [_E(d + 1, i, d) for i in range(d)])


def subalgebra_check(L: LieAlgebraPresentation, span: Sequence) -> bool:
    """True iff the span of the given vectors is closed under the bracket."""
    vecs = [L.vector(v) for v in span]
    if rank(vecs) != len(vecs):
        raise ValueError("spanning vectors must be independent")
    return all(in_rowspan(L.bracket_vec(u, v), vecs)
               for u, v in itertools.combinations(vecs, 2))


def bernoulli_plus(k_max: int) -> list[Fraction]:
    """Bernoulli numbers with B_1 = +1/2 (coefficients of x/(1 - e^{-x}))."""
    B = [Fraction(1)]
    for m in range(1, k_max + 1):
        s = sum((Fraction(comb(m + 1, k)) * B[k] for k in range(m)), Fraction(0))
        B.append(-s / (m + 1))
    if k_max >= 1:
        B[1] = Fraction(1, 2)
    return B


def left_invariant_fields(L: LieAlgebraPresentation, vectors: Sequence, order: int = 4,
                          warn: bool = True) -> tuple[list[VectorField], bool]:
    """Left-invariant extensions in exponential coordinates of the first kind.

    ``X_a(xi) = sum_k B_k^+/k! (ad_xi)^k a`` truncated at ``order``; returns the
    fields and whether the series is exact (ad nilpotent).
    """
    d = L.dim
    ad = L.ad_matrix()
    B = bernoulli_plus(order + 1)
    coeff = [B[k] / factorial(k) for k in range(order + 1)]

    def apply(M, v):
        return [sum((M[i][j] * v[j] for j in range(d) if not v[j].is_zero()), Polynomial.zero(d))
                for i in range(d)]

    fields = []
    for a in vectors:
        a = L.vector(a)
        cur = [Polynomial.const(d, x) for x in a]
        total = [c * coeff[0] for c in cur]
        for k in range(1, order + 1):
            cur = apply(ad, cur)
            total = [t + c * coeff[k] for t, c in zip(total, cur)]
        fields.append(VectorField(total))
    # exact iff ad^(order+1) vanishes identically
    P = ad
    for _ in range(order):
        P = [[sum((P[i][k] * ad[k][j] for k in range(d)), Polynomial.zero(d))
              for j in range(d)] for i in range(d)]
    exact = all(e.is_zero() for row in P for e in row)
    if not exact and warn:
        warnings.warn(f"left-invariant fields truncated at order {order}", TruncationWarning,
                      stacklevel=2)
    return fields, exact


def left_invariant_structure(L: LieAlgebraPresentation, span: Sequence, order: int = 4,
                             box: Box | None = None, name: str = "") -> NambuStructure:
    """Wedge of the left-invariant extensions of the spanning vectors."""
    fields, exact = left_invariant_fields(L, span, order)
    box = box if box is not None else Box.cube(L.dim, 1)
    labels = [s if isinstance(s, str) else str(list(s)) for s in span]
    S = NambuStructure(wedge_vectors(fields), box=box,
                       name=name or f"left-invariant({','.join(labels)})")
    S.exact_series = exact
    return S


def left_translation_defect(L: LieAlgebraPresentation, fields: Sequence[VectorField],
                            g: Sequence[float], xi: Sequence[float], h: float = 1e-6) -> float:
    """Max deviation of D(l_g) X(xi) from X(l_g(xi)) in exponential coordinates."""
    from scipy.linalg import expm, logm

    G = expm(L.matrix_of(g))

    def lg(z):
        return L.coords_of(np.real(logm(G @ expm(L.matrix_of(z)))))

    xi = np.asarray(xi, dtype=float)
    base = lg(xi)
    D = np.zeros((L.dim, L.dim))
    for j in range(L.dim):
        e = np.zeros(L.dim)
        e[j] = h
        D[:, j] = (lg(xi + e) - lg(xi - e)) / (2 * h)
    worst = 0.0
    for X in fields:
        lhs = D @ X.evaluator()(xi)
        rhs = X.evaluator()(base)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# --- loops -------------------------------------------------------------------------

@dataclass
class DiscretizedLoop:
    """Samples gamma(k/N), k = 0..N-1, of a closed curve with uniform weights."""

    points: list

    def __post_init__(self):
        if len(self.points) < 4:
            raise ValueError("a discretized loop needs N >= 4 samples")
        self.points = [tuple(p) for p in self.points]

    @classmethod
    def from_function(cls, gamma: Callable[[float], Sequence], N: int) -> "DiscretizedLoop":
        return cls([tuple(float(v) for v in gamma(k / N)) for k in range(N)])

    @classmethod
    def constant(cls, x: Sequence, N: int = 8) -> "DiscretizedLoop":
        return cls([tuple(x)] * N)

    @property
    def N(self) -> int:
        return len(self.points)

    def point(self, k: int) -> tuple:
        return self.points[k % self.N]

    def is_constant(self, tol: float = 1e-12) -> bool:
        p0 = np.asarray(self.points[0], dtype=float)
        return all(float(np.max(np.abs(np.asarray(p, dtype=float) - p0))) <= tol
                   for p in self.points)


def loop_bracket(S: NambuStructure, fs: Sequence[Polynomial], loop: DiscretizedLoop):
    """(1/N) sum_k of the bracket integrand at gamma(t_k)."""
    for p in loop.points:
        if not S.box.contains(p):
            raise DomainError(f"loop sample {p} outside the domain box")
    br = bracket_field(S, fs)
    if all(is_rational_point(p) for p in loop.points):
        return sum((br(p) for p in loop.points), Fraction(0)) / loop.N
    f = br.compiled()
    return float(np.mean([f(np.asarray(p, dtype=float)) for p in loop.points]))


@dataclass
class LoopClass:
    cls: str
    witness: tuple | None = None
    value: object = None


def classify_loop(S: NambuStructure, loop: DiscretizedLoop, family: str = "quad",
                  seed: int = 0) -> LoopClass:
    """Singular iff the loop is constant at a singular point."""
    if loop.is_constant() and not classify_point(S, loop.points[0]).regular:
        return LoopClass("Singular")
    fam = test_family(S, family, seed)
    for fs in itertools.combinations(fam, S.r):
        v = loop_bracket(S, fs, loop)
        if abs(v) > 1e-12:
            return LoopClass("Regular", tuple(map(str, fs)), v)
    raise TheoremViolation("regular loop without a nonzero bracket in the test family")


# --- census ------------------------------------------------------------------------

def census() -> list[GalleryItem]:
    """The FI census with expected verdicts (``pass``/``fail``)."""
    x1 = Polynomial.var(3, 0)
    hsq = x1 * x1 + 1
    H = heisenberg()
    HR = heisenberg_times_r()
    items = [
        GalleryItem("canonical(3,3)", canonical_structure(3, 3), {"fi": "pass"}),
        GalleryItem("canonical(6,3)", canonical_structure(6, 3), {"fi": "pass"}),
        GalleryItem("canonical(2,2)", canonical_structure(2, 2), {"fi": "pass"}),
        GalleryItem("scaled(x1)", scaled_structure(3, 3, x1), {"fi": "pass"}),
        GalleryItem("scaled(x1^2+1)", scaled_structure(3, 3, hsq), {"fi": "pass"}),
        GalleryItem("l1(6,{1,2,3})", l1_truncated(6, [1, 2, 3]), {"fi": "pass"},
                    {"summability": l1_summability([1, 2, 3])}),
        GalleryItem("l1(6,{1..6})", l1_truncated(6, range(1, 7)), {"fi": "fail"},
                    {"summability": l1_summability(range(1, 7))}),
        GalleryItem("seqpoisson(2)", sequence_poisson(2), {"fi": "pass"}),
        GalleryItem("heisenberg", left_invariant_structure(H, ["X", "Y", "Z"]), {"fi": "pass"}),
        GalleryItem("heisenberg-x-r{X,Y,W}", left_invariant_structure(HR, ["X", "Y", "W"]),
                    {"fi": "fail"}),
    ]
    return items


def loop_examples() -> list[tuple[str, DiscretizedLoop, str]]:
    """Loops for the scaled x1 structure with their expected classes."""
    crossing = DiscretizedLoop.from_function(
        lambda t: (np.cos(2 * np.pi * t), np.sin(2 * np.pi * t), 0.0), 32)
    return [
        ("crossing", crossing, "Regular"),
        ("constant(1,0,0)", DiscretizedLoop.constant((1, 0, 0)), "Regular"),
        ("constant(0,0,0)", DiscretizedLoop.constant((0, 0, 0)), "Singular"),
    ]


# --- name registry --------------------------------------------------------------------

def _parse_index_set(v) -> list[int]:
    if isinstance(v, str):
        if ".." in v:
            a, b = v.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(s) for s in v.split(",") if s.strip()]
    return [int(s) for s in v]


def build(name: str, params: dict | None = None) -> GalleryItem:
    """Instantiate a gallery item by name with parameter overrides."""
    p = dict(params or {})

    def take(key, default):
        return p.pop(key, default)

    if name == "canonical":
        n, r = int(take("n", 3)), int(take("r", 3))
        item = GalleryItem(f"canonical({n},{r})", canonical_structure(n, r), {"fi": "pass"})
    elif name == "scaled":
        n, r = int(take("n", 3)), int(take("r", 3))
        h = Polynomial.parse(str(take("h", "x1")), n)
        item = GalleryItem(f"scaled({h})", scaled_structure(n, r, h), {"fi": "pass"})
    elif name == "l1":
        N = int(take("N", 6))
        I = _parse_index_set(take("I", list(range(1, N + 1))))
        S = l1_truncated(N, I)
        # constant 3-vectors are Nambu iff decomposable, which holds for |I| <= 4
        item = GalleryItem(S.name, S, {"fi": "pass" if len(set(I)) <= 4 else "fail"},
                           {"summability": l1_summability(I)})
    elif name == "seqpoisson":
        N = int(take("N", 2))
        item = GalleryItem(f"seqpoisson({N})", sequence_poisson(N), {"fi": "pass"})
    elif name == "heisenberg":
        times_r = bool(take("times_r", False))
        L = heisenberg_times_r() if times_r else heisenberg()
        span = take("span", ["X", "Y", "Z"])
        order = int(take("order", 4))
        S = left_invariant_structure(L, span, order)
        item = GalleryItem(S.name, S, {"fi": "pass" if subalgebra_check(L, span) else "fail"})
    elif name == "loop":
        S = scaled_structure(3, 3, Polynomial.var(3, 0))
        item = GalleryItem("loop", S, {}, {"loops": loop_examples()})
    else:
        raise KeyError(f"unknown gallery item {name!r}")
    if p:
        raise KeyError(f"unknown parameters for {name}: {sorted(p)}")
    return item


GALLERY_NAMES = ("canonical", "scaled", "l1", "seqpoisson", "heisenberg", "loop")
