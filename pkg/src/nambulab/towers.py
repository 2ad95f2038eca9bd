"""Finite projective and direct towers of Nambu structures with linear links.

A projective tower carries surjections ``delta_i : R^{n_{i+1}} -> R^{n_i}``
(``n_i x n_{i+1}`` matrices of full row rank); a direct tower carries injections
``eps_i : R^{n_i} -> R^{n_{i+1}}`` (``n_{i+1} x n_i``, full column rank).  Level
indices are 1-based in reports and 0-based in Python lists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fields import Box, DomainError, VectorField, differential
from .linalg import identity, in_rowspan, matmul, matvec, rank
from .multilinear import StructuralError
from .nambu import NambuStructure, PointClass, TheoremViolation, _ham, bracket_eval, classify_point
from .poly import Polynomial
from .reports import FAIL, PASS, CheckReport, make_report

PROJECTIVE, DIRECT = "projective", "direct"


def _frac_matrix(M) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in M]


class TowerSpec:
    """Levels ``S_1..S_L`` with consecutive linear links."""

    def __init__(self, kind: str, levels: Sequence[NambuStructure], links: Sequence[Sequence[Sequence]],
                 name: str = ""):
        if kind not in (PROJECTIVE, DIRECT):
            raise ValueError(f"tower kind must be {PROJECTIVE!r} or {DIRECT!r}")
        if not levels:
            raise ValueError("a tower needs at least one level")
        if len(links) != len(levels) - 1:
            raise ValueError(f"{len(levels)} levels need {len(levels) - 1} links, got {len(links)}")
        if len({S.r for S in levels}) != 1:
            raise StructuralError("all tower levels must share the order r")
        self.kind = kind
        self.levels = list(levels)
        self.links = [_frac_matrix(M) for M in links]
        self.name = name
        for i, M in enumerate(self.links):
            lo, hi = self.levels[i].n, self.levels[i + 1].n
            rows, cols = (lo, hi) if kind == PROJECTIVE else (hi, lo)
            if len(M) != rows or any(len(row) != cols for row in M):
                raise StructuralError(f"link {i + 1} must be {rows}x{cols}")
            if rank(M) != lo:
                what = "row" if kind == PROJECTIVE else "column"
                raise StructuralError(f"link {i + 1} is not of full {what} rank")

    @property
    def r(self) -> int:
        return self.levels[0].r

    @property
    def L(self) -> int:
        return len(self.levels)

    def composite(self, i: int, j: int) -> list[list[Fraction]]:
        """Composite link between 0-based levels ``i <= j``.

        Projective: ``delta_i^j = delta_i o ... o delta_{j-1}`` (``n_i x n_j``).
        Direct: ``eps_i^j = eps_{j-1} o ... o eps_i`` (``n_j x n_i``).
        """
        if not 0 <= i <= j < self.L:
            raise IndexError("need 0 <= i <= j < L")
        M = identity(self.levels[i].n)
        for k in range(i, j):
            M = matmul(M, self.links[k]) if self.kind == PROJECTIVE else matmul(self.links[k], M)
        return M

    def __repr__(self) -> str:
        dims = ",".join(str(S.n) for S in self.levels)
        return f"TowerSpec({self.kind}, {self.name or 'unnamed'}, dims=[{dims}])"


@dataclass(frozen=True)
class TowerPoint:
    """Compatible family of level points; ``None`` below the entry level (direct)."""
    points: tuple
    entry: int = 0

    def at(self, i: int) -> tuple:
        p = self.points[i]
        if p is None:
            raise ValueError(f"point has not entered level {i + 1}")
        return p


def projective_point(T: TowerSpec, top: Sequence) -> TowerPoint:
    """Family ``x_i = delta_i(x_{i+1})`` determined by the top-level point."""
    if T.kind != PROJECTIVE:
        raise ValueError("projective_point needs a projective tower")
    pts = [tuple(top)]
    for M in reversed(T.links):
        pts.append(tuple(matvec(M, pts[-1])))
    return TowerPoint(tuple(reversed(pts)), 0)


def direct_point(T: TowerSpec, x: Sequence, entry: int = 0) -> TowerPoint:
    """Family entering at 0-based level ``entry`` and pushed up by the injections."""
    if T.kind != DIRECT:
        raise ValueError("direct_point needs a direct tower")
    pts: list = [None] * entry + [tuple(x)]
    for M in T.links[entry:]:
        pts.append(tuple(matvec(M, pts[-1])))
    return TowerPoint(tuple(pts), entry)


def check_point_compat(T: TowerSpec, p: TowerPoint, tol: float = 1e-12) -> bool:
    for i in range(p.entry, T.L - 1):
        a, b = p.at(i), p.at(i + 1)
        if T.kind == PROJECTIVE:
            want, got = matvec(T.links[i], b), a
        else:
            want, got = matvec(T.links[i], a), b
        if any(abs(float(u) - float(v)) >= tol if not (isinstance(u, Fraction) and isinstance(v, Fraction))
               else u != v for u, v in zip(want, got)):
            return False
    return True


# --- compatibility ------------------------------------------------------------------

def _generator_combos(S: NambuStructure) -> list[tuple[Polynomial, ...]]:
    gens = S.generators()
    return [tuple(gens[j] for j in J) for J in itertools.combinations(range(len(gens)), S.r - 1)]


def _anchor(S: NambuStructure, gs: Sequence[Polynomial]) -> VectorField:
    return _ham(S.tensor, [differential(g) for g in gs])


def _label(gs) -> tuple:
    return tuple(str(g) for g in gs)


def check_projective_compat(T: TowerSpec) -> CheckReport:
    """Restriction inclusion on the B matrices and the anchor identity
    ``delta P_{i+1}(delta^T a)(x) = P_i(a)(delta x)`` as polynomial identities."""
    if T.kind != PROJECTIVE:
        raise ValueError("check_projective_compat needs a projective tower")
    residuals = []
    for i, D in enumerate(T.links):
        lo, hi = T.levels[i], T.levels[i + 1]
        for k, row in enumerate(matmul(lo.B, D)):
            ok = in_rowspan(row, hi.B)
            residuals.append(((i + 1, "restriction", k + 1), Fraction(0 if ok else 1)))
        for gs in _generator_combos(lo):
            pulled = [g.compose_linear(D) for g in gs]
            up = _anchor(hi, pulled).components
            lhs = [sum((D[a][b] * up[b] for b in range(hi.n)), Polynomial.zero(hi.n)) for a in range(lo.n)]
            rhs = [c.compose_linear(D) for c in _anchor(lo, gs).components]
            for a in range(lo.n):
                residuals.append(((i + 1, "anchor", _label(gs), a + 1), lhs[a] - rhs[a]))
    return make_report("projective-compat", "projective-tower-compatibility", residuals, exact=True,
                       details={"tower": T.name, "levels": T.L})


def check_direct_compat(T: TowerSpec) -> CheckReport:
    """Restriction inclusion and ``P_{i+1}(b)(eps y) = eps P_i(eps^T b)(y)``."""
    if T.kind != DIRECT:
        raise ValueError("check_direct_compat needs a direct tower")
    residuals = []
    for i, E in enumerate(T.links):
        lo, hi = T.levels[i], T.levels[i + 1]
        for k, row in enumerate(matmul(hi.B, E)):
            ok = in_rowspan(row, lo.B)
            residuals.append(((i + 1, "restriction", k + 1), Fraction(0 if ok else 1)))
        for gs in _generator_combos(hi):
            pulled = [g.compose_linear(E) for g in gs]
            lhs = [c.compose_linear(E) for c in _anchor(hi, gs).components]
            down = _anchor(lo, pulled).components
            rhs = [sum((E[a][b] * down[b] for b in range(lo.n)), Polynomial.zero(lo.n)) for a in range(hi.n)]
            for a in range(hi.n):
                residuals.append(((i + 1, "anchor", _label(gs), a + 1), lhs[a] - rhs[a]))
    return make_report("direct-compat", "direct-tower-compatibility", residuals, exact=True,
                       details={"tower": T.name, "levels": T.L})


def check_compat(T: TowerSpec) -> CheckReport:
    return check_projective_compat(T) if T.kind == PROJECTIVE else check_direct_compat(T)


# --- stratification -----------------------------------------------------------------

@dataclass(frozen=True)
class TowerClass:
    cls: str                 # "Regular" | "Singular" | "Mixed" (projective); stratum label (direct)
    ranks: tuple
    stratum: int | None = None
    violation: str | None = None


def _level_classes(T: TowerSpec, p: TowerPoint, rel: float) -> list[PointClass | None]:
    return [None if p.points[i] is None else classify_point(T.levels[i], p.points[i], rel)
            for i in range(T.L)]


def classify_tower_point_projective(T: TowerSpec, p: TowerPoint, rel: float = 1e-10,
                                    strict: bool = False) -> TowerClass:
    """Regular iff regular at every level, Singular iff singular at every level.

    Disagreement between levels is reported as ``Mixed`` with a violation note
    (raised as :class:`TheoremViolation` when ``strict``).
    """
    if T.kind != PROJECTIVE:
        raise ValueError("projective classification needs a projective tower")
    cl = _level_classes(T, p, rel)
    ranks = tuple(c.rank for c in cl)
    violation = None
    if any(a > b for a, b in zip(ranks, ranks[1:])):
        violation = f"anchor rank decreases up the tower: {ranks}"
    if all(c.regular for c in cl):
        cls = "Regular"
    elif not any(c.regular for c in cl):
        cls = "Singular"
    else:
        cls = "Mixed"
        violation = violation or f"levels disagree on regularity: {ranks}"
    if violation and strict:
        raise TheoremViolation(violation)
    return TowerClass(cls, ranks, None, violation)


def classify_tower_point_direct(T: TowerSpec, p: TowerPoint, rel: float = 1e-10,
                                strict: bool = False) -> TowerClass:
    """Stratum ``k``: the minimal level (1-based) from which every level is regular.

    A point singular at every entered level gets stratum ``None`` (class
    ``Singular``).  A regular level followed by a singular one is a violation.
    """
    if T.kind != DIRECT:
        raise ValueError("direct classification needs a direct tower")
    cl = _level_classes(T, p, rel)
    entered = range(p.entry, T.L)
    ranks = tuple(None if c is None else c.rank for c in cl)
    regular = [cl[i].regular for i in entered]
    violation = None
    if any(a and not b for a, b in zip(regular, regular[1:])):
        violation = f"regularity lost going up the tower: {ranks}"
    k = None
    for idx in range(len(regular) - 1, -1, -1):
        if not regular[idx]:
            break
        k = p.entry + idx + 1
    if violation and strict:
        raise TheoremViolation(violation)
    return TowerClass("Singular" if k is None else f"S{k}", ranks, k, violation)


def classify_tower_point(T: TowerSpec, p: TowerPoint, rel: float = 1e-10, strict: bool = False) -> TowerClass:
    if T.kind == PROJECTIVE:
        return classify_tower_point_projective(T, p, rel, strict)
    return classify_tower_point_direct(T, p, rel, strict)


def sample_tower_points(T: TowerSpec, count: int, seed: int = 0, zero_fraction: float = 0.25) -> list[TowerPoint]:
    """Seeded exact tower points.

    Projective: top-level points from the top box (a share with the first
    coordinate zeroed to hit singular loci).  Direct: a random entry level and a
    point in that level's box, with its coordinates beyond level 1's dimension
    zeroed for a share of the samples.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        zero = rng.random() < zero_fraction
        if T.kind == PROJECTIVE:
            x = list(T.levels[-1].box.sample(rng, 1)[0])
            if zero:
                x[0] = Fraction(0)
            p = projective_point(T, x)
            if all(T.levels[i].box.contains(p.points[i]) for i in range(T.L)):
                out.append(p)
                continue
            raise DomainError("projected point leaves a level box; shrink the top box")
        h = int(rng.integers(T.L))
        x = list(T.levels[h].box.sample(rng, 1)[0])
        if zero:
            for a in range(T.levels[0].n, len(x)):
                x[a] = Fraction(0)
        p = direct_point(T, x, h)
        if not all(T.levels[i].box.contains(p.points[i]) for i in range(h, T.L)):
            raise DomainError("embedded point leaves a level box; enlarge the upper boxes")
        out.append(p)
    return out


def check_stratification(T: TowerSpec, count: int = 200, seed: int = 0, rel: float = 1e-10) -> CheckReport:
    """No mixed projective classification / well-defined direct stratum on sampled points."""
    pts = sample_tower_points(T, count, seed)
    residuals, tally = [], {}
    for k, p in enumerate(pts):
        tc = classify_tower_point(T, p, rel)
        tally[tc.cls] = tally.get(tc.cls, 0) + 1
        residuals.append(((k, tuple(str(v) for v in p.at(T.L - 1))), Fraction(1 if tc.violation else 0)))
    return make_report("tower-stratification", f"{T.kind}-limit-regular-set", residuals, exact=True,
                       seed=seed, details={"tower": T.name, "classes": dict(sorted(tally.items()))})


# --- limit bracket ------------------------------------------------------------------

def limit_bracket_eval(T: TowerSpec, gs: Sequence[Polynomial], level: int, p: TowerPoint,
                       via: int | None = None):
    """Bracket of cylinder functions ``g_j o delta_level`` at ``p``.

    ``gs`` are polynomials on the 0-based ``level``; ``via`` (>= level) selects the
    level at which the pulled-back functions are actually bracketed.
    """
    if T.kind != PROJECTIVE:
        raise ValueError("limit brackets are defined on projective towers")
    via = level if via is None else via
    if len(gs) != T.r:
        raise ValueError(f"need {T.r} functions")
    D = T.composite(level, via)
    fs = [g.compose_linear(D) for g in gs]
    return bracket_eval(T.levels[via], fs[:-1], fs[-1], p.at(via))


def check_limit_bracket(T: TowerSpec, gs: Sequence[Polynomial], level: int, points: Sequence[TowerPoint],
                        exact: bool = True) -> CheckReport:
    """Pull-back-level independence of :func:`limit_bracket_eval`."""
    residuals = []
    for k, p in enumerate(points):
        base = limit_bracket_eval(T, gs, level, p)
        for j in range(level + 1, T.L):
            residuals.append(((k, j + 1), limit_bracket_eval(T, gs, level, p, via=j) - base))
    return make_report("limit-bracket", "projective-limit-bracket", residuals, exact=exact,
                       details={"tower": T.name, "level": level + 1, "points": len(points)})


# --- Darboux compatibility ----------------------------------------------------------

def check_darboux_compat(T: TowerSpec, chart, samples: int = 16, seed: int = 0,
                         tol: float = 1e-6) -> CheckReport:
    """Level-1 leaf coordinates pulled back to every level straighten that level's tensor.

    ``chart`` is a level-1 Darboux chart.  At a level-j point ``y`` with
    ``delta(y)`` in the chart domain, ``Lambda_j(dt_1 o delta, ..., dt_r o delta)``
    must equal 1.
    """
    if T.kind != PROJECTIVE:
        raise ValueError("Darboux compatibility is checked on projective towers")
    rng = np.random.default_rng(seed)
    lo = np.array([float(v) for v in chart.box.lo])
    hi = np.array([float(v) for v in chart.box.hi])
    r = T.r
    residuals = []
    for s in range(samples):
        z = rng.uniform(lo, hi)
        y1, Dinv = chart.inverse_with_jacobian(z)
        Dt = np.linalg.inv(Dinv)[:r]
        for j in range(1, T.L):
            D = np.array(T.composite(0, j), dtype=float)
            yj = np.linalg.pinv(D) @ y1 + (np.eye(D.shape[1]) - np.linalg.pinv(D) @ D) @ rng.uniform(-0.5, 0.5, D.shape[1])
            S = T.levels[j]
            if not S.box.contains(yj):
                continue
            G = Dt @ D  # r x n_j: rows are dt_i o delta
            t = S.tensor.at(yj)
            coef = sum(float(c) * float(np.linalg.det(G[:, list(I)])) for I, c in t.coeffs.items())
            residuals.append(((s, j + 1), coef - 1.0))
    return make_report("darboux-compat", "projective-limit-darboux", residuals, exact=False, tol=tol,
                       seed=seed, details={"tower": T.name, "samples": samples})


# --- example towers -----------------------------------------------------------------

def _drop_last(n: int) -> list[list[int]]:
    return [[1 if a == b else 0 for b in range(n + 1)] for a in range(n)]


def _include(n: int) -> list[list[int]]:
    return [[1 if a == b else 0 for b in range(n)] for a in range(n + 1)]


def _dbox(n: int) -> Box:
    return Box.cube(n, 2)


def canonical_projective(L: int = 3, scale: str | None = None, scale_level: int | None = None) -> TowerSpec:
    """Levels ``R^{3+i}`` (i = 1..L), drop-last links, ``d1^d2^d3`` at each level.

    ``scale`` multiplies every level's tensor (or only ``scale_level``, 1-based)
    by a polynomial given in level-local coordinates.
    """
    from .gallery import canonical_structure, scaled_structure
    levels = []
    for i in range(1, L + 1):
        n = 3 + i
        if scale is not None and (scale_level is None or scale_level == i):
            levels.append(scaled_structure(n, 3, scale, box=_dbox(n)))
        else:
            levels.append(canonical_structure(n, 3, box=_dbox(n)))
    name = "canonical-projective" if scale is None else f"projective[{scale}" + (
        f"@{scale_level}]" if scale_level else "]")
    return TowerSpec(PROJECTIVE, levels, [_drop_last(3 + i) for i in range(1, L)], name)


def sumsq_direct(L: int = 3, extra: str | None = None, extra_level: int = 2) -> TowerSpec:
    """Levels ``R^{3+i}`` with coefficient ``sum_{j=4}^{3+i} (x^j)^2`` and inclusions.

    ``extra`` adds a term to the coefficient at ``extra_level`` (negative control).
    """
    from .gallery import scaled_structure
    levels = []
    for i in range(1, L + 1):
        n = 3 + i
        h = " + ".join(f"x{j}^2" for j in range(4, n + 1))
        if extra is not None and i == extra_level:
            h = f"{h} + {extra}"
        levels.append(scaled_structure(n, 3, h, box=_dbox(n)))
    name = "sumsq-direct" if extra is None else f"sumsq-direct[+{extra}@{extra_level}]"
    return TowerSpec(DIRECT, levels, [_include(3 + i) for i in range(1, L)], name)


def canonical_direct(L: int = 3) -> TowerSpec:
    from .gallery import canonical_structure
    levels = [canonical_structure(3 + i, 3, box=_dbox(3 + i)) for i in range(1, L + 1)]
    return TowerSpec(DIRECT, levels, [_include(3 + i) for i in range(1, L)], "canonical-direct")


def example_towers() -> list[tuple[TowerSpec, str]]:
    """Built-in towers with the expected compatibility verdict."""
    return [
        (canonical_projective(3), PASS),
        (canonical_projective(3, "x1"), PASS),
        (canonical_projective(3, "x4", scale_level=2), FAIL),
        (canonical_direct(3), PASS),
        (sumsq_direct(3), PASS),
        (sumsq_direct(3, "1"), FAIL),
    ]


TOWER_GALLERY = {
    "canonical-projective": canonical_projective,
    "canonical-direct": canonical_direct,
    "sumsq-direct": sumsq_direct,
}


def build_tower(name: str, params: dict | None = None) -> TowerSpec:
    if name not in TOWER_GALLERY:
        raise KeyError(f"unknown tower {name!r}; known: {sorted(TOWER_GALLERY)}")
    try:
        return TOWER_GALLERY[name](**dict(params or {}))
    except TypeError as exc:
        raise KeyError(f"bad parameters for tower {name}: {exc}") from None
