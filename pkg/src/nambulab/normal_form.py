"""Characteristic frames, commuting frames and Darboux charts at regular points.

Frame construction.  Pick admissible linear functions ``g_1..g_r`` maximizing
``|{g_1, ..., g_r}(x)|`` and rescale the last one so that the full bracket
``lam = {f_1, ..., f_r}`` equals 1 at the center.  The signed Hamiltonian
fields ``X_i = (-1)^(r-i) X_{f_1..f^_i..f_r}`` satisfy ``df_i(X_j) = delta_ij lam``
identically.  Dividing by ``lam`` gives commuting fields ``Y_i = X_i / lam``.
The characteristic frame ``(Y_1, ..., Y_{r-1}, X_r)`` wedges to the tensor.

Chart construction.  ``phi^{-1}(t, s) = Fl_{X_r}^{t_r} o Fl_{Y_{r-1}}^{t_{r-1}} o ... o
Fl_{Y_1}^{t_1}(sigma(s))`` with ``sigma`` an affine coordinate slice through the
center.  The ``Y_i`` commute, and ``[X_r, Y_i]`` is a multiple of ``X_r``, so
pushing ``Y_i`` along ``X_r`` only adds multiples of ``X_r`` and the image of
``d/dt_1 ^ ... ^ d/dt_r`` is the tensor itself.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .fields import (Box, FlowError, RationalVectorField, differential,
                     flow_with_jacobian, rational_bracket_numerator, vector_to_multivector,
                     wedge_many)
from .linalg import svd_rank
from .multilinear import det_generic
from .nambu import (NambuStructure, _ham, classify_point, plucker_check)
from .poly import Polynomial, as_fraction_point
from .reports import FAIL, PASS, CheckReport


class FrameError(ValueError):
    """Frame construction precondition failed (singular point, degenerate choice)."""


class ChartError(RuntimeError):
    """Chart construction failed; ``diagnostics`` records the attempts."""

    def __init__(self, message: str, diagnostics: list):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class CharacteristicFrame:
    center: tuple
    fs: list                  # admissible linear functions f_1..f_r
    lam: Polynomial           # {f_1, ..., f_r}
    hamiltonians: list        # signed X_i
    frame: list               # RationalVectorFields (X_1/lam, ..., X_{r-1}/lam, X_r)
    choice: tuple             # indices of the chosen generators

    @property
    def r(self) -> int:
        return len(self.fs)


def characteristic_frame(S: NambuStructure, x: Sequence) -> CharacteristicFrame:
    """Functions and frame at a regular point (see module docstring)."""
    if not S.is_exact:
        raise FrameError("frame construction needs exact data")
    xq = as_fraction_point(x)
    pc = classify_point(S, xq)
    if not pc.regular:
        raise FrameError(f"point ({', '.join(map(str, xq))}) is singular")
    if S.r >= 3 and not plucker_check(S.tensor_at(xq))[0]:
        raise FrameError(f"tensor is not decomposable at ({', '.join(map(str, xq))})")
    gens = S.generators()
    t = S.tensor_at(xq)
    best, choice = Fraction(0), None
    for J in itertools.combinations(range(len(gens)), S.r):
        cols = [[g.diff(i).constant_value() for i in range(S.n)] for g in (gens[j] for j in J)]
        v = sum((c * det_generic([[col[i] for i in I] for col in cols])
                 for I, c in t.coeffs.items()), Fraction(0))
        if abs(v) > abs(best):
            best, choice = v, J
    if choice is None:
        raise FrameError("no admissible r-subset has a nonzero bracket")
    fs = [gens[j] for j in choice]
    fs[-1] = fs[-1] / best
    r = S.r
    dfs = [differential(f) for f in fs]
    lam = S.tensor.eval_forms(dfs)
    hams = []
    for i in range(r):
        X = _ham(S.tensor, dfs[:i] + dfs[i + 1:])
        hams.append(X if (r - 1 - i) % 2 == 0 else -X)
    frame = [RationalVectorField(X, lam) for X in hams[:-1]] + [RationalVectorField(hams[-1])]
    return CharacteristicFrame(tuple(xq), fs, lam, hams, frame, choice)


def frame_identities(S: NambuStructure, cf: CharacteristicFrame) -> dict:
    """Exact residuals of the frame relations.

    ``orthogonality``: ``df_j(X_i)`` for ``j != i``;
    ``determinant``: ``lam`` against ``det(df_i(Z_j))`` for the characteristic frame ``Z``;
    ``wedge``: the tensor against ``Z_1 ^ ... ^ Z_r``.
    All are polynomial numerators, zero iff the identity holds exactly.
    """
    ortho = {}
    for i, X in enumerate(cf.hamiltonians):
        for j, f in enumerate(cf.fs):
            if i != j:
                ortho[(j + 1, i + 1)] = X.apply(f)
    entries = [[Z.num.apply(f) for Z in cf.frame] for f in cf.fs]
    dens = [Z.den for Z in cf.frame]
    den_prod = Polynomial.const(S.n, 1)
    for d in dens:
        den_prod = den_prod * d
    det_res = det_generic(entries) - cf.lam * den_prod
    wedge = wedge_many([vector_to_multivector(Z.num) for Z in cf.frame])
    wedge_res = wedge - S.tensor.scale(den_prod)
    return {"orthogonality": ortho, "determinant": det_res, "wedge": wedge_res}


def commuting_frame(S: NambuStructure, x: Sequence,
                    skip_rescaling: bool = False) -> tuple[list[RationalVectorField], dict]:
    """Fields ``Y_i = X_i / lam`` with vanishing brackets and ``df_i(Y_j) = delta_ij``.

    ``skip_rescaling`` returns the plain Hamiltonian fields (a negative control).
    Returns the fields and the exact bracket numerators keyed by ``(i, j)``.
    """
    cf = characteristic_frame(S, x)
    one = Polynomial.const(S.n, 1)
    if cf.lam(cf.center) == 0:
        raise AssertionError("full bracket vanishes at a regular point")
    den = one if skip_rescaling else cf.lam
    Ys = [RationalVectorField(X, den) for X in cf.hamiltonians]
    brackets = {(i + 1, j + 1): rational_bracket_numerator(Ys[i], Ys[j])
                for i, j in itertools.combinations(range(len(Ys)), 2)}
    return Ys, brackets


def delta_matrix(fs: Sequence[Polynomial], fields: Sequence[RationalVectorField],
                 x: Sequence) -> list[list[Fraction]]:
    """``df_i(Y_j)`` evaluated exactly at ``x``."""
    xq = as_fraction_point(x)
    return [[Y.num.apply(f)(xq) / Y.den(xq) for Y in fields] for f in fs]


# --- charts ------------------------------------------------------------------------

@dataclass
class ChartMap:
    """Local chart with numeric inverse and Jacobians.

    ``inverse(z)`` maps chart coordinates ``z = (t_1..t_r, s)`` to points;
    ``forward(y)`` inverts it by damped Newton.
    """

    center: tuple
    r: int
    inverse_with_jacobian: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    box: Box
    z_center: np.ndarray
    condition: float = 1.0
    transversal: tuple = ()
    diagnostics: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.center)

    def inverse(self, z: Sequence) -> np.ndarray:
        return self.inverse_with_jacobian(np.asarray(z, dtype=float))[0]

    def forward(self, y: Sequence, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        J0 = self.inverse_with_jacobian(self.z_center)[1]
        z = self.z_center + np.linalg.solve(J0, y - np.asarray(self.center, dtype=float))
        for _ in range(max_iter):
            p, J = self.inverse_with_jacobian(z)
            res = p - y
            err = float(np.max(np.abs(res)))
            if err < tol:
                return z
            step = np.linalg.solve(J, res)
            lam = 1.0
            while True:
                z_try = z - lam * step
                try:
                    err_try = float(np.max(np.abs(self.inverse(z_try) - y)))
                except FlowError:
                    err_try = np.inf
                if err_try < err or lam < 1e-4:
                    break
                lam /= 2
            z = z_try
        p = self.inverse(z)
        if float(np.max(np.abs(p - y))) < 1e3 * tol:
            return z
        raise ChartError("Newton inversion did not converge", [{"point": y.tolist()}])

    def forward_jacobian(self, y: Sequence) -> np.ndarray:
        z = self.forward(y)
        return np.linalg.inv(self.inverse_with_jacobian(z)[1])

    def tabulate(self, per_axis: int = 3) -> list[dict]:
        """Inverse and forward values on a grid over the chart box (for export)."""
        axes = [np.linspace(float(a), float(b), per_axis) for a, b in zip(self.box.lo, self.box.hi)]
        out = []
        for z in itertools.product(*axes):
            y = self.inverse(z)
            out.append({"z": [float(v) for v in z], "y": [float(v) for v in y],
                        "forward": [float(v) for v in self.forward(y)]})
        return out


def identity_chart(n: int, r: int, center: Sequence | None = None,
                   half_width: float = 1.0) -> ChartMap:
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return ChartMap(tuple(float(v) for v in c), r,
                    lambda z: (np.asarray(z, dtype=float), np.eye(n)),
                    Box([v - half_width for v in c], [v + half_width for v in c]), c.copy())


def _transversal_axes(F: np.ndarray, r: int) -> list[int]:
    # pivoted QR on the frame's rows picks the r best coordinates for the
    # frame; the remaining axes complete it
    _, _, piv = scipy.linalg.qr(F.T, pivoting=True)
    frame_rows = set(int(p) for p in piv[:r])
    return [k for k in range(F.shape[0]) if k not in frame_rows]


def darboux_chart(S: NambuStructure, x: Sequence, probes: int = 16, seed: int = 0,
                  round_trip_tol: float = 1e-7, min_edge: float = 1e-4,
                  flow_tol: float = 1e-11) -> ChartMap:
    """Chart with leaf coordinates ``t_1..t_r`` straightening the tensor."""
    cf = characteristic_frame(S, x)
    n, r = S.n, S.r
    Y = cf.frame
    xc = np.array([float(v) for v in cf.center])
    F = np.column_stack([Z.evaluator()(xc) for Z in Y])
    if svd_rank(F) != r:
        raise ChartError("frame is degenerate at the center", [])
    axes = _transversal_axes(F, r)
    E = np.zeros((n, n - r))
    for j, k in enumerate(axes):
        E[k, j] = 1.0
    J_center = np.column_stack([F, E])
    cond = float(np.linalg.cond(J_center))

    domain_half = np.array([float(e) for e in S.box.edges]) / 2
    half = np.concatenate([np.full(r, float(np.min(domain_half))) / 2,
                           domain_half[axes] / 2]) if n > r else np.full(r, float(np.min(domain_half))) / 2
    rng = np.random.default_rng(seed)
    diagnostics = []
    while True:
        edge = float(2 * np.max(half))
        h = edge / 256

        def inv(z, h=h):
            t, s = z[:r], z[r:]
            p = xc + E @ s
            D = np.zeros((n, n))
            D[:, r:] = E
            for i in range(r):
                if t[i] == 0.0:
                    D[:, i] = Y[i].evaluator()(p)
                    continue
                p, Jf = flow_with_jacobian(Y[i], p, float(t[i]), h=h, tol=flow_tol, box=S.box)
                D = Jf @ D
                D[:, i] = Y[i].evaluator()(p)
            return p, D

        box = Box(list(-half), list(half))
        chart = ChartMap(tuple(xc), r, inv, box, np.zeros(n), cond, tuple(axes))
        worst, failure = 0.0, None
        # corners first: the box must be usable up to its boundary, not just at
        # the random probes
        corners = [np.array(c) for c in itertools.product(*zip(-half, half))] if n <= 8 else []
        zs = [np.zeros(n)] + corners + [rng.uniform(-half, half) for _ in range(probes - 1)]
        try:
            for z in zs:
                y = chart.inverse(z)
                z_back = chart.forward(y)
                worst = max(worst, float(np.max(np.abs(z_back - z))))
        except (FlowError, ChartError, np.linalg.LinAlgError) as exc:
            failure = str(exc)
        diagnostics.append({"edge": edge, "round_trip": worst, "failure": failure})
        if failure is None and worst < round_trip_tol:
            chart.diagnostics = diagnostics
            return chart
        half = half / 2
        if 2 * np.max(half) < min_edge:
            raise ChartError("chart box shrank below the minimum edge", diagnostics)


def pushforward_coefficients(S: NambuStructure, chart: ChartMap, z: Sequence) -> dict:
    """Coefficients of phi_* tensor at chart point ``z``."""
    y, Dinv = chart.inverse_with_jacobian(np.asarray(z, dtype=float))
    D = np.linalg.inv(Dinv)
    t = S.tensor.at(y)
    out = {}
    for J in itertools.combinations(range(S.n), S.r):
        v = 0.0
        for I, c in t.coeffs.items():
            v += float(c) * float(np.linalg.det(D[np.ix_(J, I)]))
        out[J] = v
    return out


def verify_chart(S: NambuStructure, chart: ChartMap, samples: int = 32, seed: int = 0,
                 tol: float = 1e-6) -> CheckReport:
    """Max deviation of phi_* tensor from d/dt_1 ^ ... ^ d/dt_r at sampled chart points."""
    rng = np.random.default_rng(seed)
    lo = np.array([float(v) for v in chart.box.lo])
    hi = np.array([float(v) for v in chart.box.hi])
    target = tuple(range(S.r))
    worst, where, witnesses = 0.0, None, []
    for _ in range(samples):
        z = rng.uniform(lo, hi)
        coeffs = pushforward_coefficients(S, chart, z)
        dev = max(abs(v - (1.0 if J == target else 0.0)) for J, v in coeffs.items())
        if dev > worst:
            worst, where = dev, [float(v) for v in z]
        if dev >= tol and len(witnesses) < 3:
            witnesses.append({"point": [float(v) for v in z], "deviation": dev})
    return CheckReport("verify-chart", "darboux-normal-form", FAIL if witnesses else PASS,
                       worst, where, witnesses, seed,
                       {"samples": samples, "condition": chart.condition,
                        "box_edge": float(max(chart.box.edges))})


def coordinate_identity_residual(chart: ChartMap, frame: Sequence[RationalVectorField]) -> float:
    """max |dt_i(Z_j) - delta_ij| at the center."""
    Dinv = chart.inverse_with_jacobian(chart.z_center)[1]
    D = np.linalg.inv(Dinv)
    xc = np.asarray(chart.center, dtype=float)
    M = np.column_stack([D[: chart.r] @ Z.evaluator()(xc) for Z in frame])
    return float(np.max(np.abs(M - np.eye(chart.r))))
