"""Point-wise exterior algebra over R^n.

Multi-indices are stored 0-based as strictly increasing tuples. Text output and
the spec-file format use 1-based labels.  Basis k-vectors pair with their dual
k-covectors to exactly 1 (determinant convention); the alternator carries the
1/k! factor.

The term-level helpers (``sort_sign``, ``wedge_terms``, ``interior_terms``) are
generic over the coefficient ring, so the field layer reuses them with
polynomial coefficients.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from numbers import Rational
from typing import Iterable, Mapping, Sequence

VECTOR = "vector"
COVECTOR = "covector"


class StructuralError(ValueError):
    """Dimension, degree or variance mismatch."""


def sort_sign(idx: Sequence[int]) -> tuple[tuple[int, ...] | None, int]:
    """Sort an index list, returning (sorted tuple, permutation sign).

    A repeated index gives ``(None, 0)``.
    """
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return None, 0
    sign = 1
    # insertion sort counts transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return tuple(idx), sign


def perm_sign(perm: Sequence[int]) -> int:
    return sort_sign(perm)[1]


def _is_zero(c) -> bool:
    z = getattr(c, "is_zero", None)
    if z is not None:
        return z() if callable(z) else bool(z)
    return c == 0


def add_term(acc: dict, key, coeff) -> None:
    """Accumulate ``coeff`` at ``key``, dropping exact zeros."""
    if key in acc:
        v = acc[key] + coeff
        if _is_zero(v):
            del acc[key]
        else:
            acc[key] = v
    elif not _is_zero(coeff):
        acc[key] = coeff


def wedge_terms(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for I, x in a.items():
        for J, y in b.items():
            K, s = sort_sign(I + J)
            if s == 0:
                continue
            p = x * y
            add_term(out, K, p if s > 0 else -p)
    return out


def interior_terms(form: Mapping, mv: Mapping) -> dict:
    """Contract form terms into the first slots of multivector terms.

    ``<beta, i_form mv> = <form ^ beta, mv>`` for every beta.
    """
    out: dict = {}
    for I, x in form.items():
        sI = set(I)
        for J, y in mv.items():
            if not sI.issubset(J):
                continue
            K = tuple(j for j in J if j not in sI)
            _, s = sort_sign(I + K)
            p = x * y
            add_term(out, K, p if s > 0 else -p)
    return out


def det_generic(rows: Sequence[Sequence]):
    """Permutation-expansion determinant over any commutative ring."""
    k = len(rows)
    if k == 0:
        return 1
    total = None
    for perm in itertools.permutations(range(k)):
        term = None
        for i, j in enumerate(perm):
            e = rows[i][j]
            if _is_zero(e):
                term = None
                break
            term = e if term is None else term * e
        if term is None:
            continue
        if perm_sign(perm) < 0:
            term = -term
        total = term if total is None else total + term
    return 0 if total is None else total


def _check_scalar(c):
    if isinstance(c, bool):
        raise TypeError("boolean coefficient")
    if isinstance(c, Rational):
        return Fraction(c)
    if isinstance(c, float):
        return c
    try:
        return float(c)
    except TypeError as exc:
        raise TypeError(f"unsupported coefficient {c!r}") from exc


class AltTensor:
    """Sparse alternating tensor with canonical, sign-normalized keys.

    Coefficients are either all exact (``Fraction``) or all ``float``; mixing
    promotes the whole tensor to float.
    """

    __slots__ = ("n", "degree", "variance", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: Mapping | None = None,
                 variance: str = VECTOR):
        if variance not in (VECTOR, COVECTOR):
            raise StructuralError(f"unknown variance {variance!r}")
        if degree < 0:
            raise StructuralError("negative degree")
        self.n = n
        self.degree = degree
        self.variance = variance
        acc: dict = {}
        for raw, c in (coeffs or {}).items():
            raw = tuple(raw)
            if len(raw) != degree:
                raise StructuralError(f"index {raw} has length != degree {degree}")
            if any(i < 0 or i >= n for i in raw):
                raise StructuralError(f"index {raw} out of range for n={n}")
            key, s = sort_sign(raw)
            if s == 0:
                continue
            c = _check_scalar(c)
            add_term(acc, key, c if s > 0 else -c)
        if any(isinstance(c, float) for c in acc.values()):
            acc = {k: float(v) for k, v in acc.items()}
        self.coeffs = acc

    # construction helpers
    @classmethod
    def basis(cls, n: int, idx: Iterable[int], variance: str = VECTOR) -> "AltTensor":
        idx = tuple(idx)
        return cls(n, len(idx), {idx: 1}, variance)

    @classmethod
    def vector(cls, values: Sequence, variance: str = VECTOR) -> "AltTensor":
        return cls(len(values), 1, {(i,): v for i, v in enumerate(values)}, variance)

    @classmethod
    def scalar(cls, n: int, value, variance: str = VECTOR) -> "AltTensor":
        return cls(n, 0, {(): value}, variance)

    @property
    def is_exact(self) -> bool:
        return not any(isinstance(c, float) for c in self.coeffs.values())

    def is_zero(self) -> bool:
        return not self.coeffs

    def value(self):
        """Scalar value of a degree-0 tensor."""
        if self.degree != 0:
            raise StructuralError("value() needs a degree-0 tensor")
        return self.coeffs.get((), Fraction(0))

    def dense(self) -> list:
        """Component list of a degree-1 tensor."""
        if self.degree != 1:
            raise StructuralError("dense() needs a degree-1 tensor")
        zero = 0.0 if not self.is_exact else Fraction(0)
        return [self.coeffs.get((i,), zero) for i in range(self.n)]

    def to_raw(self) -> dict:
        """Expand to an ordered-tuple tensor (sum over index permutations)."""
        raw: dict = {}
        for I, c in self.coeffs.items():
            for perm in itertools.permutations(range(self.degree)):
                key = tuple(I[p] for p in perm)
                raw[key] = c if perm_sign(perm) > 0 else -c
        return raw

    def _like(self, other: "AltTensor") -> None:
        if not isinstance(other, AltTensor):
            raise StructuralError("expected AltTensor")
        if other.n != self.n or other.variance != self.variance:
            raise StructuralError("dimension or variance mismatch")

    def __add__(self, other: "AltTensor") -> "AltTensor":
        self._like(other)
        if other.degree != self.degree:
            raise StructuralError("degree mismatch")
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            add_term(acc, k, v)
        return AltTensor(self.n, self.degree, acc, self.variance)

    def __neg__(self) -> "AltTensor":
        return AltTensor(self.n, self.degree, {k: -v for k, v in self.coeffs.items()},
                         self.variance)

    def __sub__(self, other: "AltTensor") -> "AltTensor":
        return self + (-other)

    def scale(self, c) -> "AltTensor":
        return AltTensor(self.n, self.degree, {k: v * c for k, v in self.coeffs.items()},
                         self.variance)

    def __mul__(self, c) -> "AltTensor":
        return self.scale(c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, AltTensor) and self.n == other.n
                and self.degree == other.degree and self.variance == other.variance
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.n, self.degree, self.variance,
                     frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        sym = "e" if self.variance == VECTOR else "dx"
        if not self.coeffs:
            return f"AltTensor(n={self.n}, degree={self.degree}, 0)"
        parts = []
        for k in sorted(self.coeffs):
            name = "^".join(f"{sym}{i + 1}" for i in k) or "1"
            parts.append(f"{self.coeffs[k]}*{name}")
        return f"AltTensor(n={self.n}, {' + '.join(parts)})"


def wedge(a: AltTensor, b: AltTensor) -> AltTensor:
    a._like(b)
    if a.degree + b.degree > a.n:
        return AltTensor(a.n, a.degree + b.degree, {}, a.variance)
    return AltTensor(a.n, a.degree + b.degree, wedge_terms(a.coeffs, b.coeffs), a.variance)


def wedge_all(ts: Sequence[AltTensor], n: int | None = None,
              variance: str = VECTOR) -> AltTensor:
    if not ts:
        if n is None:
            raise StructuralError("empty wedge needs n")
        return AltTensor.scalar(n, 1, variance)
    out = ts[0]
    for t in ts[1:]:
        out = wedge(out, t)
    return out


def alternate(raw: Mapping[tuple, object], n: int, k: int,
              variance: str = VECTOR) -> AltTensor:
    """Alternator (1/k!) sum_sigma sign(sigma) sigma(t) in canonical form."""
    acc: dict = {}
    kf = factorial(k)
    for tup, c in raw.items():
        tup = tuple(tup)
        if len(tup) != k:
            raise StructuralError(f"tuple {tup} has length != {k}")
        if any(i < 0 or i >= n for i in tup):
            raise StructuralError(f"tuple {tup} out of range for n={n}")
        key, s = sort_sign(tup)
        if s == 0:
            continue
        c = _check_scalar(c)
        c = c / kf if isinstance(c, float) else Fraction(c, kf)
        add_term(acc, key, c if s > 0 else -c)
    return AltTensor(n, k, acc, variance)


def interior(form: AltTensor, mv: AltTensor) -> AltTensor:
    """Contract a covector-type ``form`` into the first slots of ``mv``."""
    if form.variance != COVECTOR or mv.variance != VECTOR:
        raise StructuralError("interior expects (covector, vector) arguments")
    if form.n != mv.n:
        raise StructuralError("dimension mismatch")
    if form.degree > mv.degree:
        raise StructuralError("form degree exceeds multivector degree")
    return AltTensor(mv.n, mv.degree - form.degree,
                     interior_terms(form.coeffs, mv.coeffs), VECTOR)


def pairing(form: AltTensor, mv: AltTensor):
    """Full contraction <form, mv> for equal degrees."""
    if form.degree != mv.degree:
        raise StructuralError("pairing needs equal degrees")
    return interior(form, mv).value()


def _as_components(arg, n: int) -> list:
    if isinstance(arg, AltTensor):
        if arg.degree != 1:
            raise StructuralError("arguments must be degree-1")
        return arg.dense()
    comps = list(arg)
    if len(comps) != n:
        raise StructuralError("argument length != n")
    return comps


def eval_alt(t: AltTensor, args: Sequence) -> object:
    """Evaluate ``t`` on degree-1 arguments of the opposite variance.

    Each argument is an ``AltTensor`` or a length-n sequence of components.
    """
    if len(args) != t.degree:
        raise StructuralError(f"arity {len(args)} != degree {t.degree}")
    for a in args:
        if isinstance(a, AltTensor) and a.variance == t.variance:
            raise StructuralError("argument variance must be opposite")
    comps = [_as_components(a, t.n) for a in args]
    total = Fraction(0) if t.is_exact else 0.0
    for I, c in t.coeffs.items():
        minor = [[row[i] for i in I] for row in comps]
        total = total + c * det_generic(minor)
    return total
