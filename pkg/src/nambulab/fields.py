"""Scalar, vector, form and multivector fields on boxes in R^n.

Exact fields carry ``Polynomial`` coefficients; scalar fields may also be
``NumericFunction`` jets.  Identity checks on exact data are zero tests of
polynomials.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .multilinear import (COVECTOR, VECTOR, AltTensor, StructuralError, add_term,
                          det_generic, interior_terms, sort_sign, wedge_terms)
from .poly import (NumericFunction, Polynomial, UnsupportedModeError,
                   compile_many, is_rational_point)

ScalarField = Union[Polynomial, NumericFunction]


class DomainError(ValueError):
    """A point lies outside the declared domain box."""


class FlowError(RuntimeError):
    """Integration failed; ``state`` holds the last valid point."""

    def __init__(self, message: str, state):
        super().__init__(message)
        self.state = state


# --- boxes ------------------------------------------------------------------

class Box:
    """Axis-aligned box ``prod [lo_i, hi_i]``."""

    def __init__(self, lo: Sequence, hi: Sequence):
        if len(lo) != len(hi):
            raise ValueError("box bounds differ in length")
        self.lo = tuple(Fraction(v) if isinstance(v, Rational) else float(v) for v in lo)
        self.hi = tuple(Fraction(v) if isinstance(v, Rational) else float(v) for v in hi)
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi in every coordinate")

    @classmethod
    def cube(cls, n: int, half: Rational = 2, center: Sequence | None = None) -> "Box":
        c = center if center is not None else [0] * n
        return cls([ci - half for ci in c], [ci + half for ci in c])

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def edges(self) -> tuple:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def center(self) -> tuple:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def contains(self, x: Sequence, slack: float = 0.0) -> bool:
        return len(x) == self.n and all(a - slack <= v <= b + slack
                                        for v, a, b in zip(x, self.lo, self.hi))

    def require(self, x: Sequence) -> None:
        if not self.contains(x):
            raise DomainError(f"point ({', '.join(map(str, x))}) outside box {self}")

    def sample(self, rng: np.random.Generator, count: int, exact: bool = True,
               denominator: int = 1024) -> list[tuple]:
        """Seeded points strictly inside the box (rational if ``exact``)."""
        pts = []
        for _ in range(count):
            u = rng.integers(1, denominator, size=self.n)
            if exact:
                pts.append(tuple(Fraction(a) + (Fraction(b) - Fraction(a)) * Fraction(int(k), denominator)
                                 for a, b, k in zip(self.lo, self.hi, u)))
            else:
                pts.append(tuple(float(a) + (float(b) - float(a)) * k / denominator
                                 for a, b, k in zip(self.lo, self.hi, u)))
        return pts

    def to_json(self) -> list:
        return [[_num_str(a), _num_str(b)] for a, b in zip(self.lo, self.hi)]

    def __eq__(self, other) -> bool:
        return isinstance(other, Box) and self.lo == other.lo and self.hi == other.hi

    def __repr__(self) -> str:
        return "Box(" + ", ".join(f"[{_num_str(a)},{_num_str(b)}]"
                                  for a, b in zip(self.lo, self.hi)) + ")"


def _num_str(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


# --- scalar evaluation --------------------------------------------------------

def eval_scalar(f: ScalarField, x: Sequence, box: Box | None = None):
    """2-jet (value, gradient, Hessian) of ``f`` at ``x``."""
    if box is not None:
        box.require(x)
    if len(x) != f.n:
        raise StructuralError(f"point has {len(x)} coordinates, field has n={f.n}")
    return f.jet(x)


def _require_exact(*objs) -> None:
    for o in objs:
        if not getattr(o, "is_exact", False):
            raise UnsupportedModeError("operation requires exact polynomial data")


# --- vector fields ----------------------------------------------------------

class VectorField:
    """Vector field with one scalar component per coordinate."""

    __slots__ = ("n", "components", "_f", "_jac")

    def __init__(self, components: Sequence[ScalarField]):
        comps = tuple(components)
        if not comps:
            raise StructuralError("empty vector field")
        n = comps[0].n
        if len(comps) != n or any(c.n != n for c in comps):
            raise StructuralError("component count must equal n")
        self.n = n
        self.components = comps
        self._f = None
        self._jac = None

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls([Polynomial.zero(n)] * n)

    @classmethod
    def coordinate(cls, n: int, i: int, coeff: Polynomial | Rational = 1) -> "VectorField":
        """``coeff * d/dx_i``."""
        if not isinstance(coeff, Polynomial):
            coeff = Polynomial.const(n, coeff)
        comps = [Polynomial.zero(n)] * n
        comps[i] = coeff
        return cls(comps)

    @property
    def is_exact(self) -> bool:
        return all(c.is_exact for c in self.components)

    def is_zero(self) -> bool:
        _require_exact(self)
        return all(c.is_zero() for c in self.components)

    def apply(self, f: Polynomial) -> Polynomial:
        """Directional derivative X(f)."""
        _require_exact(self, f)
        out = Polynomial.zero(self.n)
        for i, c in enumerate(self.components):
            if not c.is_zero():
                d = f.diff(i)
                if not d.is_zero():
                    out = out + c * d
        return out

    def __call__(self, x: Sequence):
        if is_rational_point(x) and self.is_exact:
            return tuple(c(x) for c in self.components)
        return self.evaluator()(x)

    def evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        """Float evaluator x -> X(x)."""
        if self._f is None:
            if self.is_exact:
                self._f = compile_many(self.components)
            else:
                comps = self.components
                self._f = lambda x: np.array([c.jet(x)[0] for c in comps])
        return self._f

    def jacobian_evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        """Float evaluator x -> DX(x) with entries d X^i / d x^j."""
        if self._jac is None:
            if self.is_exact:
                flat = [c.diff(j) for c in self.components for j in range(self.n)]
                g = compile_many(flat)
                n = self.n
                self._jac = lambda x: g(x).reshape(n, n)
            else:
                comps = self.components
                self._jac = lambda x: np.array([c.jet(x)[1] for c in comps])
        return self._jac

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "VectorField":
        return VectorField([-a for a in self.components])

    def scale(self, c) -> "VectorField":
        """Multiply by a polynomial or a rational constant."""
        return VectorField([a * c for a in self.components])

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorField) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def at(self, x: Sequence) -> AltTensor:
        return AltTensor.vector(list(self(x)))

    def __repr__(self) -> str:
        parts = []
        for i, c in enumerate(self.components):
            if c.is_exact and c.is_zero():
                continue
            parts.append(f"({c})*d{i + 1}")
        return "VectorField(" + (" + ".join(parts) or "0") + ")"


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X,Y]^i = sum_j X^j d_j Y^i - Y^j d_j X^i."""
    if X.n != Y.n:
        raise StructuralError("dimension mismatch")
    _require_exact(X, Y)
    return VectorField([X.apply(Y.components[i]) - Y.apply(X.components[i])
                        for i in range(X.n)])


def lie_bracket_at(X: VectorField, Y: VectorField, x: Sequence) -> np.ndarray:
    """Float value of [X,Y] at ``x`` from first jets."""
    xf = np.asarray(x, dtype=float)
    return (Y.jacobian_evaluator()(xf) @ X.evaluator()(xf)
            - X.jacobian_evaluator()(xf) @ Y.evaluator()(xf))


# --- sparse forms and multivectors -------------------------------------------

class _SparseField:
    variance = VECTOR
    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: Mapping | None = None):
        self.n = n
        self.degree = degree
        acc: dict = {}
        for raw, c in (coeffs or {}).items():
            raw = tuple(raw)
            if len(raw) != degree or any(i < 0 or i >= n for i in raw):
                raise StructuralError(f"bad multi-index {raw} for n={n}, degree={degree}")
            key, s = sort_sign(raw)
            if s == 0:
                continue
            if not isinstance(c, (Polynomial, NumericFunction)):
                c = Polynomial.const(n, c)
            if c.n != n:
                raise StructuralError("coefficient dimension mismatch")
            if isinstance(c, NumericFunction):
                if key in acc:
                    raise StructuralError("cannot accumulate numeric coefficients")
                acc[key] = c if s > 0 else _neg_numeric(c)
            else:
                add_term(acc, key, c if s > 0 else -c)
        self.coeffs = acc

    @classmethod
    def _raw(cls, n: int, degree: int, coeffs: dict):
        obj = cls.__new__(cls)
        obj.n, obj.degree, obj.coeffs = n, degree, coeffs
        return obj

    @property
    def is_exact(self) -> bool:
        return all(c.is_exact for c in self.coeffs.values())

    def is_zero(self) -> bool:
        _require_exact(self)
        return not self.coeffs

    def _same(self, other) -> None:
        if type(other) is not type(self) or other.n != self.n or other.degree != self.degree:
            raise StructuralError("field type, dimension or degree mismatch")

    def __add__(self, other):
        self._same(other)
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            add_term(acc, k, v)
        return type(self)._raw(self.n, self.degree, acc)

    def __neg__(self):
        return type(self)._raw(self.n, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        """Multiply every coefficient by a polynomial or rational constant."""
        acc = {}
        for k, v in self.coeffs.items():
            add_term(acc, k, v * c)
        return type(self)._raw(self.n, self.degree, acc)

    def __eq__(self, other) -> bool:
        return (type(other) is type(self) and other.n == self.n
                and other.degree == self.degree and other.coeffs == self.coeffs)

    def __hash__(self):
        return hash((type(self).__name__, self.n, self.degree, frozenset(self.coeffs.items())))

    def at(self, x: Sequence) -> AltTensor:
        """Point value as an ``AltTensor``."""
        if is_rational_point(x) and self.is_exact:
            vals = {k: c(x) for k, c in self.coeffs.items()}
        else:
            xf = np.asarray(x, dtype=float)
            vals = {k: float(c(xf)) if c.is_exact else c.jet(xf)[0]
                    for k, c in self.coeffs.items()}
        return AltTensor(self.n, self.degree, vals, self.variance)

    def __repr__(self) -> str:
        sym = "d" if self.variance == VECTOR else "dx"
        parts = [f"({self.coeffs[k]})*" + "^".join(f"{sym}{i + 1}" for i in k)
                 for k in sorted(self.coeffs)]
        return f"{type(self).__name__}(" + (" + ".join(parts) or "0") + ")"


def _neg_numeric(f: NumericFunction) -> NumericFunction:
    def fn(x):
        v, g, h = f.jet(x)
        return -v, -g, -h
    return NumericFunction(f.n, fn, f"-{f.name}")


class FormField(_SparseField):
    """Differential k-form with sparse coefficients."""

    variance = COVECTOR

    @classmethod
    def scalar(cls, f: Polynomial) -> "FormField":
        return cls(f.n, 0, {(): f})

    @classmethod
    def constant(cls, t: AltTensor) -> "FormField":
        if t.variance != COVECTOR:
            raise StructuralError("expected a covector-type tensor")
        return cls(t.n, t.degree, {k: Polynomial.const(t.n, v) for k, v in t.coeffs.items()})

    def dense(self) -> list[Polynomial]:
        """Component list of a 1-form."""
        if self.degree != 1:
            raise StructuralError("dense() needs a 1-form")
        z = Polynomial.zero(self.n)
        return [self.coeffs.get((i,), z) for i in range(self.n)]


class MultiVectorField(_SparseField):
    """Multivector field of degree r with sparse coefficients."""

    variance = VECTOR

    def eval_forms(self, forms: Sequence[FormField]) -> Polynomial:
        """Lambda(alpha_1, ..., alpha_k) for 1-forms (determinant expansion)."""
        if len(forms) != self.degree:
            raise StructuralError(f"arity {len(forms)} != degree {self.degree}")
        _require_exact(self, *forms)
        cols = [f.dense() for f in forms]
        out = Polynomial.zero(self.n)
        for I, c in self.coeffs.items():
            minor = [[col[i] for i in I] for col in cols]
            d = det_generic(minor)
            if isinstance(d, Polynomial) and not d.is_zero():
                out = out + c * d
            elif not isinstance(d, Polynomial) and d != 0:
                out = out + c * d
        return out


def wedge_fields(a: _SparseField, b: _SparseField) -> _SparseField:
    if type(a) is not type(b) or a.n != b.n:
        raise StructuralError("wedge needs fields of the same kind and dimension")
    _require_exact(a, b)
    if a.degree + b.degree > a.n:
        return type(a)._raw(a.n, a.degree + b.degree, {})
    return type(a)._raw(a.n, a.degree + b.degree, wedge_terms(a.coeffs, b.coeffs))


def wedge_many(fields: Sequence[_SparseField]) -> _SparseField:
    out = fields[0]
    for f in fields[1:]:
        out = wedge_fields(out, f)
    return out


def vector_to_multivector(X: VectorField) -> MultiVectorField:
    return MultiVectorField(X.n, 1, {(i,): c for i, c in enumerate(X.components)})


def multivector_to_vector(m: MultiVectorField) -> VectorField:
    if m.degree != 1:
        raise StructuralError("expected a degree-1 multivector")
    z = Polynomial.zero(m.n)
    return VectorField([m.coeffs.get((i,), z) for i in range(m.n)])


def wedge_vectors(fields: Sequence[VectorField]) -> MultiVectorField:
    return wedge_many([vector_to_multivector(X) for X in fields])


def contract(form: FormField, mv: MultiVectorField) -> MultiVectorField:
    """Contract ``form`` into the first slots of ``mv`` (symbolic interior)."""
    if form.n != mv.n or form.degree > mv.degree:
        raise StructuralError("contract needs matching n and form degree <= mv degree")
    _require_exact(form, mv)
    return MultiVectorField._raw(mv.n, mv.degree - form.degree,
                                 interior_terms(form.coeffs, mv.coeffs))


def full_pairing(form: FormField, mv: MultiVectorField) -> Polynomial:
    if form.degree != mv.degree:
        raise StructuralError("pairing needs equal degrees")
    return contract(form, mv).coeffs.get((), Polynomial.zero(form.n))


def interior_vector(X: VectorField, alpha: FormField) -> FormField:
    """i_X alpha, inserting X into the first slot."""
    _require_exact(X, alpha)
    if alpha.degree == 0:
        raise StructuralError("interior product of a 0-form")
    acc: dict = {}
    for I, c in alpha.coeffs.items():
        for pos, i in enumerate(I):
            xi = X.components[i]
            if xi.is_zero():
                continue
            term = c * xi
            add_term(acc, I[:pos] + I[pos + 1:], term if pos % 2 == 0 else -term)
    return FormField._raw(alpha.n, alpha.degree - 1, acc)


# --- exterior calculus ------------------------------------------------------

def differential(f: ScalarField) -> FormField:
    """df as a 1-form; numeric scalars give numeric first partials."""
    if isinstance(f, NumericFunction):
        return FormField._raw(f.n, 1, {(i,): f.partial(i) for i in range(f.n)})
    acc = {}
    for i in range(f.n):
        d = f.diff(i)
        if not d.is_zero():
            acc[(i,)] = d
    return FormField._raw(f.n, 1, acc)


def d_form(alpha: FormField) -> FormField:
    """Exterior derivative of an exact-coefficient form."""
    _require_exact(alpha)
    acc: dict = {}
    for I, c in alpha.coeffs.items():
        for j in range(alpha.n):
            if j in I:
                continue
            dc = c.diff(j)
            if dc.is_zero():
                continue
            key, s = sort_sign((j,) + I)
            add_term(acc, key, dc if s > 0 else -dc)
    return FormField._raw(alpha.n, alpha.degree + 1, acc)


def lie_derivative_form(X: VectorField, alpha: FormField) -> FormField:
    """Cartan formula L_X alpha = i_X d alpha + d i_X alpha."""
    _require_exact(X, alpha)
    if alpha.degree == 0:
        f = alpha.coeffs.get((), Polynomial.zero(alpha.n))
        return FormField.scalar(X.apply(f))
    return interior_vector(X, d_form(alpha)) + d_form(interior_vector(X, alpha))


def lie_derivative_multivector(X: VectorField, Lam: MultiVectorField,
                               gs: Sequence[Polynomial]) -> Polynomial:
    """(L_X Lambda)(dg_1, ..., dg_r) by the derivation formula."""
    _require_exact(X, Lam, *gs)
    if len(gs) != Lam.degree:
        raise StructuralError(f"need {Lam.degree} test functions")
    dgs = [differential(g) for g in gs]
    out = X.apply(Lam.eval_forms(dgs))
    for i, g in enumerate(gs):
        moved = list(dgs)
        moved[i] = differential(X.apply(g))
        out = out - Lam.eval_forms(moved)
    return out


# --- flows ------------------------------------------------------------------

def _rk4(rhs: Callable, y: np.ndarray, t: float, steps: int,
         box: Box | None, project: Callable | None = None) -> np.ndarray:
    h = t / steps
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        pt = y_new if project is None else project(y_new)
        if not np.all(np.isfinite(y_new)):
            raise FlowError("non-finite state during integration", project(y) if project else y)
        if box is not None and not box.contains([float(v) for v in pt]):
            raise FlowError("flow left the domain box", project(y) if project else y)
        y = y_new
    return y


def _richardson(rhs, y0, t, h, tol, box, project, max_doublings):
    steps = max(1, math.ceil(abs(t) / h)) if h > 0 else 1
    coarse = _rk4(rhs, y0, t, steps, box, project)
    for _ in range(max_doublings):
        fine = _rk4(rhs, y0, t, 2 * steps, box, project)
        err = float(np.max(np.abs(fine - coarse))) / 15.0
        if err <= tol:
            return fine, err
        coarse, steps = fine, 2 * steps
    raise FlowError(f"step control failed (error estimate {err:.3e} > {tol:.1e})",
                    project(coarse) if project else coarse)


def flow(X: VectorField, x0: Sequence, t: float, h: float | None = None,
         tol: float = 1e-10, box: Box | None = None, max_doublings: int = 8) -> np.ndarray:
    """Time-t flow of X from x0 by RK4 with a Richardson error check.

    ``h`` is the initial step (default ``|t|/256``); steps are halved until
    the estimated error ``|y_h - y_{h/2}|/15`` is at most ``tol``.
    """
    y0 = np.asarray(x0, dtype=float)
    if t == 0:
        return y0.copy()
    f = X.evaluator()
    h = abs(t) / 256 if h is None else h
    y, _ = _richardson(f, y0, float(t), h, tol, box, None, max_doublings)
    return y


def flow_with_jacobian(X: VectorField, x0: Sequence, t: float, h: float | None = None,
                       tol: float = 1e-10, box: Box | None = None,
                       max_doublings: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Flow together with its spatial Jacobian via the variational equation."""
    n = X.n
    y0 = np.asarray(x0, dtype=float)
    if t == 0:
        return y0.copy(), np.eye(n)
    f = X.evaluator()
    jac = X.jacobian_evaluator()

    def rhs(z):
        y = z[:n]
        J = z[n:].reshape(n, n)
        return np.concatenate([f(y), (jac(y) @ J).ravel()])

    z0 = np.concatenate([y0, np.eye(n).ravel()])
    h = abs(t) / 256 if h is None else h
    z, _ = _richardson(rhs, z0, float(t), h, tol, box, lambda z: z[:n], max_doublings)
    return z[:n], z[n:].reshape(n, n)


class RationalVectorField:
    """Vector field ``num / den`` with polynomial numerator and denominator."""

    def __init__(self, num: VectorField, den: Polynomial | None = None):
        self.num = num
        self.n = num.n
        self.den = den if den is not None else Polynomial.const(num.n, 1)
        self._f = None
        self._jac = None

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def __call__(self, x: Sequence):
        if is_rational_point(x):
            d = self.den(x)
            return tuple(v / d for v in self.num(x))
        return self.evaluator()(x)

    def evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        if self._f is None:
            f, d = self.num.evaluator(), self.den.compiled()

            def ev(x):
                # division by zero on the singular set yields inf/nan, which the
                # flow integrators turn into FlowError
                with np.errstate(divide="ignore", invalid="ignore"):
                    return f(x) / d(x)

            self._f = ev
        return self._f

    def jacobian_evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        if self._jac is None:
            f, J = self.num.evaluator(), self.num.jacobian_evaluator()
            d = self.den.compiled()
            gd = compile_many(self.den.gradient())

            def jac(x):
                dv = d(x)
                with np.errstate(divide="ignore", invalid="ignore"):
                    return (J(x) * dv - np.outer(f(x), gd(x))) / dv ** 2

            self._jac = jac
        return self._jac

    def __repr__(self) -> str:
        return f"RationalVectorField({self.num!r} / ({self.den}))"


def rational_bracket_numerator(X: RationalVectorField, Y: RationalVectorField) -> VectorField:
    """Numerator N of [X, Y] = N / (den_X^2 den_Y^2)."""
    a, b = X.den, Y.den
    # [P/a, Q/b] = ([P,Q] a b - P(b) a Q + Q(a) b P) / (a^2 b^2)
    P, Q = X.num, Y.num
    return (lie_bracket(P, Q).scale(a * b) - Q.scale(a * P.apply(b))
            + P.scale(b * Q.apply(a)))
