"""Exact sparse multivariate polynomials with rational coefficients.

A polynomial is a map from exponent tuples to ``Fraction`` coefficients.  It is
the exact body of a scalar field; ``NumericFunction`` is the black-box body.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


class ParseError(ValueError):
    """Syntax error in a polynomial string, with a 1-based column."""

    def __init__(self, message: str, column: int, text: str = ""):
        super().__init__(f"column {column}: {message}")
        self.message = message
        self.column = column
        self.text = text


class UnsupportedModeError(TypeError):
    """An exact-only operation was requested on numeric data."""


def _q(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, bool):
        raise TypeError("boolean coefficient")
    if isinstance(c, Rational):
        return Fraction(c)
    raise TypeError(f"non-rational coefficient {c!r}")


def is_rational_point(x: Iterable) -> bool:
    return all(isinstance(v, Rational) and not isinstance(v, bool) for v in x)


class Polynomial:
    """Sparse polynomial in ``n`` variables ``x1..xn``."""

    __slots__ = ("n", "terms", "_compiled", "_hash")

    is_exact = True

    def __init__(self, n: int, terms: Mapping[tuple, object] | None = None):
        self.n = n
        clean: dict = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != n or any(v < 0 for v in e):
                raise ValueError(f"bad exponent {e} for n={n}")
            c = _q(c)
            if c:
                clean[e] = clean.get(e, 0) + c
                if not clean[e]:
                    del clean[e]
        self.terms = clean
        self._compiled = None
        self._hash = None

    @classmethod
    def _raw(cls, n: int, terms: dict) -> "Polynomial":
        # trusted constructor: terms already canonical
        p = cls.__new__(cls)
        p.n = n
        p.terms = terms
        p._compiled = None
        p._hash = None
        return p

    # constructors
    @classmethod
    def const(cls, n: int, c=0) -> "Polynomial":
        c = _q(c)
        return cls._raw(n, {(0,) * n: c} if c else {})

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls._raw(n, {})

    @classmethod
    def var(cls, n: int, i: int) -> "Polynomial":
        e = [0] * n
        e[i] = 1
        return cls._raw(n, {tuple(e): Fraction(1)})

    @classmethod
    def linear(cls, coeffs: Sequence, const=0) -> "Polynomial":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            c = _q(c)
            if c:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = c
        c0 = _q(const)
        if c0:
            terms[(0,) * n] = c0
        return cls._raw(n, terms)

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Polynomial":
        return cls(len(exps), {tuple(exps): c})

    @classmethod
    def parse(cls, text: str, n: int) -> "Polynomial":
        return _Parser(text, n).parse()

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * self.n, Fraction(0))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def variables(self) -> set[int]:
        return {i for e in self.terms for i, v in enumerate(e) if v}

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch {self.n} != {other.n}")
            return other
        return Polynomial.const(self.n, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if len(other.terms) > len(self.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out = dict(a)
        for e, c in b.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v = v + c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _q(other)
            if not c:
                return Polynomial._raw(self.n, {})
            return Polynomial._raw(self.n, {e: v * c for e, v in self.terms.items()})
        if other.n != self.n:
            raise ValueError(f"dimension mismatch {self.n} != {other.n}")
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Polynomial._raw(self.n, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Polynomial":
        c = _q(c)
        return self * (1 / c)

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.n == other.n and self.terms == other.terms
        if isinstance(other, Rational):
            return self.terms == ({(0,) * self.n: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    # calculus
    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = list(e)
                e2[i] = k - 1
                out[tuple(e2)] = c * k
        return Polynomial._raw(self.n, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.n)]

    def hessian(self) -> list[list["Polynomial"]]:
        g = self.gradient()
        return [[g[i].diff(j) for j in range(self.n)] for i in range(self.n)]

    # evaluation
    def __call__(self, x: Sequence):
        if len(x) != self.n:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.n}")
        if is_rational_point(x):
            total = Fraction(0)
            for e, c in self.terms.items():
                t = c
                for xi, k in zip(x, e):
                    if k:
                        t = t * xi ** k
                total += t
            return total
        return float(self.compiled()(np.asarray(x, dtype=float)))

    def jet(self, x: Sequence):
        """(value, gradient, Hessian) at ``x``; exact at rational points."""
        g = self.gradient()
        h = [[g[i].diff(j) for j in range(self.n)] for i in range(self.n)]
        if is_rational_point(x):
            return self(x), [gi(x) for gi in g], [[hij(x) for hij in row] for row in h]
        xf = np.asarray(x, dtype=float)
        return (float(self.compiled()(xf)),
                np.array([float(gi.compiled()(xf)) for gi in g]),
                np.array([[float(hij.compiled()(xf)) for hij in row] for row in h]))

    def compiled(self) -> Callable:
        """Float evaluator accepting an array whose first axis is the variable."""
        if self._compiled is None:
            self._compiled = _compile([self])
        return self._compiled

    # substitution
    def substitute(self, polys: Sequence["Polynomial"], m: int | None = None) -> "Polynomial":
        """Compose with ``x_i = polys[i]`` (polynomials in ``m`` variables)."""
        if len(polys) != self.n:
            raise ValueError("substitution needs one polynomial per variable")
        if m is None:
            m = polys[0].n if polys else 0
        cache: dict = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                cache[key] = Polynomial.const(m, 1) if k == 0 else power(i, k - 1) * polys[i]
            return cache[key]

        out = Polynomial.zero(m)
        for e, c in self.terms.items():
            t = Polynomial.const(m, c)
            for i, k in enumerate(e):
                if k:
                    t = t * power(i, k)
            out = out + t
        return out

    def compose_linear(self, M: Sequence[Sequence]) -> "Polynomial":
        """Substitute ``x = M y`` where ``M`` is n x m."""
        if len(M) != self.n:
            raise ValueError("matrix row count must equal n")
        m = len(M[0]) if M else 0
        return self.substitute([Polynomial.linear(row) for row in M], m)

    # text
    def to_string(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"x{i + 1}" for i in range(self.n)]
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (-sum(e), tuple(-v for v in e))):
            c = self.terms[e]
            mono = "*".join(f"{names[i]}^{k}" if k > 1 else names[i]
                            for i, k in enumerate(e) if k)
            mag = abs(c)
            cs = str(mag)
            if mono:
                body = mono if mag == 1 else (f"({cs})*{mono}" if "/" in cs else f"{cs}*{mono}")
            else:
                body = f"({cs})" if "/" in cs and parts else cs
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Polynomial(n={self.n}, {self.to_string()!r})"


def _compile(polys: Sequence[Polynomial], as_tuple: bool = False) -> Callable:
    """Generate a float evaluator for one or several polynomials."""
    n = polys[0].n if polys else 0
    exprs = []
    for p in polys:
        if not p.terms:
            exprs.append("0.0*x[0]" if n else "0.0")
            continue
        parts = []
        for e, c in p.terms.items():
            factors = [repr(float(c))]
            for i, k in enumerate(e):
                if k == 1:
                    factors.append(f"x[{i}]")
                elif k:
                    factors.append(f"x[{i}]**{k}")
            parts.append("*".join(factors))
        exprs.append(" + ".join(parts))
    if len(polys) == 1 and not as_tuple:
        src = f"lambda x: {exprs[0]}"
    else:
        src = "lambda x: (" + ", ".join(exprs) + ",)"
    return eval(src, {"__builtins__": {}})  # noqa: S307 - generated from own terms


def compile_many(polys: Sequence[Polynomial]) -> Callable[[np.ndarray], np.ndarray]:
    """Float evaluator returning the vector of values at a point."""
    f = _compile(list(polys), as_tuple=True)
    return lambda x: np.array(f(x), dtype=float)


class NumericFunction:
    """Black-box scalar field given by a 2-jet evaluator."""

    is_exact = False

    def __init__(self, n: int, fn: Callable[[np.ndarray], tuple], name: str = "numeric"):
        self.n = n
        self.fn = fn
        self.name = name

    def jet(self, x: Sequence):
        v, g, h = self.fn(np.asarray(x, dtype=float))
        g = np.asarray(g, dtype=float).reshape(self.n)
        h = np.asarray(h, dtype=float).reshape(self.n, self.n)
        scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
        if h.size and np.max(np.abs(h - h.T)) > 1e-10 * scale:
            raise ValueError(f"{self.name}: Hessian is not symmetric")
        return float(v), g, h

    def __call__(self, x: Sequence) -> float:
        return self.jet(x)[0]

    def partial(self, i: int) -> "NumericFunction":
        """First partial derivative; its own Hessian is unavailable (NaN)."""
        parent = self

        def fn(x):
            _, g, h = parent.jet(x)
            return g[i], h[i], np.full((parent.n, parent.n), np.nan)

        return NumericFunction(self.n, fn, f"d{i + 1}({self.name})")

    def __repr__(self) -> str:
        return f"NumericFunction(n={self.n}, {self.name})"


# --- parser -----------------------------------------------------------------

class _Parser:
    """Recursive-descent parser for strings like ``x1^2 - 3/2*x2*x3 + 1``."""

    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.pos = 0

    def error(self, msg: str, pos: int | None = None):
        raise ParseError(msg, (self.pos if pos is None else pos) + 1, self.text)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Polynomial:
        if not self.text.strip():
            self.error("empty polynomial")
        p = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            at = self.pos
            self.pos += 1
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant():
                    self.error("division by a non-constant", at)
                if q.is_zero():
                    self.error("division by zero", at)
                p = p / q.constant_value()
        return p

    def unary(self) -> Polynomial:
        c = self.peek()
        if c in ("+", "-"):
            self.pos += 1
            p = self.unary()
            return -p if c == "-" else p
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek() == "^" or self.text.startswith("**", self.pos):
            self.pos += 2 if self.text.startswith("**", self.pos) else 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("exponent must be a non-negative integer")
            return base ** int(self.text[start:self.pos])
        return base

    def atom(self) -> Polynomial:
        c = self.peek()
        if c == "(":
            self.pos += 1
            p = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return p
        if c == "x":
            start = self.pos
            self.pos += 1
            d0 = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if d0 == self.pos:
                self.error("variable needs an index, e.g. x1", start)
            k = int(self.text[d0:self.pos])
            if not 1 <= k <= self.n:
                self.error(f"variable x{k} out of range 1..{self.n}", start)
            return Polynomial.var(self.n, k - 1)
        if c.isdigit() or c == ".":
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isdigit()
                                                  or self.text[self.pos] == "."):
                self.pos += 1
            tok = self.text[start:self.pos]
            try:
                val = Fraction(tok)
            except ValueError:
                self.error(f"bad number {tok!r}", start)
            return Polynomial.const(self.n, val)
        if not c:
            self.error("unexpected end of input")
        self.error(f"unexpected character {c!r}")
        raise AssertionError  # unreachable


def fraction_to_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def as_fraction_point(x: Sequence, max_den: int | None = None) -> tuple[Fraction, ...]:
    """Convert coordinates to ``Fraction`` (floats are converted exactly)."""
    out = []
    for v in x:
        if isinstance(v, Rational):
            out.append(Fraction(v))
        else:
            f = Fraction(float(v))
            out.append(f.limit_denominator(max_den) if max_den else f)
    return tuple(out)

