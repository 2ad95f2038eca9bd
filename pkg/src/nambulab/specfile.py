"""JSON specification files for structures and towers.

Example::

    {
      "version": 1,
      "name": "scaled-x1",
      "structure": {"n": 3, "r": 3, "tensor": {"1,2,3": "x1"}},
      "expect": {"filippov-direct": "pass"},
      "points": [[1, 0, 0]]
    }

A structure is either inline (``n``, ``r``, ``tensor`` and optional
``restriction`` rows and ``box`` as ``[[lo, hi], ...]``) or a gallery reference
``{"gallery": name, "params": {...}}``.  A tower is ``{"kind", "levels",
"links"}`` with inline/gallery levels, or a tower gallery reference.  Indices
are 1-based.  Numbers may be integers or rational strings such as ``"1/2"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .fields import Box, MultiVectorField
from .multilinear import sort_sign
from .nambu import NambuStructure
from .poly import ParseError, Polynomial
from .reports import FAIL, PASS, UNSUPPORTED

FORMAT_VERSION = 1

TOP_KEYS = {"version", "name", "structure", "tower", "expect", "points"}
INLINE_KEYS = {"n", "r", "tensor", "restriction", "box", "name"}
GALLERY_KEYS = {"gallery", "params"}
TOWER_KEYS = {"kind", "levels", "links", "name"}
VERDICTS = (PASS, FAIL, UNSUPPORTED)


class SpecError(ValueError):
    """Syntax or semantic problem in a spec file, with a 1-based position."""

    def __init__(self, message: str, line: int = 0, column: int = 0, path: str = ""):
        self.message, self.line, self.column, self.path = message, line, column, path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}")


@dataclass
class SpecFile:
    """Validated spec in canonical form (``data`` is what :func:`emit_spec` writes)."""
    kind: str                      # "structure" | "tower"
    data: dict
    expect: dict = field(default_factory=dict)
    points: list = field(default_factory=list)
    name: str = ""

    def build(self):
        """Instantiate the NambuStructure or TowerSpec."""
        if self.kind == "structure":
            return _build_structure(self.data)
        return _build_tower(self.data)

    def canonical(self) -> dict:
        out: dict = {"version": FORMAT_VERSION, self.kind: self.data}
        if self.name:
            out["name"] = self.name
        if self.expect:
            out["expect"] = dict(sorted(self.expect.items()))
        if self.points:
            out["points"] = self.points
        return out


# --- position helpers ---------------------------------------------------------------

def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


class _Ctx:
    def __init__(self, text: str, path: str):
        self.text, self.path = text, path

    def fail(self, message: str, token: Any = None, inner: int = 0):
        offset = -1
        if token is not None:
            offset = self.text.find(json.dumps(token) if isinstance(token, str) else str(token))
        if offset < 0:
            raise SpecError(message, 0, 0, self.path)
        line, col = _position(self.text, offset + inner)
        raise SpecError(message, line, col, self.path)


# --- value normalizers --------------------------------------------------------------

def _num(ctx: _Ctx, v) -> Fraction:
    if isinstance(v, bool):
        ctx.fail("expected a number", v)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            ctx.fail(f"not a rational number: {v!r}", v)
    ctx.fail(f"expected a number, got {type(v).__name__}", v)


def _num_out(q: Fraction):
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _int(ctx: _Ctx, d: dict, key: str, lo: int = 1) -> int:
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        ctx.fail(f"{key!r} must be an integer >= {lo}", key)
    return v


def _keys(ctx: _Ctx, d, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        ctx.fail(f"{where} must be an object")
    for k in d:
        if k not in allowed:
            ctx.fail(f"unknown key {k!r} in {where}", k)


def _multi_index(ctx: _Ctx, key: str, n: int, r: int) -> tuple[tuple, int]:
    parts = [p.strip() for p in key.split(",")]
    try:
        idx = [int(p) for p in parts]
    except ValueError:
        ctx.fail(f"bad multi-index {key!r}", key)
    if len(idx) != r:
        ctx.fail(f"multi-index {key!r} has {len(idx)} entries, expected r={r}", key)
    if len(set(idx)) != len(idx):
        ctx.fail(f"repeated index in {key!r}", key)
    if any(not 1 <= i <= n for i in idx):
        ctx.fail(f"multi-index {key!r} out of range 1..{n}", key)
    srt, sign = sort_sign(tuple(i - 1 for i in idx))
    return srt, sign


def _poly(ctx: _Ctx, text, n: int) -> Polynomial:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Polynomial.const(n, _num(ctx, text))
    if not isinstance(text, str):
        ctx.fail("tensor coefficients must be polynomial strings", text)
    try:
        return Polynomial.parse(text, n)
    except ParseError as exc:
        ctx.fail(f"polynomial: {exc.message}", text, inner=exc.column)


# --- structure / tower normalization ------------------------------------------------

def _norm_structure(ctx: _Ctx, d, where: str = "structure") -> dict:
    if isinstance(d, dict) and "gallery" in d:
        _keys(ctx, d, GALLERY_KEYS, where)
        from .gallery import GALLERY_NAMES
        if d["gallery"] not in GALLERY_NAMES:
            ctx.fail(f"unknown gallery item {d['gallery']!r}", d["gallery"])
        params = d.get("params", {})
        if not isinstance(params, dict):
            ctx.fail("params must be an object", "params")
        out = {"gallery": d["gallery"], "params": dict(sorted(params.items()))}
        try:
            _build_structure(out)
        except (KeyError, ValueError, TypeError) as exc:
            ctx.fail(f"gallery {d['gallery']}: {exc}", d["gallery"])
        return out
    _keys(ctx, d, INLINE_KEYS, where)
    for k in ("n", "r", "tensor"):
        if k not in d:
            ctx.fail(f"{where} is missing {k!r}")
    n, r = _int(ctx, d, "n"), _int(ctx, d, "r")
    if r > n:
        ctx.fail(f"order r={r} exceeds n={n}", "r")
    if not isinstance(d["tensor"], dict):
        ctx.fail("tensor must map multi-indices to coefficients", "tensor")
    coeffs: dict = {}
    for key, val in d["tensor"].items():
        I, sign = _multi_index(ctx, key, n, r)
        p = _poly(ctx, val, n)
        coeffs[I] = coeffs.get(I, Polynomial.zero(n)) + (p if sign > 0 else -p)
    tensor = {",".join(str(i + 1) for i in I): coeffs[I].to_string()
              for I in sorted(coeffs) if not coeffs[I].is_zero()}
    out: dict = {"n": n, "r": r, "tensor": tensor}
    if "name" in d:
        out["name"] = str(d["name"])
    if "restriction" in d:
        rows = d["restriction"]
        if not isinstance(rows, list) or any(not isinstance(row, list) or len(row) != n for row in rows):
            ctx.fail(f"restriction must be a list of rows with {n} entries", "restriction")
        out["restriction"] = [[_num_out(_num(ctx, v)) for v in row] for row in rows]
    if "box" in d:
        box = d["box"]
        if not isinstance(box, list) or len(box) != n or any(not isinstance(b, list) or len(b) != 2 for b in box):
            ctx.fail(f"box must be a list of {n} [lo, hi] pairs", "box")
        out["box"] = [[_num_out(_num(ctx, a)), _num_out(_num(ctx, b))] for a, b in box]
    try:
        _build_structure(out)
    except ValueError as exc:
        ctx.fail(f"{where}: {exc}", where if where == "structure" else None)
    return out


def _norm_tower(ctx: _Ctx, d) -> dict:
    if isinstance(d, dict) and "gallery" in d:
        _keys(ctx, d, GALLERY_KEYS, "tower")
        params = d.get("params", {})
        out = {"gallery": d["gallery"], "params": dict(sorted(params.items()))}
        try:
            _build_tower(out)
        except (KeyError, ValueError, TypeError) as exc:
            ctx.fail(f"tower gallery: {exc}", d["gallery"])
        return out
    _keys(ctx, d, TOWER_KEYS, "tower")
    from .towers import DIRECT, PROJECTIVE
    if d.get("kind") not in (PROJECTIVE, DIRECT):
        ctx.fail(f"tower kind must be {PROJECTIVE!r} or {DIRECT!r}", "kind")
    levels = d.get("levels")
    if not isinstance(levels, list) or not levels:
        ctx.fail("tower needs a non-empty 'levels' list", "levels")
    links = d.get("links", [])
    if not isinstance(links, list):
        ctx.fail("'links' must be a list of matrices", "links")
    out = {"kind": d["kind"],
           "levels": [_norm_structure(ctx, lv, f"level {i + 1}") for i, lv in enumerate(levels)],
           "links": [[[_num_out(_num(ctx, v)) for v in row] for row in M] for M in links]}
    if "name" in d:
        out["name"] = str(d["name"])
    try:
        _build_tower(out)
    except ValueError as exc:
        ctx.fail(f"tower: {exc}", "links")
    return out


def _build_structure(d: dict) -> NambuStructure:
    if "gallery" in d:
        from .gallery import build
        return build(d["gallery"], d.get("params", {})).structure
    n, r = d["n"], d["r"]
    coeffs = {}
    for key, text in d["tensor"].items():
        I = tuple(int(i) - 1 for i in key.split(","))
        coeffs[I] = Polynomial.parse(text, n)
    B = [[Fraction(v) for v in row] for row in d["restriction"]] if "restriction" in d else None
    box = Box([Fraction(a) for a, _ in d["box"]], [Fraction(b) for _, b in d["box"]]) if "box" in d else None
    return NambuStructure(MultiVectorField(n, r, coeffs), B, box, d.get("name", ""))


def _build_tower(d: dict):
    from .towers import TowerSpec, build_tower
    if "gallery" in d:
        return build_tower(d["gallery"], d.get("params", {}))
    levels = [_build_structure(lv) for lv in d["levels"]]
    links = [[[Fraction(v) for v in row] for row in M] for M in d["links"]]
    return TowerSpec(d["kind"], levels, links, d.get("name", ""))


# --- public API ---------------------------------------------------------------------

def parse_spec_text(text: str, path: str = "") -> SpecFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"syntax error: {exc.msg}", exc.lineno, exc.colno, path) from None
    ctx = _Ctx(text, path)
    _keys(ctx, raw, TOP_KEYS, "spec")
    if "version" not in raw:
        ctx.fail("missing 'version'")
    if raw["version"] != FORMAT_VERSION:
        ctx.fail(f"version mismatch: file has {raw['version']!r}, expected {FORMAT_VERSION}", "version")
    if ("structure" in raw) == ("tower" in raw):
        ctx.fail("spec needs exactly one of 'structure' or 'tower'")
    kind = "structure" if "structure" in raw else "tower"
    data = _norm_structure(ctx, raw["structure"]) if kind == "structure" else _norm_tower(ctx, raw["tower"])
    expect = raw.get("expect", {})
    _keys(ctx, expect, set(expect) if isinstance(expect, dict) else set(), "expect")
    for k, v in expect.items():
        if v not in VERDICTS:
            ctx.fail(f"expected verdict for {k!r} must be one of {VERDICTS}", v)
    points = raw.get("points", [])
    if not isinstance(points, list) or any(not isinstance(p, list) for p in points):
        ctx.fail("'points' must be a list of coordinate lists", "points")
    points = [[_num_out(_num(ctx, v)) for v in p] for p in points]
    return SpecFile(kind, data, dict(sorted(expect.items())), points, str(raw.get("name", "")))


def parse_spec(path: str) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse_spec_text(fh.read(), str(path))


def emit_spec(spec: SpecFile) -> str:
    """Canonical JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(spec.canonical(), indent=2, sort_keys=True) + "\n"


def structure_spec(S: NambuStructure, name: str = "") -> SpecFile:
    """Spec for an existing exact structure."""
    if not S.is_exact:
        raise TypeError("only exact structures can be written to spec files")
    data: dict = {"n": S.n, "r": S.r,
                  "tensor": {",".join(str(i + 1) for i in I): c.to_string()
                             for I, c in sorted(S.tensor.coeffs.items()) if not c.is_zero()}}
    if S.is_partial:
        data["restriction"] = [[_num_out(Fraction(v)) for v in row] for row in S.B]
    data["box"] = [[_num_out(Fraction(a)), _num_out(Fraction(b))] for a, b in zip(S.box.lo, S.box.hi)]
    if S.name:
        data["name"] = S.name
    return SpecFile("structure", data, name=name)
