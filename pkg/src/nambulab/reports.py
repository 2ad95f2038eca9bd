"""Check reports with deterministic serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

PASS, FAIL, UNSUPPORTED = "pass", "fail", "unsupported"


def jsonable(v: Any) -> Any:
    """Convert rationals, tuples and numpy scalars into stable JSON values."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return float(f"{v:.12e}")
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if hasattr(v, "tolist"):
        return jsonable(v.tolist())
    if hasattr(v, "item"):
        return jsonable(v.item())
    return str(v)


@dataclass
class CheckReport:
    check: str
    anchor: str
    verdict: str
    residual_max: Any = 0
    residual_where: Any = None
    witnesses: list = field(default_factory=list)
    seed: int | None = None
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: float | None = None
    expected: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL

    def as_expected(self) -> bool:
        """True when the verdict matches the annotation (or passes if none)."""
        if self.expected is not None:
            return self.verdict == self.expected
        return self.verdict != FAIL

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "check": self.check,
            "anchor": self.anchor,
            "verdict": self.verdict,
            "residual_max": jsonable(self.residual_max),
            "residual_where": jsonable(self.residual_where),
            "witnesses": jsonable(self.witnesses),
            "seed": self.seed,
            "details": jsonable(self.details),
            "notes": list(self.notes),
        }
        if self.expected is not None:
            d["expected"] = self.expected
        if include_timing and self.timing is not None:
            d["timing_s"] = round(self.timing, 3)
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, separators=(",", ":"))

    def summary(self) -> str:
        return f"{self.check}: {self.verdict} (max residual {jsonable(self.residual_max)})"


def make_report(check: str, anchor: str, residuals: list[tuple[Any, Any]], *,
                exact: bool, tol: float = 1e-9, seed: int | None = None,
                details: dict | None = None, max_witnesses: int = 3) -> CheckReport:
    """Build a report from ``(key, residual)`` pairs.

    In exact mode a residual passes iff it is zero; numerically iff ``|r| < tol``.
    Residuals are processed in sorted key order so output is order independent.
    """
    def size(r):
        if hasattr(r, "is_zero") and callable(r.is_zero):
            if r.is_zero():
                return 0
            return max(abs(c) for c in getattr(r, "terms", {}).values()) if hasattr(r, "terms") else 1
        return abs(r)

    worst, where, witnesses = 0, None, []
    for key, r in sorted(residuals, key=lambda kr: repr(kr[0])):
        s = size(r)
        bad = (s != 0) if exact else (s >= tol)
        if bad and len(witnesses) < max_witnesses:
            witnesses.append({"assignment": key, "residual": str(r)})
        if s > worst:
            worst, where = s, key
    verdict = FAIL if witnesses else PASS
    return CheckReport(check, anchor, verdict, worst, where, witnesses, seed,
                       dict(details or {}, mode="exact" if exact else "numeric",
                            cases=len(residuals)))
