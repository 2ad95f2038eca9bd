"""Command line front end: ``nambulab {check,darboux,algebroid,tower,gallery}``.

Exit codes: 0 when every report matches its expectation (pass, or the verdict
annotated under ``expect`` in the spec), 1 when some check fails unexpectedly,
2 on parse or configuration errors.  Reports go to stdout either as one JSON
record per line (``--format lines``) or as one JSON document (``--format doc``).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .algebroid import (CONVENTIONS, algebroid_bracket, check_anchor_morphism, check_exact_forms_identity,
                        check_leibniz_identity, check_module_rules, hagiwara_bracket, random_forms)
from .fields import DomainError, FlowError, differential, wedge_many
from .nambu import (ConfigurationError, NambuStructure, TheoremViolation, _ham, check_filippov_direct,
                    check_filippov_structural, check_leibniz, check_lie_derivative_criterion,
                    classify_point, fi_residual, lie_derivative_tensor, _pair, plucker_check,
                    test_family)
from .normal_form import (ChartError, FrameError, characteristic_frame, coordinate_identity_residual,
                          darboux_chart, frame_identities, verify_chart)
from .poly import ParseError, Polynomial, UnsupportedModeError
from .reports import FAIL, PASS, UNSUPPORTED, CheckReport, make_report
from .specfile import SpecError, SpecFile, parse_spec, parse_spec_text
from .towers import (PROJECTIVE, check_compat, check_darboux_compat, check_limit_bracket,
                     check_stratification, sample_tower_points)

FI_CHECKS = ("filippov-direct", "lie-derivative", "filippov-structural")
SEED_ENV = "NAMBU_SEED"


class UsageError(Exception):
    """Configuration problem detected by the front end (exit code 2)."""


# --- spec loading -------------------------------------------------------------------

def _param_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_spec(ref: str, params: Sequence[str] = ()) -> SpecFile:
    """A spec file path, or ``gallery:NAME`` / ``tower:NAME`` with ``k=v`` params."""
    kv = {}
    for p in params:
        if "=" not in p:
            raise UsageError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        kv[k] = _param_value(v)
    for prefix, key in (("gallery:", "structure"), ("tower:", "tower")):
        if ref.startswith(prefix):
            doc = {"version": 1, key: {"gallery": ref[len(prefix):], "params": kv}}
            spec = parse_spec_text(json.dumps(doc, sort_keys=True), ref)
            if key == "structure":
                from .gallery import build
                exp = build(ref[len(prefix):], kv).expected
                if "fi" in exp:
                    spec.expect = {"fi": exp["fi"]}
            return spec
    if params:
        raise UsageError("--param only applies to gallery:/tower: references")
    return parse_spec(ref)


def _apply_expectations(reports: list[CheckReport], expect: dict) -> None:
    for rep in reports:
        if rep.check in expect:
            rep.expected = expect[rep.check]
        elif "fi" in expect and rep.check in FI_CHECKS and rep.verdict != UNSUPPORTED:
            rep.expected = expect["fi"]


def _point(text: str, n: int) -> tuple:
    try:
        pt = tuple(Fraction(v.strip()) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad point {text!r}") from None
    if len(pt) != n:
        raise UsageError(f"point {text!r} has {len(pt)} coordinates, expected {n}")
    return pt


def _structure(spec: SpecFile) -> NambuStructure:
    if spec.kind != "structure":
        raise UsageError("this command needs a structure spec (got a tower)")
    return spec.build()


# --- commands -----------------------------------------------------------------------

def _timed(fn, *a, **kw) -> CheckReport:
    t0 = time.perf_counter()
    rep = fn(*a, **kw)
    rep.timing = time.perf_counter() - t0
    return rep


def cmd_check(S: NambuStructure, args) -> list[CheckReport]:
    return [_timed(check_filippov_direct, S, args.family, args.seed, samples=args.samples, tol=args.tol),
            _timed(check_lie_derivative_criterion, S, args.family, args.seed),
            _timed(check_filippov_structural, S, args.samples, args.seed),
            _timed(check_leibniz, S, seed=args.seed),
            _timed(classification_census, S, args.samples, args.seed)]


def classification_census(S: NambuStructure, samples: int, seed: int) -> CheckReport:
    """Classify sampled points; a rank strictly between 0 and r is a failure."""
    rng = np.random.default_rng(seed)
    pts = S.box.sample(rng, samples, exact=S.is_exact)
    tally = {"Regular": 0, "Singular": 0}
    residuals = []
    for k, x in enumerate(pts):
        try:
            pc = classify_point(S, x)
            tally[pc.cls] += 1
            residuals.append(((k, tuple(map(str, x))), 0))
        except TheoremViolation:
            residuals.append(((k, tuple(map(str, x))), 1))
    return make_report("classification", "regular-points-have-rank-r", residuals, exact=True,
                       seed=seed, details={"classes": tally})


def cmd_darboux(S: NambuStructure, points: list, args) -> list[CheckReport]:
    out = []
    for x in points:
        where = [str(v) for v in x]
        try:
            cf = characteristic_frame(S, x)
        except FrameError as exc:
            out.append(CheckReport("frame-identities", "characteristic-frame", UNSUPPORTED,
                                   details={"point": where}, notes=[str(exc)]))
            continue
        ids = frame_identities(S, cf)
        residuals = [(("orthogonality", k), v) for k, v in sorted(ids["orthogonality"].items())]
        residuals.append((("determinant",), ids["determinant"]))
        residuals += [(("wedge", tuple(i + 1 for i in I)), c) for I, c in sorted(ids["wedge"].coeffs.items())]
        out.append(make_report("frame-identities", "characteristic-frame", residuals, exact=True,
                               details={"point": where,
                                        "functions": [str(f) for f in cf.fs]}))
        try:
            chart = darboux_chart(S, x, seed=args.seed)
        except ChartError as exc:
            out.append(CheckReport("verify-chart", "darboux-normal-form", FAIL,
                                   witnesses=[{"point": where, "diagnostics": exc.diagnostics[-3:]}],
                                   details={"point": where}, notes=[str(exc)]))
            continue
        try:
            rep = verify_chart(S, chart, samples=max(1, args.samples // 2), seed=args.seed, tol=args.tol_chart)
            rep.details["coordinate_identity_residual"] = coordinate_identity_residual(chart, cf.frame)
            rep.details["table"] = chart.tabulate(2)
        except (FlowError, ChartError) as exc:
            rep = CheckReport("verify-chart", "darboux-normal-form", FAIL,
                              witnesses=[{"point": where, "failure": str(exc)}], notes=[str(exc)])
        rep.details["point"] = where
        out.append(rep)
    return out


def _singular_points(S: NambuStructure, seed: int, limit: int = 8) -> list:
    """Rational singular points found on coordinate hyperplanes and sampled points."""
    rng = np.random.default_rng(seed)
    cands = [tuple(Fraction(0) for _ in range(S.n))]
    for x in S.box.sample(rng, 16):
        for k in range(S.n):
            cands.append(tuple(Fraction(0) if a == k else v for a, v in enumerate(x)))
    out = []
    for x in cands:
        if S.box.contains(x) and not classify_point(S, x).regular:
            out.append(x)
            if len(out) >= limit:
                break
    return out


def cmd_algebroid(S: NambuStructure, args) -> list[CheckReport]:
    count = args.forms
    conv = args.convention
    forms = random_forms(S, 3 * count, seed=args.seed)
    pairs = list(zip(forms[:count], forms[count:2 * count]))
    triples = list(zip(forms[:count], forms[count:2 * count], forms[2 * count:]))
    fi_ok = check_filippov_direct(S, "quad", args.seed).passed
    br = lambda a, b: algebroid_bracket(S, a, b, conv)  # noqa: E731
    hb = lambda a, b: hagiwara_bracket(S, a, b)  # noqa: E731
    sing = _singular_points(S, args.seed)
    reps = [check_anchor_morphism(S, pairs, br, sing, args.seed, fi_ok)]
    fam = test_family(S, "quad", args.seed)
    rng = np.random.default_rng(args.seed)
    combos = list(itertools.combinations(range(len(fam)), S.r - 1))
    exact_res = []
    for _ in range(min(count, len(combos) ** 2)):
        fs = [fam[i] for i in combos[int(rng.integers(len(combos)))]]
        gs = [fam[i] for i in combos[int(rng.integers(len(combos)))]]
        exact_res.append(check_exact_forms_identity(S, fs, gs, br))
    bad = [r for r in exact_res if not r.passed]
    merged = bad[0] if bad else exact_res[0]
    merged.details["assignments"] = len(exact_res)
    reps.append(merged)
    f = fam[int(rng.integers(len(fam)))] * fam[int(rng.integers(len(fam)))]
    reps.append(check_module_rules(S, f, pairs, br, seed=args.seed))
    reps.append(check_leibniz_identity(S, triples, br, args.seed, fi_ok))
    hag = [check_anchor_morphism(S, pairs, hb, sing, args.seed, fi_ok),
           check_leibniz_identity(S, triples, hb, args.seed, fi_ok)]
    for r in hag:
        r.check = "hagiwara-" + r.check
    reps += hag
    for r in reps:
        r.details["convention"] = conv if not r.check.startswith("hagiwara") else "interior"
    return reps


def cmd_tower(T, args) -> list[CheckReport]:
    reps = [_timed(check_compat, T)]
    if not reps[0].passed:
        reps.append(CheckReport("tower-stratification", f"{T.kind}-limit-regular-set", UNSUPPORTED,
                                notes=["compatibility failed; theorems do not apply"]))
        return reps
    count = args.samples if args.samples_given else 200
    reps.append(_timed(check_stratification, T, count, args.seed))
    if T.kind == PROJECTIVE:
        pts = sample_tower_points(T, 20, args.seed)
        gens = T.levels[0].generators()
        if len(gens) >= T.r:
            reps.append(check_limit_bracket(T, gens[:T.r], 0, pts))
        S1 = T.levels[0]
        center = tuple(Fraction(c) for c in S1.box.center)
        cand = [center] + S1.box.sample(np.random.default_rng(args.seed), 8)
        chart = None
        for x in cand:
            try:
                chart = darboux_chart(S1, x, seed=args.seed)
                break
            except (FrameError, ChartError):
                continue
        if chart is None:
            reps.append(CheckReport("darboux-compat", "projective-limit-darboux", UNSUPPORTED,
                                    notes=["no Darboux chart on level 1"]))
        else:
            reps.append(check_darboux_compat(T, chart, seed=args.seed, tol=args.tol_chart))
    return reps


# --- replay -------------------------------------------------------------------------

def _polys(names, n):
    return [Polynomial.parse(s, n) for s in names]


def replay_witness(obj, check: str, witness: dict, args) -> bool:
    """Re-run one failing case in isolation; True when the failure reproduces."""
    a = witness.get("assignment")
    if isinstance(obj, NambuStructure):
        S = obj
        if check == "filippov-direct" and a is not None and S.is_exact:
            fs, gs = _polys(a[0], S.n), _polys(a[1], S.n)
            return str(fi_residual(S, fs, gs)) == witness["residual"]
        if check == "lie-derivative" and a is not None:
            fs, gs = _polys(a[0], S.n), _polys(a[1], S.n)
            L = lie_derivative_tensor(_ham(S.tensor, [differential(f) for f in fs]), S.tensor)
            return str(_pair(wedge_many([differential(g) for g in gs]), L)) == witness["residual"]
        if check == "leibniz" and a is not None:
            fs = _polys(a[0], S.n)
            g, h = _polys(a[1:], S.n)
            X = _ham(S.tensor, [differential(f) for f in fs])
            return str(X.apply(g * h) - g * X.apply(h) - h * X.apply(g)) == witness["residual"]
        if check == "filippov-structural" and "point" in witness:
            x = tuple(Fraction(v) for v in witness["point"])
            if not plucker_check(S.tensor_at(x))[0]:
                return witness["failure"] == "not decomposable"
            return check_filippov_structural(S, points=[x]).failed
    rerun = {"check": lambda: cmd_check(obj, args), "darboux": lambda: [],
             "algebroid": lambda: cmd_algebroid(obj, args), "tower": lambda: cmd_tower(obj, args)}
    for rep in rerun[args.command]():
        if rep.check == check:
            want = json.dumps(witness, sort_keys=True)
            return any(json.dumps(w, sort_keys=True) == want for w in rep.to_dict()["witnesses"])
    return False


def _read_records(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
        return doc["reports"] if isinstance(doc, dict) and "reports" in doc else (
            doc if isinstance(doc, list) else [doc])
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def cmd_replay(obj, path: str, args) -> list[CheckReport]:
    out = []
    for rec in _read_records(path):
        if rec.get("verdict") != FAIL:
            continue
        results = [replay_witness(obj, rec["check"], w, args) for w in rec.get("witnesses", [])]
        ok = bool(results) and all(results)
        out.append(CheckReport("replay:" + rec["check"], rec.get("anchor", ""), PASS if ok else FAIL,
                               details={"witnesses": len(results), "reproduced": sum(results)}))
    return out


# --- output -------------------------------------------------------------------------

def exit_code(reports: list[CheckReport]) -> int:
    return 0 if all(r.as_expected() for r in reports) else 1


def render(reports: list[CheckReport], fmt: str, header: dict, timing: bool = False) -> str:
    if fmt == "lines":
        return "".join(r.to_json(timing) + "\n" for r in reports)
    doc = dict(header, reports=[r.to_dict(timing) for r in reports], exit=exit_code(reports))
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _gallery(args) -> int:
    from .gallery import GALLERY_NAMES, build
    from .specfile import emit_spec, structure_spec
    from .towers import TOWER_GALLERY
    if not args.name:
        for name in GALLERY_NAMES:
            print(f"structure {name}")
        for name in sorted(TOWER_GALLERY):
            print(f"tower {name}")
        return 0
    spec = load_spec(("tower:" if args.name in TOWER_GALLERY else "gallery:") + args.name, args.param)
    if spec.kind == "structure" and args.inline:
        item = build(args.name, spec.data["params"])
        spec = structure_spec(item.structure, name=item.name)
    sys.stdout.write(emit_spec(spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nambulab", description="Nambu structure checks")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=64):
        sp.add_argument("spec", help="spec file, gallery:NAME or tower:NAME")
        sp.add_argument("--param", action="append", default=[], help="key=value for gallery references")
        sp.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
        sp.add_argument("--samples", type=int, default=None, help=f"sample count (default {samples})")
        sp.add_argument("--tol", type=float, default=1e-9, help="numeric tolerance for identity checks")
        sp.add_argument("--format", choices=("lines", "doc"), default="lines")
        sp.add_argument("--family", choices=("coords", "quad", "full"), default="full")
        sp.add_argument("--convention", choices=CONVENTIONS, default="scalar")
        sp.add_argument("--replay", metavar="FILE", help="re-verify failing witnesses from a report file")
        sp.add_argument("--timing", action="store_true", help="include wall-clock timing (not deterministic)")
        sp.set_defaults(default_samples=samples)
        return sp

    common(sub.add_parser("check", help="FI verifiers, Leibniz rule and point classification"))
    d = common(sub.add_parser("darboux", help="characteristic frame and Darboux chart at points"))
    d.add_argument("--point", action="append", default=[], help="comma separated, e.g. 1,0,0")
    d.add_argument("--chart-tol", dest="tol_chart", type=float, default=1e-6)
    a = common(sub.add_parser("algebroid", help="bracket axioms on seeded forms"))
    a.add_argument("--forms", type=int, default=20, help="number of pairs and of triples")
    t = common(sub.add_parser("tower", help="tower compatibility and stratification"))
    t.add_argument("--chart-tol", dest="tol_chart", type=float, default=1e-6)
    g = sub.add_parser("gallery", help="list built-ins or print the spec of one")
    g.add_argument("name", nargs="?")
    g.add_argument("--param", action="append", default=[])
    g.add_argument("--inline", action="store_true", help="expand to an inline tensor")
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command == "gallery":
        try:
            return _gallery(args)
        except (KeyError, SpecError, UsageError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.seed is None:
        try:
            args.seed = int(os.environ.get(SEED_ENV, "0"))
        except ValueError:
            print(f"error: ${SEED_ENV} must be an integer", file=sys.stderr)
            return 2
    args.samples_given = args.samples is not None
    if args.samples is None:
        args.samples = args.default_samples
    if not hasattr(args, "tol_chart"):
        args.tol_chart = 1e-6
    try:
        spec = load_spec(args.spec, args.param)
        obj = spec.build()
        if args.command == "tower":
            if spec.kind != "tower":
                raise UsageError("tower command needs a tower spec")
        else:
            obj = _structure(spec)
        if args.replay:
            reports = cmd_replay(obj, args.replay, args)
        elif args.command == "check":
            reports = cmd_check(obj, args)
        elif args.command == "darboux":
            pts = [_point(p, obj.n) for p in args.point] or [tuple(Fraction(v) for v in p) for p in spec.points]
            if not pts:
                pts = [tuple(Fraction(c) for c in obj.box.center)]
            for x in pts:
                if not obj.box.contains(x):
                    raise UsageError(f"point {tuple(map(str, x))} is outside the structure box")
            reports = cmd_darboux(obj, pts, args)
        elif args.command == "algebroid":
            reports = cmd_algebroid(obj, args)
        else:
            reports = cmd_tower(obj, args)
    except (SpecError, UsageError, ConfigurationError, ParseError, UnsupportedModeError,
            DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.replay:
        _apply_expectations(reports, spec.expect)
    header = {"command": args.command, "spec": spec.canonical(), "seed": args.seed,
              "flags": {"samples": args.samples, "tol": args.tol, "family": args.family,
                        "convention": args.convention}}
    out.write(render(reports, args.format, header, args.timing))
    return exit_code(reports)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
