"""Command-line front end.

Exit codes: 0 success, 2 mathematical negative certificate (not exact,
identity failure), 64 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from importlib import resources

import jsonschema

from .antidiff import NotExact, build_splitting, is_exact, primitive_result
from .cechdr import CechDeRham
from .cover import Cover, Interval, WrappedIntersection, build_bspline_cover, nerve
from .exactpp import AxisMismatch, PPFunction, bspline, fraction_str, periodize, rational
from .forms import Domain, Form, NotClosed, PPMap, periods, pullback_constant_form, standard_symplectic

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_INPUT = 64


class InputError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("antiderham").joinpath("spec_schema.json").read_text())


# -- problem-file parsing ----------------------------------------------------

def parse_domain(d: dict) -> Domain:
    params = [tuple(rational(x) for x in b) for b in d.get("parameters", [])]
    if d["kind"] == "box":
        if "bounds" not in d:
            raise InputError("box domain needs 'bounds'")
        return Domain.box([tuple(rational(x) for x in b) for b in d["bounds"]], params)
    if "n" not in d:
        raise InputError("torus domain needs 'n'")
    return Domain.torus(d["n"], rational(d.get("period", 1)), params)


def parse_function(e, dom: Domain) -> PPFunction:
    if isinstance(e, (int, str)):
        return dom.constant(rational(e))
    if "coord" in e:
        if not 0 <= e["coord"] < dom.ndim:
            raise InputError("coordinate %d out of range" % e["coord"])
        if dom.axes[e["coord"]].is_circle:
            raise InputError("a circle coordinate is not a function; use a periodic spline")
        return dom.coordinate(e["coord"])
    if "poly" in e:
        terms = {}
        for coef, exps in e["poly"]:
            if len(exps) != dom.ndim:
                raise InputError("monomial exponent list must have %d entries" % dom.ndim)
            terms[tuple(exps)] = terms.get(tuple(exps), 0) + rational(coef)
        if any(dom.axes[a].is_circle and any(k[a] for k in terms) for a in range(dom.ndim)):
            raise InputError("polynomials may not depend on circle coordinates")
        return PPFunction.polynomial(dom.axes, terms)
    if "bspline" in e:
        b = e["bspline"]
        axis = b["axis"]
        if not 0 <= axis < dom.ndim:
            raise InputError("bspline axis %d out of range" % axis)
        f = bspline(b["degree"], knots=b.get("knots"), interval=b.get("interval"),
                    normalize=b.get("normalize", "unity"))
        if dom.axes[axis].is_circle:
            f = periodize(f, dom.axes[axis].period)
        return f.embed(dom.axes, axis)
    if "mul" in e:
        out = parse_function(e["mul"][0], dom)
        for x in e["mul"][1:]:
            out = out * parse_function(x, dom)
        return out
    if "add" in e:
        out = parse_function(e["add"][0], dom)
        for x in e["add"][1:]:
            out = out + parse_function(x, dom)
        return out
    if "scale" in e:
        return parse_function(e["scale"][1], dom).scale(rational(e["scale"][0]))
    if "pp" in e:
        f = PPFunction.from_dict(e["pp"])
        dom.check(f)
        return f
    raise InputError("unknown function expression %r" % (e,))


def parse_form(e, dom: Domain, fmap: PPMap | None = None) -> Form:
    if "d" in e:
        return parse_form(e["d"], dom, fmap).d()
    if "add" in e:
        forms = [parse_form(x, dom, fmap) for x in e["add"]]
        out = forms[0]
        for f in forms[1:]:
            out = out + f
        return out
    if "pullback_standard" in e:
        if fmap is None:
            raise InputError("'pullback_standard' needs a map block")
        return pullback_constant_form(fmap, standard_symplectic(fmap.D))
    comps = {}
    for c in e["components"]:
        idx = tuple(c["index"])
        f = parse_function(c["coefficient"], dom)
        comps[idx] = comps[idx] + f if idx in comps else f
    out = Form.zero(dom, e["degree"])
    for idx, f in comps.items():
        out = out + Form.basis(dom, idx, f)
    return out


def parse_cover(c: dict, dom: Domain) -> Cover:
    if "charts" in c:
        charts = []
        for box in c["charts"]:
            if len(box) != dom.n:
                raise InputError("each chart needs one interval per manifold axis")
            charts.append(tuple(Interval(rational(iv["lo"]), rational(iv["hi"]),
                                         bool(iv.get("closed_lo", False)),
                                         bool(iv.get("closed_hi", False))) for iv in box))
        pou = [parse_function(f, dom) for f in c.get("pou", [])]
        cov = Cover(dom, tuple(charts), tuple(pou))
        cov.validate()
        return cov
    if "degree" not in c or "resolution" not in c:
        raise InputError("cover needs 'degree' and 'resolution' or explicit 'charts'")
    return build_bspline_cover(dom, c["degree"], c["resolution"])


def parse_relative(r: dict, dom: Domain) -> dict:
    def boxes(b):
        out = {}
        for k, v in b.items():
            a = int(k)
            if a not in dom.parameter_axes:
                raise InputError("relative data refers to axis %d, which is not a parameter" % a)
            out[a] = tuple(rational(x) for x in v)
        return out
    return {"B": boxes(r["B"]), "U": boxes(r["U"])}


# -- commands -----------------------------------------------------------------

def _complex(spec, dom, parallel):
    if "cover" not in spec:
        raise InputError("this command needs a 'cover' block")
    cov = parse_cover(spec["cover"], dom)
    nv = nerve(cov, max_dim=dom.n)
    return CechDeRham(nv, parallel=parallel), build_splitting(nv, degrees=())


def cmd_primitive(spec, args) -> tuple[int, dict]:
    dom = parse_domain(spec["domain"])
    omega = parse_form(_need(spec, "form"), dom)
    cx, sp = _complex(spec, dom, args.parallel)
    try:
        res = primitive_result(omega, cx, sp)
    except NotExact as exc:
        return EXIT_NEGATIVE, {"status": "NOT_EXACT", "certificate": exc.certificate.to_dict()}
    return EXIT_OK, {"status": "EXACT_OK" if res.verified else "CHECK_FAILED",
                     "check": "d(primitive) == form", "verified": res.verified,
                     "primitive": res.beta.coarsen().to_dict()}


def cmd_check_exact(spec, args) -> tuple[int, dict]:
    dom = parse_domain(spec["domain"])
    omega = parse_form(_need(spec, "form"), dom)
    cx, sp = _complex(spec, dom, args.parallel)
    status, cert = is_exact(omega, cx, sp)
    return (EXIT_OK if status == "exact" else EXIT_NEGATIVE), cert.to_dict()


def cmd_periods(spec, args) -> tuple[int, dict]:
    dom = parse_domain(spec["domain"])
    omega = parse_form(_need(spec, "form"), dom)
    p = _need(spec, "periods")
    base = {int(k): rational(v) for k, v in p.get("basepoint", {}).items()}
    for a in range(dom.ndim):
        base.setdefault(a, Fraction(0))
    value = periods(omega, tuple(p["cycle"]), base)
    return EXIT_OK, {"cycle": list(p["cycle"]), "period": fraction_str(value)}


def cmd_embed(spec, args) -> tuple[int, dict]:
    from .embedder import lift_family
    dom = parse_domain(spec["domain"])
    m = _need(spec, "map")
    f0 = PPMap(dom, tuple(parse_function(c, dom) for c in m["coordinates"]),
               bool(m.get("declared_embedding", False)))
    if not f0.declared_embedding:
        raise InputError("the map must be declared an embedding")
    if f0.D % 2:
        raise InputError("the map must land in an even-dimensional space")
    target = parse_form(_need(spec, "form"), dom, f0)
    if target.degree != 2:
        raise InputError("the target form must have degree 2")
    cx, sp = _complex(spec, dom, args.parallel)
    rel = parse_relative(spec["relative"], dom) if "relative" in spec else None
    try:
        res = lift_family(f0, target, cx.cover, rel, sp, cx)
    except NotExact as exc:
        return EXIT_NEGATIVE, {"status": "NOT_EXACT", "certificate": exc.certificate.to_dict()}
    rep = res.report
    checks = [rep["endpoint_identity"], rep["target_identity"], rep["homotopy_identity"]]
    if rep.get("relative_vanishing") is not None:
        checks.append(rep["relative_vanishing"])
    ok = all(checks)
    return (EXIT_OK if ok else EXIT_NEGATIVE), {
        "status": "IDENTITY_OK" if ok else "IDENTITY_FAILED",
        "report": rep,
        "g": res.g.to_dict(),
        "homotopy": {"domain": res.homotopy.domain.to_dict(), "map": res.homotopy.to_dict()},
        "eta": res.eta.coarsen().to_dict(),
    }


def cmd_twist(spec, args) -> tuple[int, dict]:
    from .embedder import twist_map
    t = _need(spec, "twist")
    tm = twist_map(t.get("N"), float(t["R"]), float(t["r"]), grid=t.get("grid", 100))
    rep = tm.report
    ok = rep["max_abs_detJ_minus_1"] <= 1e-9 and rep["image_inside_target"]
    return (EXIT_OK if ok else EXIT_NEGATIVE), rep


def cmd_selftest(args) -> tuple[int, dict]:
    from .selftest import CechDeRham as Base, SignFlipComplex, run_selftest
    cls = SignFlipComplex if args.inject_fault == "sign-flip" else Base
    results = run_selftest(seed=args.seed, count=args.count, complex_class=cls,
                           parallel=args.parallel)
    ok = all(r.ok for r in results)
    return (EXIT_OK if ok else EXIT_NEGATIVE), {
        "seed": args.seed,
        "count": args.count,
        "identities": [{"name": r.name, "passed": r.passed, "failed": r.failed,
                        "status": "pass" if r.ok else "fail"} for r in results],
        "status": "pass" if ok else "fail",
    }


def _need(spec, key):
    if key not in spec:
        raise InputError("this command needs a '%s' block" % key)
    return spec[key]


COMMANDS = {
    "primitive": cmd_primitive,
    "check-exact": cmd_check_exact,
    "embed": cmd_embed,
    "periods": cmd_periods,
    "twist": cmd_twist,
}


# -- output -------------------------------------------------------------------

def render_text(command: str, code: int, payload: dict) -> str:
    lines = ["command: %s" % command, "exit: %d" % code]
    for key in ("status", "check", "verified", "period", "cycle"):
        if key in payload and not isinstance(payload[key], dict):
            lines.append("%s: %s" % (key, payload[key]))
    if isinstance(payload.get("cycle"), dict):
        lines.append("cycle entries: %d" % len(payload["cycle"]["entries"]))
    if "identities" in payload:
        for r in payload["identities"]:
            lines.append("%-16s %s (%d passed, %d failed)" % (r["name"], r["status"],
                                                              r["passed"], r["failed"]))
    if "report" in payload:
        for k, v in payload["report"].items():
            lines.append("%s: %s" % (k, v))
    if "certificate" in payload:
        cert = payload["certificate"]
        lines.append("certificate: %s" % cert.get("status"))
        if "periods" in cert:
            lines.append("periods: %s" % cert["periods"])
    if "periods" in payload and "status" in payload:
        lines.append("periods: %s" % payload["periods"])
    if "max_abs_detJ_minus_1" in payload:
        for k, v in payload.items():
            lines.append("%s: %s" % (k, v))
    if "error" in payload:
        lines.append("error: %s" % payload["error"])
        for d in payload.get("diagnostics", []):
            lines.append("  %s" % d)
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="antiderham",
                                 description="Exact anti-differential and symplectic embedding tools.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("primitive", "check-exact", "embed", "periods", "twist", "selftest"):
        p = sub.add_parser(name)
        p.add_argument("--spec", required=name != "selftest", help="problem file (JSON)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--parallel", type=int, default=1, help="worker threads over simplices")
        p.add_argument("--report", choices=("json", "text"), default="json")
        if name == "selftest":
            p.add_argument("--count", type=int, default=30, help="instances per identity")
            p.add_argument("--inject-fault", choices=("sign-flip",), default=None,
                           help=argparse.SUPPRESS)
    return ap


def _load_spec(path: str) -> dict:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise InputError("invalid JSON in %s: %s" % (path, exc)) from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(spec), key=lambda e: list(e.path))
    if errors:
        err = InputError("problem file does not match the schema")
        err.diagnostics = ["%s: %s" % ("/".join(map(str, e.path)) or "<root>", e.message)
                           for e in errors]
        raise err
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command == "selftest":
            code, payload = cmd_selftest(args)
        else:
            spec = _load_spec(args.spec)
            if spec["task"]["command"] != args.command:
                raise InputError("problem file is for '%s', not '%s'"
                                 % (spec["task"]["command"], args.command))
            code, payload = COMMANDS[args.command](spec, args)
    except InputError as exc:
        code, payload = EXIT_INPUT, {"status": "INPUT_ERROR", "error": str(exc),
                                     "diagnostics": getattr(exc, "diagnostics", [])}
    except (NotClosed, AxisMismatch, WrappedIntersection, ValueError, KeyError, TypeError) as exc:
        code, payload = EXIT_INPUT, {"status": "INPUT_ERROR", "error": "%s: %s"
                                     % (type(exc).__name__, exc), "diagnostics": []}
    if args.report == "json":
        text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    else:
        text = render_text(args.command, code, payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print("%s finished in %.3f s (exit %d)" % (args.command, time.perf_counter() - t0, code),
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
