import json
import random
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

from antiderham.antidiff import build_splitting, is_exact, primitive, primitive_family, primitive_result
from antiderham.cechdr import CechDeRham
from antiderham.cli import main
from antiderham.corpus import random_exact_form, random_form, random_rational, spline_basis
from antiderham.cover import build_bspline_cover, nerve
from antiderham.embedder import lift_family, twist_map
from antiderham.exactpp import bspline, periodize
from antiderham.forms import Domain, Form, PPMap, periods, pullback_constant_form, standard_symplectic
from antiderham.selftest import run_selftest

EXAMPLES = Path(__file__).resolve().parent.parent / "docs" / "examples"

BOX2 = Domain.box([(0, 1), (0, 1)])
BOX3 = Domain.box([(0, 1), (0, 1), (0, 1)])
T2 = Domain.torus(2)
FAM = Domain.box([(0, 1), (0, 1)], parameters=[(0, 1)])

# (domain, cover degree, resolution, basis degree, basis resolution, instances per k)
CORPUS = [
    (BOX2, 2, 3, 1, 3, 10),
    (BOX2, 3, 4, 2, 3, 4),
    (T2, 2, 5, 1, 3, 10),
    (T2, 1, 3, 2, 5, 4),
    (BOX3, 1, 3, 1, 2, 2),
]


def setup(dom, degree, res):
    nv = nerve(build_bspline_cover(dom, degree, res), max_dim=dom.n)
    return CechDeRham(nv), build_splitting(nv)


@pytest.fixture(scope="module")
def corpus():
    rng = random.Random(2024)
    runs = []
    for dom, d, R, bd, bR, per_k in CORPUS:
        cx, sp = setup(dom, d, R)
        basis = spline_basis(dom, bd, bR)
        for k in (1, 2):
            for _ in range(per_k):
                w, _ = random_exact_form(dom, k, rng, basis)
                t0 = time.perf_counter()
                res = primitive_result(w, cx, sp)
                runs.append((dom, k, cx, w, res, time.perf_counter() - t0))
    return runs


def test_criterion_1_primitive_is_exact(corpus, record):
    ok = all(res.beta.d() == w for _, _, _, w, res, _ in corpus)
    slow2 = max(t for dom, _, _, _, _, t in corpus if dom.n == 2)
    slow3 = max(t for dom, _, _, _, _, t in corpus if dom.n == 3)
    kinds = {(dom.n, dom.axes[0].is_circle, k) for dom, k, *_ in corpus}
    ok = ok and len(corpus) >= 50 and len(kinds) == 6 and slow2 <= 5 and slow3 <= 60
    record(1, ok, "%d forms, d(beta) == omega exactly; slowest 2D %.2f s, 3D %.2f s"
           % (len(corpus), slow2, slow3))
    assert ok


def test_criterion_2_linearity(record):
    rng = random.Random(7)
    pairs = 0
    ok = True
    for dom, d, R, bd, bR, count in [(BOX2, 2, 3, 1, 3, 12), (T2, 1, 3, 1, 3, 8)]:
        cx, sp = setup(dom, d, R)
        basis = spline_basis(dom, bd, bR)
        for i in range(count):
            k = 1 + i % 2
            w1, _ = random_exact_form(dom, k, rng, basis)
            w2, _ = random_exact_form(dom, k, rng, basis)
            a, b = random_rational(rng), random_rational(rng)
            lhs = primitive(w1.scale(a) + w2.scale(b), cx, sp)
            ok = ok and lhs == primitive(w1, cx, sp).scale(a) + primitive(w2, cx, sp).scale(b)
            pairs += 1
    record(2, ok and pairs >= 20, "%d pairs, exact equality" % pairs)
    assert ok and pairs >= 20


def test_criterion_3_structural_identities(record):
    results = run_selftest(seed=0, count=30)
    ok = all(r.ok and r.passed >= 30 for r in results)
    record(3, ok, ", ".join("%s %d/%d" % (r.name, r.passed, r.passed + r.failed) for r in results))
    assert ok


def test_criterion_4_edge_maps(corpus, record):
    ok = all(cx.D(res.gamma).is_zero() and cx.S(res.gamma) == w for _, _, cx, w, res, _ in corpus)
    record(4, ok, "D(gamma) = 0 and S(gamma) = omega on %d instances" % len(corpus))
    assert ok


def test_criterion_5_exactness_detection(record):
    cx, sp = setup(T2, 1, 3)
    status, cert = is_exact(Form.basis(T2, (0, 1)), cx, sp)
    area_ok = status == "not_exact" and cert.periods == {"0,1": 1}

    rng = random.Random(5)
    basis = spline_basis(T2, 1, 3)
    witness_ok = True
    agree = 0
    total = 24
    for i in range(total):
        w, _ = random_exact_form(T2, 2, rng, basis)
        c = F(0) if i % 2 == 0 else random_rational(rng) or F(1)
        w = w + Form.basis(T2, (0, 1)).scale(c)
        status, cert = is_exact(w, cx, sp)
        if status == "exact":
            witness_ok = witness_ok and cx.d_h(cert.witness) == cert.cycle
        period = periods(w, (0, 1), {})
        agree += ((status == "exact") == (period == 0)) and period == c
    ok = area_ok and witness_ok and agree == total
    record(5, ok, "area form period 1; witnesses verified; %d/%d torus forms agree with periods"
           % (agree, total))
    assert ok


def torus_embedding():
    hats = [periodize(bspline(1, interval=(F(j, 3), F(j + 2, 3))), 1) for j in range(3)]
    return PPMap(T2, tuple([h.embed(T2.axes, 0) for h in hats] + [h.embed(T2.axes, 1) for h in hats]), True)


def test_criterion_6_embedding_identities(record):
    rng = random.Random(6)
    cases = []
    box_cov = build_bspline_cover(BOX2, 1, 2)
    box_f = PPMap(BOX2, (BOX2.coordinate(0), BOX2.coordinate(1)), True)
    for _ in range(5):
        alpha = random_form(BOX2, 1, rng, spline_basis(BOX2, 1, 2))
        target = pullback_constant_form(box_f, standard_symplectic(2)) + alpha.d()
        cases.append(lift_family(box_f, target, box_cov))
    tor_cov = build_bspline_cover(T2, 1, 3)
    tor_f = torus_embedding()
    for _ in range(5):
        alpha = random_form(T2, 1, rng, spline_basis(T2, 1, 3))
        target = pullback_constant_form(tor_f, standard_symplectic(6)) + alpha.d()
        cases.append(lift_family(tor_f, target, tor_cov))
    fam_cov = build_bspline_cover(FAM, 1, 2)
    fam_f = PPMap(FAM, (FAM.coordinate(0), FAM.coordinate(1)), True)
    lam = bspline(1, knots=(F(1, 4), 1, 2)).embed(FAM.axes, 2)
    rel = {"B": {2: (0, F(1, 8))}, "U": {2: (0, F(1, 4))}}
    for _ in range(2):
        alpha = random_form(FAM, 1, rng, spline_basis(FAM, 1, 2))
        target = pullback_constant_form(fam_f, standard_symplectic(2)) + alpha.d().times(lam)
        cases.append(lift_family(fam_f, target, fam_cov, rel))
    ok = True
    for res in cases:
        rep = res.report
        n = res.g.domain.n
        ok = ok and rep["target_identity"] and rep["endpoint_identity"] and rep["homotopy_identity"]
        ok = ok and rep["target_dimension"] == 2 * rep["N"] + 2 * n * rep["colors"]
        if rep["relative_vanishing"] is not None:
            ok = ok and rep["relative_vanishing"]
    relative = sum(res.report["relative_vanishing"] is not None for res in cases)
    ok = ok and len(cases) >= 10 and relative >= 1
    record(6, ok, "%d embeddings (box, torus, %d with relative data): target, s^2 and dimension identities"
           % (len(cases), relative))
    assert ok


def test_criterion_7_parametric_locality(record):
    rng = random.Random(70)
    cov = build_bspline_cover(FAM, 1, 2)
    nv = nerve(cov, max_dim=FAM.n)
    cx, sp = CechDeRham(nv), build_splitting(nv)
    f = PPMap(FAM, (FAM.coordinate(0), FAM.coordinate(1)), True)
    quarter = bspline(1, knots=(F(1, 4), 1, 2)).embed(FAM.axes, 2)
    basis = spline_basis(FAM, 1, 2)
    low = lambda g, hi: FAM.restrict(g).restrict(2, 0, hi).is_zero()
    ok = True
    for k in (1, 2):
        for _ in range(3):
            w = random_form(FAM, k - 1, rng, basis).times(quarter).d()
            eta = primitive_family(w, cx, sp)
            ok = ok and eta.d() == w and all(low(c, F(1, 4)) for c in eta.components.values())
    for _ in range(3):
        alpha = random_form(FAM, 1, rng, basis).times(quarter)
        target = pullback_constant_form(f, standard_symplectic(2)) + alpha.d()
        res = lift_family(f, target, cov, {"B": {2: (0, F(1, 8))}, "U": {2: (0, F(1, 4))}}, sp, cx)
        ok = ok and res.report["target_identity"] and res.report["eta_vanishes_on_U"]
        ok = ok and all(low(c, F(1, 4)) for c in res.eta.components.values())
        # h = rho * eta vanishes wherever eta does; every appended coordinate vanishes on B
        ok = ok and all(low(h, F(1, 4)) for h in res.g.coordinates[2::2])
        ok = ok and all(low(c, F(1, 8)) for c in res.g.coordinates[2:])
    record(7, ok, "eta vanishes for z <= 1/4; appended coordinates vanish on B = [0, 1/8]")
    assert ok


def test_criterion_8_twist_map(record):
    tm = twist_map(None, 1.0, 0.5, grid=100)
    rep = tm.report
    ok = (rep["max_abs_detJ_minus_1"] <= 1e-9 and rep["max_image_radius"] <= 0.5
          and rep["origin_image"] == [0.0, 0.0] and "constant" in rep
          and "area_factor_with_constant_N" in rep)
    record(8, ok, "N=%d, |detJ-1| <= %.1e, radius %.4f <= 0.5, constant sqrt(N+1)=%.4f"
           % (rep["N"], rep["max_abs_detJ_minus_1"], rep["max_image_radius"], rep["constant"]))
    assert ok


RERUNS = [
    ("primitive", "box_exact_2form.json"),
    ("primitive", "torus_area_form.json"),
    ("check-exact", "torus_check_exact.json"),
    ("periods", "torus_periods.json"),
    ("embed", "embed_box.json"),
    ("embed", "embed_family.json"),
    ("twist", "twist.json"),
    ("primitive", "malformed.json"),
]


def test_criterion_9_determinism(tmp_path, record):
    ok = True
    for cmd, name in RERUNS:
        outs = []
        for i in range(2):
            out = tmp_path / ("%s_%d" % (name, i))
            main([cmd, "--spec", str(EXAMPLES / name), "--seed", "3", "--out", str(out)])
            outs.append(out.read_bytes())
        ok = ok and outs[0] == outs[1]
    outs = []
    for i in range(2):
        out = tmp_path / ("selftest_%d" % i)
        main(["selftest", "--seed", "3", "--count", "5", "--out", str(out)])
        outs.append(out.read_bytes())
    ok = ok and outs[0] == outs[1]
    record(9, ok, "%d CLI runs repeated with identical bytes" % (len(RERUNS) + 1))
    assert ok
