import itertools
from fractions import Fraction as F

import pytest

from antiderham.cover import (Cover, Interval, WrappedIntersection, build_bspline_cover, color_cover,
                              color_nerve, nerve)
from antiderham.forms import Domain

LINE = Domain.box([(0, 1)])
BOX = Domain.box([(0, 1), (0, 1)])


def pou_sum(cov):
    total = cov.domain.zero_function()
    for r in cov.pou:
        total = total + r
    return cov.domain.restrict(total)


def product_nonzero(cov, simplex):
    f = cov.pou[simplex[0]]
    for a in simplex[1:]:
        f = f * cov.pou[a]
    return not cov.domain.restrict(f).is_zero()


def brute_force_nerve(cov, top):
    """Tuples whose partition functions overlap on a set of positive measure."""
    out = {}
    for size in range(1, top + 2):
        found = [t for t in itertools.combinations(range(len(cov.charts)), size) if product_nonzero(cov, t)]
        if found:
            out[size - 1] = found
    return out


def test_line_hats_sum_to_one():
    cov = build_bspline_cover(Domain.box([(0, 4)]), 1, 4)
    assert len(cov.charts) == 5
    assert pou_sum(cov) == cov.domain.restrict(cov.domain.constant(1))
    cov.validate()


def test_circle_hats_sum_to_one_everywhere():
    dom = Domain.torus(1)
    cov = build_bspline_cover(dom, 1, 4)
    assert len(cov.charts) == 4
    total = dom.zero_function()
    for r in cov.pou:
        total = total + r
    # no restriction needed: the circle has no outside
    assert total == dom.constant(1)


def test_circle_resolution_too_small_is_rejected():
    with pytest.raises(ValueError, match="wrap"):
        build_bspline_cover(Domain.torus(1), 3, 4)


def test_three_interval_line_nerve():
    cov = build_bspline_cover(LINE, 1, 2)
    nv = nerve(cov)
    assert len(cov.charts) == 3
    assert nv.counts() == [3, 2]
    assert nv.P == 1


def test_two_dimensional_hat_nerve_matches_brute_force():
    cov = build_bspline_cover(BOX, 1, 3)
    nv = nerve(cov)
    assert nv.P == 3
    assert {p: sorted(s) for p, s in nv.simplices.items()} == brute_force_nerve(cov, 4)


def test_torus_nerve_matches_brute_force():
    cov = build_bspline_cover(Domain.torus(2), 1, 3)
    nv = nerve(cov)
    assert {p: sorted(s) for p, s in nv.simplices.items()} == brute_force_nerve(cov, 4)


def test_wrapped_intersection_rejected():
    dom = Domain.torus(1)
    a = Interval(F(0), F(3, 5))
    b = Interval(F(1, 2), F(11, 10))
    rho = build_bspline_cover(dom, 1, 4).pou[:2]
    cov = Cover(dom, ((a,), (b,)), rho)
    with pytest.raises(WrappedIntersection):
        nerve(cov)


def test_explicit_cover_validation():
    dom = LINE
    one = dom.constant(1)
    cov = Cover(dom, ((Interval(F(-1), F(2), True, True),),), (one,))
    cov.validate()
    nv = nerve(cov)
    assert nv.counts() == [1]
    assert color_nerve(nv).count == 1
    bad = Cover(dom, ((Interval(F(-1), F(1, 2), True, False),),), (one,))
    with pytest.raises(ValueError):
        bad.validate()
    half = Cover(dom, ((Interval(F(-1), F(2), True, True),),), (one.scale(F(1, 2)),))
    with pytest.raises(ValueError, match="sum to 1"):
        half.validate()


def assert_proper(cov, col):
    for cls in col.classes:
        for a, b in itertools.combinations(cls, 2):
            assert not product_nonzero(cov, (a, b))


def test_coloring_of_path_cover():
    cov = build_bspline_cover(LINE, 1, 4)
    col = color_nerve(nerve(cov))
    assert col.count == 2
    assert_proper(cov, col)


def test_coloring_of_two_dimensional_hats():
    cov = build_bspline_cover(BOX, 1, 3)
    nv = nerve(cov, max_dim=1)
    col = color_nerve(nv)
    degree = max(len(v) for v in nv.neighbors.values())
    assert col.count <= 4 and col.count <= 1 + degree
    assert sorted(a for cls in col.classes for a in cls) == list(range(len(cov.charts)))
    assert_proper(cov, col)


def test_widened_cover_coloring_separates_widened_charts():
    cov = build_bspline_cover(BOX, 1, 2)
    wide = cov.enlarged(F(1, 8))
    col = color_cover(wide)
    for cls in col.classes:
        for a, b in itertools.combinations(cls, 2):
            ca, cb = wide.charts[a], wide.charts[b]
            assert any(ia.hi <= ib.lo or ib.hi <= ia.lo for ia, ib in zip(ca, cb))
