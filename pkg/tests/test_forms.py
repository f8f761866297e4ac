import random
from fractions import Fraction as F

import pytest

from antiderham.corpus import random_exact_form, random_form, spline_basis
from antiderham.exactpp import bspline, periodize
from antiderham.forms import (Domain, DomainMismatch, Form, NotClosed, PPMap, exterior_derivative, periods,
                              pullback_constant_form, standard_symplectic, wedge)

BOX = Domain.box([(0, 1), (0, 1)])
T2 = Domain.torus(2)


def dx(dom, *idx):
    return Form.basis(dom, idx)


def bump(dom, axis, lo, hi, degree=1):
    b = bspline(degree, interval=(lo, hi))
    if dom.axes[axis].is_circle:
        b = periodize(b, dom.axes[axis].period)
    return b.embed(dom.axes, axis)


def test_d_of_y_dx():
    y = BOX.coordinate(1)
    w = exterior_derivative(Form.basis(BOX, (0,), y))
    assert w == dx(BOX, 0, 1).scale(-1)
    assert w.component((0, 1)) == BOX.constant(-1)


def test_d_squared_on_function():
    f = Form.function(BOX.coordinate(0) * BOX.coordinate(1) * bump(BOX, 0, 0, 1), BOX)
    assert f.d().d().is_zero()


def test_d_product_rule_oracle():
    bx, by = bump(BOX, 0, 0, 1), bump(BOX, 1, 0, 1)
    w = Form.basis(BOX, (0,), bx * by)
    expected = -(bx * by.partial_derivative(1))
    assert w.d().component((0, 1)) == expected


def test_wedge_examples():
    assert wedge(dx(BOX, 0), dx(BOX, 1)) == dx(BOX, 0, 1)
    assert wedge(dx(BOX, 1), dx(BOX, 0)) == dx(BOX, 0, 1).scale(-1)
    a = Form.basis(BOX, (0,), BOX.coordinate(0)) + Form.basis(BOX, (1,), BOX.coordinate(1))
    assert wedge(a, a).is_zero()
    x, y = BOX.coordinate(0), BOX.coordinate(1)
    assert wedge(Form.basis(BOX, (0,), x), Form.basis(BOX, (1,), y)) == Form.basis(BOX, (0, 1), x * y)
    with pytest.raises(DomainMismatch):
        wedge(dx(BOX, 0), dx(T2, 0))


def test_graded_commutativity_and_leibniz():
    rng = random.Random(3)
    dom = Domain.box([(0, 1), (0, 1), (0, 1)])
    basis = spline_basis(dom, 1, 2)
    for p, q in [(0, 1), (1, 1), (1, 2), (0, 2)]:
        a, b = random_form(dom, p, rng, basis), random_form(dom, q, rng, basis)
        assert wedge(a, b) == wedge(b, a).scale((-1) ** (p * q))
        assert wedge(a, b).d() == wedge(a.d(), b) + wedge(a, b.d()).scale((-1) ** p)


def test_d_squared_randomized():
    rng = random.Random(5)
    for dom in (BOX, T2, Domain.box([(0, 1), (0, 2)], parameters=[(0, 1)])):
        basis = spline_basis(dom, 2, 5)
        for q in (0, 1):
            assert random_form(dom, q, rng, basis).d().d().is_zero()


def test_pullback_identity_maps():
    phi = PPMap(BOX, (BOX.coordinate(0), BOX.coordinate(1)))
    assert pullback_constant_form(phi, standard_symplectic(2)) == dx(BOX, 0, 1)
    zero = BOX.zero_function()
    phi4 = PPMap(BOX, (BOX.coordinate(0), BOX.coordinate(1), zero, zero))
    assert pullback_constant_form(phi4, standard_symplectic(4)) == dx(BOX, 0, 1)
    with pytest.raises(ValueError):
        pullback_constant_form(phi4, standard_symplectic(2))


def test_pullback_with_appended_pair_matches_expansion():
    x, y = BOX.coordinate(0), BOX.coordinate(1)
    h = bump(BOX, 0, 0, 1, 2) * y
    t = x * x + bump(BOX, 1, F(1, 4), 1)
    phi = PPMap(BOX, (x, y, h, t))
    got = pullback_constant_form(phi, standard_symplectic(4))
    # dh ^ dt = (h_x t_y - h_y t_x) dx ^ dy
    coeff = (h.partial_derivative(0) * t.partial_derivative(1)
             - h.partial_derivative(1) * t.partial_derivative(0))
    assert got == Form.basis(BOX, (0, 1), BOX.constant(1) + coeff)
    assert got.d().is_zero()


def test_periods():
    assert periods(dx(T2, 0, 1), (0, 1), {}) == 1
    rng = random.Random(11)
    w, _ = random_exact_form(T2, 2, rng, spline_basis(T2, 2, 5))
    assert periods(w, (0, 1), {}) == 0


def test_period_of_bump_corrected_area_form():
    b = bump(T2, 0, 0, 1, 3) * bump(T2, 1, 0, 1, 3)
    one_dim = bspline(3, interval=(0, 1)).integral()
    c = one_dim * one_dim
    w = Form.basis(T2, (0, 1), T2.constant(1) + b - T2.constant(c))
    assert c == F(1, 16)
    assert periods(w, (0, 1), {}) == 1


def test_periods_reject_non_closed_and_bad_axes():
    dom = Domain.torus(3)
    w = Form.basis(dom, (0, 1), bump(dom, 2, 0, F(1, 2)))
    with pytest.raises(NotClosed):
        periods(w, (0, 1), {2: 0})
    with pytest.raises(ValueError):
        periods(dx(BOX, 0, 1), (0, 1), {})


def test_form_round_trip():
    rng = random.Random(2)
    w = random_form(T2, 1, rng, spline_basis(T2, 2, 5))
    s = w.dumps()
    assert Form.loads(s) == w
    assert Form.loads(s).dumps() == s
