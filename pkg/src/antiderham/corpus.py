"""Seeded random instances: continuous pp functions, forms and cochains."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .cechdr import CechCochain, CechDeRham
from .cover import build_bspline_cover
from .exactpp import PPFunction
from .forms import Domain, Form


def random_rational(rng: random.Random, size: int = 9, den: int = 6) -> Fraction:
    return Fraction(rng.randint(-size, size), rng.randint(1, den))


def spline_basis(domain: Domain, degree: int, resolution) -> list[PPFunction]:
    """Tensor B-splines on the manifold axes (continuous, periodic on circles)."""
    return list(build_bspline_cover(domain, degree, resolution).pou)


def _parameter_factor(domain: Domain, rng: random.Random) -> PPFunction:
    f = domain.constant(random_rational(rng))
    for a in sorted(domain.parameter_axes):
        f = f + domain.coordinate(a).scale(random_rational(rng))
    return f


def random_function(domain: Domain, rng: random.Random, basis, terms: int = 3,
                    linear: bool = True) -> PPFunction:
    """Random combination of basis functions, optionally times linear factors.

    Linear factors only use line axes, so the result stays continuous and
    periodic.
    """
    f = domain.zero_function()
    lines = [a for a in domain.manifold_axes if not domain.axes[a].is_circle]
    for _ in range(terms):
        g = basis[rng.randrange(len(basis))].scale(random_rational(rng))
        if linear and lines and rng.random() < 0.5:
            a = rng.choice(lines)
            g = g * (domain.coordinate(a) + domain.constant(random_rational(rng)))
        if domain.parameter_axes:
            g = g * _parameter_factor(domain, rng)
        f = f + g
    return domain.restrict(f)


def random_form(domain: Domain, degree: int, rng: random.Random, basis, terms: int = 2) -> Form:
    comps = {}
    for idx in itertools.combinations(domain.manifold_axes, degree):
        comps[idx] = random_function(domain, rng, basis, terms)
    return Form(domain, degree, comps)


def random_exact_form(domain: Domain, degree: int, rng: random.Random, basis,
                      terms: int = 2) -> tuple[Form, Form]:
    """``(d beta, beta)`` for a random continuous ``(degree-1)``-form ``beta``."""
    beta = random_form(domain, degree - 1, rng, basis, terms)
    return beta.d(), beta


def random_cochain(cx: CechDeRham, p: int, q: int, rng: random.Random,
                   density: float = 0.6) -> CechCochain:
    """Random cochain whose entries are supported in their intersections.

    Form entries are ``prod_{a in s} rho_a`` times random polynomial
    coefficients; row ``n + 1`` entries are random rationals (times a random
    affine function of the parameters).
    """
    dom = cx.domain
    if p == -1:
        basis = list(cx.rho)
        return cx.augmentation(random_form(dom, q, rng, basis))
    simplices = cx.nerve.of_dim(p)
    if q == cx.n + 1:
        simplices = [s for s in simplices if cx.is_interior(s)]
    entries = {}
    lines = [a for a in cx.man if not dom.axes[a].is_circle]
    for s in simplices:
        if rng.random() > density:
            continue
        if q == cx.n + 1:
            v = dom.constant(random_rational(rng))
            if dom.parameter_axes:
                v = v * _parameter_factor(dom, rng)
            entries[s] = v
            continue
        base = cx.rho[s[0]]
        for a in s[1:]:
            base = base * cx.rho[a]
        comps = {}
        for idx in itertools.combinations(cx.man, q):
            g = dom.constant(random_rational(rng))
            if lines and rng.random() < 0.5:
                g = g + dom.coordinate(rng.choice(lines)).scale(random_rational(rng))
            if dom.parameter_axes:
                g = g * _parameter_factor(dom, rng)
            comps[idx] = base * g
        entries[s] = Form(dom, q, comps)
    return CechCochain(cx, p, q, entries)
