"""Realize a closed 2-form by appending coordinate pairs to a map into R^2N.

Given ``f: A x M -> R^2N`` and a family ``g(z)`` of closed 2-forms with
``g(z) - f*omega_std = d eta(z)`` exact, every chart ``alpha`` and manifold
direction ``r`` contributes

    h^r_alpha = rho_alpha * eta_r,     t^r_alpha = (1 - psi) * phi_alpha * s^r,

where ``phi_alpha`` is a plateau equal to 1 on the chart and supported in
the widened chart ``W_alpha`` and ``s^r`` is the chart-local coordinate.
Since ``phi_alpha = 1`` on ``supp rho_alpha`` and ``psi`` depends on the
parameters only, ``sum dh ^ dt = (1 - psi) d eta``, which is ``d eta``
because ``d eta`` vanishes wherever ``psi`` does not.  Charts whose widened
supports are disjoint share one coordinate pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .antidiff import CechSplitting, primitive_family, primitive
from .cechdr import CechDeRham
from .cover import Coloring, Cover, Interval, color_cover, nerve
from .exactpp import AxisSpec, PPFunction, bspline, fraction_str, periodize, rational
from .forms import Domain, Form, PPMap, pullback_constant_form, standard_symplectic


class RelativeDataError(ValueError):
    """The relative data (B, U, psi) is incompatible with the input."""


# -- cutoffs ------------------------------------------------------------------

def plateau_1d(lo, hi, margin, ramp_degree: int = 1) -> PPFunction:
    """1 on ``[lo, hi]``, 0 outside ``[lo - margin, hi + margin]`` (line axis)."""
    lo, hi, margin = rational(lo), rational(hi), rational(margin)
    if margin <= 0:
        raise ValueError("plateau margin must be positive")
    up = bspline(ramp_degree, interval=(lo - margin, lo), normalize="mass").cumulative_integral(0)
    down = bspline(ramp_degree, interval=(hi, hi + margin), normalize="mass").cumulative_integral(0)
    return (up - down).coarsen()


def chart_cutoff(domain: Domain, box: tuple, margin) -> PPFunction:
    """Plateau over the manifold axes: 1 on the chart box, 0 outside its widening."""
    f = domain.constant(1)
    for pos, axis in enumerate(domain.manifold_axes):
        f = f * _axis_plateau(domain, axis, box[pos], margin)
    return domain.restrict(f)


def _axis_plateau(domain: Domain, axis: int, iv: Interval, margin) -> PPFunction:
    spec = domain.axes[axis]
    p = plateau_1d(iv.lo, iv.hi, margin)
    if spec.is_circle:
        p = periodize(p, spec.period)
    return p.embed(domain.axes, axis)


def _axis_lift(domain: Domain, axis: int, iv: Interval, margin) -> PPFunction:
    """Chart-local coordinate times the axis plateau (periodized on circles)."""
    spec = domain.axes[axis]
    p = plateau_1d(iv.lo, iv.hi, margin)
    x = PPFunction.coordinate([AxisSpec.line()], 0)
    p = (p * x).coarsen()
    if spec.is_circle:
        p = periodize(p, spec.period)
    return p.embed(domain.axes, axis)


def relative_cutoff(domain: Domain, B, U) -> PPFunction:
    """``psi`` on the parameters: 1 on the box ``B``, 0 outside the box ``U``.

    ``B`` and ``U`` map parameter axes to ``(lo, hi)``; ``U`` must contain
    ``B`` with a positive margin on every side that lies inside the domain.
    """
    psi = domain.constant(1)
    for a in sorted(domain.parameter_axes):
        dlo, dhi = domain.bounds[a]
        blo, bhi = (rational(t) for t in B.get(a, (dlo, dhi)))
        ulo, uhi = (rational(t) for t in U.get(a, (dlo, dhi)))
        if not (ulo <= blo <= bhi <= uhi):
            raise RelativeDataError("U must contain B along parameter axis %d" % a)
        left = blo - ulo if blo > dlo else Fraction(1)
        right = uhi - bhi if bhi < dhi else Fraction(1)
        if left <= 0 or right <= 0:
            raise RelativeDataError("B must lie in the interior of U along parameter axis %d" % a)
        up = bspline(1, interval=(blo - left, blo), normalize="mass").cumulative_integral(0)
        down = bspline(1, interval=(bhi, bhi + right), normalize="mass").cumulative_integral(0)
        psi = psi * (up - down).coarsen().embed(domain.axes, a)
    return domain.restrict(psi)


def restrict_parameters(domain: Domain, f: PPFunction, box: dict) -> PPFunction:
    for a, (lo, hi) in box.items():
        f = f.restrict(a, lo, hi)
    return f


# -- decomposition ------------------------------------------------------------

@dataclass
class PairDecomposition:
    """Per-chart pairs ``(h^r_alpha, t^r_alpha)`` and their color-grouped sums."""

    domain: Domain
    coloring: Coloring
    chart_pairs: dict        # (alpha, r) -> (h, t)
    pairs: dict              # (m, r) -> (h, t)
    cutoffs: tuple           # phi_alpha
    psi: PPFunction
    margin: Fraction
    widened: Cover | None = None

    @property
    def colors(self) -> int:
        return self.coloring.count

    def ordered_pairs(self) -> list[tuple]:
        """``[(m, r, h, t)]`` in coordinate order (color-major)."""
        out = []
        for m in range(self.colors):
            for r in self.domain.manifold_axes:
                h, t = self.pairs[(m, r)]
                out.append((m, r, h, t))
        return out

    def pair_form(self) -> Form:
        """``sum_(m,r) dh ^ dt``."""
        out = Form.zero(self.domain, 2)
        for _, _, h, t in self.ordered_pairs():
            out = out + Form.function(h, self.domain).d().wedge(Form.function(t, self.domain).d())
        return out


def default_margin(cover: Cover) -> Fraction:
    """A quarter of the shortest chart side, shrunk further so circle charts do not wrap."""
    dom = cover.domain
    m = None
    for box in cover.charts:
        for pos, axis in enumerate(dom.manifold_axes):
            iv = box[pos]
            cand = iv.length / 4
            spec = dom.axes[axis]
            if spec.is_circle:
                cand = min(cand, (spec.period - iv.length) / 4)
            m = cand if m is None else min(m, cand)
    return m


def decompose(eta: Form, cover: Cover, coloring: Coloring | None = None,
              psi: PPFunction | None = None, margin=None, verify: bool = True) -> PairDecomposition:
    """Write ``d eta`` as ``sum dh ^ dt`` with pairs grouped by color."""
    dom = eta.domain
    if eta.degree != 1:
        raise ValueError("decompose expects a 1-form")
    if psi is None:
        psi = dom.zero_function()
    deta = eta.d()
    if not deta.times(psi).is_zero():
        raise RelativeDataError(
            "d(eta) is nonzero where the relative cutoff psi is nonzero: the discrepancy "
            "must vanish on a neighbourhood of B")
    margin = default_margin(cover) if margin is None else rational(margin)
    widened = cover.enlarged(margin)
    if coloring is None:
        coloring = color_cover(widened)
    rho = [dom.restrict(r) for r in cover.pou]
    one_minus_psi = dom.constant(1) - psi
    chart_pairs = {}
    cutoffs = []
    for alpha, box in enumerate(cover.charts):
        plats = {axis: _axis_plateau(dom, axis, box[pos], margin)
                 for pos, axis in enumerate(dom.manifold_axes)}
        phi = dom.constant(1)
        for f in plats.values():
            phi = phi * f
        cutoffs.append(dom.restrict(phi))
        for pos, r in enumerate(dom.manifold_axes):
            h = dom.restrict(rho[alpha] * eta.component((r,)))
            t = _axis_lift(dom, r, box[pos], margin)
            for a, f in plats.items():
                if a != r:
                    t = t * f
            t = dom.restrict(one_minus_psi * t)
            chart_pairs[(alpha, r)] = (h, t)
    pairs = {}
    for m, cls in enumerate(coloring.classes):
        for r in dom.manifold_axes:
            h = dom.zero_function()
            t = dom.zero_function()
            for alpha in cls:
                ha, ta = chart_pairs[(alpha, r)]
                h, t = h + ha, t + ta
            pairs[(m, r)] = (h, t)
    dec = PairDecomposition(dom, coloring, chart_pairs, pairs, tuple(cutoffs), psi, margin, widened)
    if verify and dec.pair_form() != deta:
        raise ArithmeticError("sum of dh ^ dt differs from d(eta)")
    return dec


# -- appending coordinates ----------------------------------------------------

@dataclass
class EmbeddingResult:
    g: PPMap
    homotopy: PPMap
    eta: Form
    decomposition: PairDecomposition
    report: dict = field(default_factory=dict)


def _lift_to(domain: Domain, f: PPFunction) -> PPFunction:
    return f.insert_axis(domain.ndim - 1, domain.axes[-1])


def append_coordinates(f: PPMap, dec: PairDecomposition, target: Form | None = None,
                       B: dict | None = None, samples: int = 5,
                       eta: Form | None = None) -> EmbeddingResult:
    """``g = (f, h, t, ...)`` and the homotopy ``(f, s h, s t, ...)``, verified exactly."""
    if not f.declared_embedding:
        raise ValueError("f must be declared an embedding")
    if f.D % 2:
        raise ValueError("f must land in an even-dimensional space")
    dom = f.domain
    extra = []
    for _, _, h, t in dec.ordered_pairs():
        extra += [h, t]
    g = PPMap(dom, tuple(f.coordinates) + tuple(extra), True)
    base = pullback_constant_form(f, standard_symplectic(f.D))
    deta = dec.pair_form()
    pulled = pullback_constant_form(g, standard_symplectic(g.D))
    endpoint_ok = pulled == base + deta
    target_ok = None if target is None else pulled == target

    hdom = dom.with_parameter(0, 1)
    s = hdom.coordinate(hdom.ndim - 1)
    hcoords = [_lift_to(hdom, c) for c in f.coordinates]
    hcoords += [s * _lift_to(hdom, c) for c in extra]
    homotopy = PPMap(hdom, tuple(hcoords), True)
    lifted = lambda w: Form(hdom, w.degree, {k: _lift_to(hdom, c) for k, c in w.components.items()})
    hpull = pullback_constant_form(homotopy, standard_symplectic(homotopy.D))
    homotopy_ok = hpull == lifted(base) + lifted(deta).times(s * s)

    relative_ok = None
    if B:
        relative_ok = all(restrict_parameters(dom, dom.restrict(c), B).is_zero() for c in extra)

    report = {
        "N": f.D // 2,
        "n": dom.n,
        "colors": dec.colors,
        "appended_pairs": len(extra) // 2,
        "target_dimension": g.D,
        "expected_dimension": f.D + 2 * dom.n * dec.colors,
        "endpoint_identity": endpoint_ok,
        "target_identity": target_ok,
        "homotopy_identity": homotopy_ok,
        "relative_vanishing": relative_ok,
        "margin": fraction_str(dec.margin),
        "immersion_check": immersion_check(g, samples),
    }
    if eta is None:
        eta = Form.zero(dom, 1)
    return EmbeddingResult(g, homotopy, eta, dec, report)


def immersion_check(phi: PPMap, samples: int = 5) -> dict:
    """Smallest singular value of the manifold Jacobian on a sample grid."""
    dom = phi.domain
    grids = []
    for a in range(dom.ndim):
        if dom.axes[a].is_circle:
            P = dom.axes[a].period
            grids.append([P * Fraction(2 * i + 1, 2 * samples) for i in range(samples)])
        else:
            lo, hi = dom.bounds[a]
            npts = samples if a in dom.manifold_axes else 2
            grids.append([lo + (hi - lo) * Fraction(2 * i + 1, 2 * npts) for i in range(npts)])
    partials = [[c.partial_derivative(a) for a in dom.manifold_axes] for c in phi.coordinates]
    smin = math.inf
    count = 0
    for point in itertools.product(*grids):
        J = np.array([[float(p(*point)) for p in row] for row in partials])
        sv = np.linalg.svd(J, compute_uv=False)
        smin = min(smin, float(sv[-1]))
        count += 1
    return {"samples": count, "min_singular_value": smin}


def lift_family(f0: PPMap, target: Form, cover: Cover, relative: dict | None = None,
                splitting: CechSplitting | None = None, cx: CechDeRham | None = None,
                margin=None, samples: int = 5) -> EmbeddingResult:
    """Full pipeline: primitive of the discrepancy, decomposition, appended coordinates.

    ``relative`` may hold parameter boxes ``B`` and ``U`` (dicts axis ->
    (lo, hi)) and optionally a ready-made cutoff ``psi``.
    """
    dom = f0.domain
    if target.domain != dom or target.degree != 2:
        raise ValueError("target must be a 2-form on the domain of f0")
    base = pullback_constant_form(f0, standard_symplectic(f0.D))
    disc = (target - base).restricted()
    psi = None
    B = U = None
    if relative:
        B, U = relative.get("B") or {}, relative.get("U") or {}
        psi = relative.get("psi")
        if psi is None:
            psi = relative_cutoff(dom, B, U)
        for comp in disc.components.values():
            if not restrict_parameters(dom, comp, U).is_zero():
                raise RelativeDataError("target differs from f0*omega_std over U")
    if cx is None:
        cx = CechDeRham(nerve(cover, max_dim=dom.n))
    if dom.parameter_axes:
        eta = primitive_family(disc, cx, splitting)
    else:
        eta = primitive(disc, cx, splitting)
    dec = decompose(eta, cover, psi=psi, margin=margin)
    res = append_coordinates(f0, dec, target, B, samples, eta)
    if U:
        res.report["eta_vanishes_on_U"] = all(
            restrict_parameters(dom, c, U).is_zero() for c in eta.components.values())
    return res


# -- twist map ----------------------------------------------------------------

@dataclass
class TwistMap:
    """``F(z) = Phi(z + p) - Phi(p)`` with ``Phi(w) = w^(N+1) / (c |w|^N)``, ``c = sqrt(N+1)``.

    In polar coordinates ``Phi`` sends ``(rho, theta)`` to
    ``(rho / c, (N+1) theta)``, which scales area by ``(N+1) / c^2``; so
    ``c = sqrt(N+1)`` is the area-preserving constant.  ``p`` is a real
    translation with ``p > R`` so the singular point of ``Phi`` stays off
    the closed disk ``D_R``.
    """

    N: int
    R: float
    r: float
    p: float
    c: float
    report: dict = field(default_factory=dict)

    def phi(self, w: complex) -> complex:
        a = abs(w)
        return w ** (self.N + 1) / (self.c * a ** self.N)

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        w = self.phi(complex(x + self.p, y)) - self.phi(complex(self.p, 0))
        return w.real, w.imag


def _mp_twist(N, c, p, x, y):
    w = mpmath.mpc(x + p, y)
    v = w ** (N + 1) / (c * abs(w) ** N) - mpmath.mpf(p) ** (N + 1) / (c * mpmath.mpf(p) ** N)
    return v.real, v.imag


def twist_map(N: int | None, R: float, r: float, grid: int = 100, dps: int = 40,
              offset: float = 1.125) -> TwistMap:
    """Area-preserving map ``D_R -> D_r`` fixing the origin, with a numeric report.

    ``N = None`` picks the smallest ``N`` for which the radius bound
    ``(R + 2p) / sqrt(N+1) <= r`` holds.
    """
    if R <= 0 or r <= 0:
        raise ValueError("radii must be positive")
    p = offset * R
    need = max(1, math.ceil(((R + 2 * p) / r) ** 2) - 1)
    if N is None:
        N = need
    if N < 1:
        raise ValueError("N must be >= 1")
    c = math.sqrt(N + 1)
    tm = TwistMap(N, R, r, p, c)
    with mpmath.workdps(dps):
        cm = mpmath.sqrt(N + 1)
        pm = mpmath.mpf(p)
        h = mpmath.mpf(10) ** (-(dps // 3))
        worst = mpmath.mpf(0)
        radius = 0.0
        for i in range(grid):
            rad = mpmath.mpf(R) * (2 * i + 1) / (2 * grid)
            for j in range(grid):
                th = 2 * mpmath.pi * j / grid
                x, y = rad * mpmath.cos(th), rad * mpmath.sin(th)
                fx1 = _mp_twist(N, cm, pm, x + h, y)
                fx0 = _mp_twist(N, cm, pm, x - h, y)
                fy1 = _mp_twist(N, cm, pm, x, y + h)
                fy0 = _mp_twist(N, cm, pm, x, y - h)
                a = (fx1[0] - fx0[0]) / (2 * h)
                b = (fy1[0] - fy0[0]) / (2 * h)
                cc = (fx1[1] - fx0[1]) / (2 * h)
                d = (fy1[1] - fy0[1]) / (2 * h)
                worst = max(worst, abs(a * d - b * cc - 1))
                u, v = _mp_twist(N, cm, pm, x, y)
                radius = max(radius, float(mpmath.sqrt(u * u + v * v)))
        for j in range(4 * grid):
            th = 2 * mpmath.pi * j / (4 * grid)
            u, v = _mp_twist(N, cm, pm, R * mpmath.cos(th), R * mpmath.sin(th))
            radius = max(radius, float(mpmath.sqrt(u * u + v * v)))
        origin = _mp_twist(N, cm, pm, mpmath.mpf(0), mpmath.mpf(0))
    tm.report = {
        "N": N,
        "minimal_N_for_radius_bound": need,
        "R": R,
        "r": r,
        "translation": p,
        "constant": c,
        "constant_formula": "sqrt(N+1)",
        "area_factor": 1.0,
        "area_factor_with_constant_N": (N + 1) / N ** 2,
        "note": "with the constant N instead of sqrt(N+1) the map scales area by (N+1)/N^2",
        "max_abs_detJ_minus_1": float(worst),
        "max_image_radius": radius,
        "image_inside_target": radius <= r,
        "origin_image": [float(origin[0]), float(origin[1])],
        "samples": grid * grid,
    }
    return tm
