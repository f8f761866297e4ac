"""Randomized exact checks of the structural identities of the double complex."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .antidiff import build_splitting
from .cechdr import CechDeRham
from .corpus import random_cochain, random_rational
from .cover import build_bspline_cover, nerve
from .forms import Domain, Form

IDENTITIES = ("dhK+Kdh=id", "dQ+Qd=1-e*pi*", "dvL+Ldv=id", "D^2=0", "dhTdh=dh")


def default_instances():
    """Small domains covering line, box, torus and parametric cases."""
    return [
        (Domain.box([(0, 1)]), 1, 3),
        (Domain.box([(0, 1), (0, 1)]), 1, 2),
        (Domain.torus(2), 1, 3),
        (Domain.box([(0, 1), (0, 1)], parameters=[(0, 1)]), 1, 2),
        (Domain.box([(0, 1), (0, 2)]), 2, 3),
    ]


class SignFlipComplex(CechDeRham):
    """Negative control: the vertical differential with the wrong column sign."""

    def d_v(self, c):
        out = super().d_v(c)
        return out.scale(-1) if c.p == 1 else out


@dataclass
class IdentityResult:
    name: str
    passed: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0


def _sum(parts):
    parts = [p for p in parts if p is not None]
    acc = parts[0]
    for p in parts[1:]:
        acc = acc + p
    return acc


def check_hK(cx: CechDeRham, rng: random.Random) -> bool:
    n = cx.n
    q = rng.randint(0, n)
    p = rng.randint(-1, max(-1, cx.nerve.P - 1))
    c = random_cochain(cx, p, q, rng)
    lhs = cx.d_h(cx.K(c))
    if p >= 0:
        lhs = lhs + cx.K(cx.d_h(c))
    return lhs == c


def check_Q(cx: CechDeRham, rng: random.Random) -> bool:
    nv = cx.nerve
    p = rng.randint(0, nv.P)
    s = rng.choice(nv.of_dim(p))
    q = rng.randint(0, cx.n)
    c = random_cochain(cx, p, q, rng, density=1.0)
    w = c.entries.get(s)
    if w is None:
        w = Form.zero(cx.domain, q)
    axis = cx.man[-1]
    if cx.is_interior(s):
        Q = lambda f: cx.Q(f, s, axis)
        rhs = w
        if q >= 1:
            rhs = w - cx.e_star(cx.pi_star(w, axis), s, axis)
    else:
        Q = lambda f: cx.Q_boundary(f, s)
        rhs = w
    lhs = Q(w.d()) if q < cx.n else Form.zero(cx.domain, q)
    if q >= 1:
        lhs = lhs + Q(w).d()
    return lhs == rhs


def check_vL(cx: CechDeRham, rng: random.Random) -> bool:
    n = cx.n
    p = rng.randint(0, cx.nerve.P)
    q = rng.randint(0, n + 1)
    if q == n + 1 and not cx.nerve.interior(p):
        q = n
    c = random_cochain(cx, p, q, rng)
    parts = []
    if q <= n:
        parts.append(cx.L(cx.d_v(c)))
    if q >= 1:
        parts.append(cx.d_v(cx.L(c)))
    return _sum(parts) == c


def check_D2(cx: CechDeRham, rng: random.Random) -> bool:
    n = cx.n
    k = rng.randint(0, n - 1) if n > 1 else 0
    comps = {}
    for m in range(0, min(cx.nerve.P, n - k) + 1):
        comps[m] = random_cochain(cx, m, k + m, rng)
    t = cx.total(k, comps)
    return cx.D(cx.D(t)).is_zero()


def check_T(cx: CechDeRham, rng: random.Random, splitting) -> bool:
    n = cx.n
    ps = [p for p in range(1, cx.nerve.P + 1) if cx.nerve.interior(p)]
    if not ps:
        return True
    p = rng.choice(ps)
    c = random_cochain(cx, p, n + 1, rng)
    b = cx.d_h(c)
    return cx.d_h(splitting.apply(cx, b)) == b


def run_selftest(seed: int = 0, count: int = 30, complex_class=CechDeRham,
                 instances=None, parallel: int | None = None) -> list[IdentityResult]:
    """Run every identity ``count`` times on randomized instances."""
    rng = random.Random(seed)
    setups = []
    for dom, d, R in (instances or default_instances()):
        cov = build_bspline_cover(dom, d, R)
        nv = nerve(cov)
        cx = complex_class(nv, parallel=parallel)
        setups.append((cx, build_splitting(nv)))
    results = {name: IdentityResult(name) for name in IDENTITIES}
    for i in range(count):
        for name in IDENTITIES:
            cx, sp = setups[rng.randrange(len(setups))]
            if name == "dhK+Kdh=id":
                ok = check_hK(cx, rng)
            elif name == "dQ+Qd=1-e*pi*":
                ok = check_Q(cx, rng)
            elif name == "dvL+Ldv=id":
                ok = check_vL(cx, rng)
            elif name == "D^2=0":
                ok = check_D2(cx, rng)
            else:
                ok = check_T(cx, rng, sp)
            r = results[name]
            if ok:
                r.passed += 1
            else:
                r.failed += 1
                r.failures.append(i)
    return [results[n] for n in IDENTITIES]


__all__ = ["IDENTITIES", "IdentityResult", "SignFlipComplex", "run_selftest", "random_rational"]
