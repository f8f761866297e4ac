"""The augmented Cech-de Rham double complex with compact supports.

Bidegrees are written ``(p, q)``: ``p`` is the Cech column (number of charts
minus one, ``p = -1`` is the augmentation column holding global forms) and
``q`` is the form degree; row ``q = n + 1`` holds the integration
augmentation, one scalar per interior simplex.  Scalars are stored as
PPFunctions that are constant along the manifold axes, so parameter
dependence rides along.

On a box domain the complex is the relative one: a simplex whose
intersection box contains part of the domain boundary gets no row ``n + 1``
entry, and its column is contracted by integrating in from the boundary
side instead of subtracting a bump.

Sign conventions (checked by the identity suites):

* ``(d_h c)_s = sum over t = s + {a}`` of ``(-1)^(position of a in t) c_t``;
* ``d_v = (-1)^p d`` on column ``p >= 0`` (``(-1)^p`` times the integral
  into row ``n + 1``) and ``-d`` on the augmentation column;
* ``(K c)_t = sum_i (-1)^i rho_{t_i} c_{t - t_i}``;
* ``L = (-1)^p L_box`` with ``L_box = sum_j (e*)^j Q (pi*)^j``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import cached_property

from .cover import Nerve
from .exactpp import PPFunction, bspline, periodize
from .forms import Domain, Form


def _sign(i: int) -> int:
    return -1 if i % 2 else 1


class CechCochain:
    """Entries ``{simplex: Form}`` (or ``{simplex: PPFunction}`` in row n+1).

    The augmentation column ``p = -1`` has the single key ``()``.
    """

    __slots__ = ("cx", "p", "q", "entries")

    def __init__(self, cx: "CechDeRham", p: int, q: int, entries=None):
        self.cx = cx
        self.p = p
        self.q = q
        out = {}
        for s, v in (entries or {}).items():
            if not _is_zero_value(v):
                out[tuple(s)] = v
        self.entries = out

    @property
    def bidegree(self) -> tuple[int, int]:
        return (-self.p, self.q)

    def _check(self, other: "CechCochain") -> None:
        if (self.p, self.q) != (other.p, other.q) or self.cx is not other.cx:
            raise ValueError("cochains of bidegree %s and %s cannot be combined"
                             % (self.bidegree, other.bidegree))

    def __add__(self, other: "CechCochain") -> "CechCochain":
        self._check(other)
        out = dict(self.entries)
        for s, v in other.entries.items():
            out[s] = out[s] + v if s in out else v
        return CechCochain(self.cx, self.p, self.q, out)

    def __neg__(self) -> "CechCochain":
        return self.scale(-1)

    def __sub__(self, other: "CechCochain") -> "CechCochain":
        return self + (-other)

    def scale(self, c) -> "CechCochain":
        return CechCochain(self.cx, self.p, self.q, {s: v.scale(c) for s, v in self.entries.items()})

    def is_zero(self) -> bool:
        return all(self.cx.value_is_zero(v) for v in self.entries.values())

    def __eq__(self, other):
        if not isinstance(other, CechCochain):
            return NotImplemented
        if (self.p, self.q) != (other.p, other.q):
            return False
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("CechCochain is not hashable")

    def __repr__(self):
        return "CechCochain(p=%d, q=%d, %d entries)" % (self.p, self.q, len(self.entries))

    def form(self) -> Form:
        """The global form of an augmentation-column cochain."""
        if self.p != -1:
            raise ValueError("only augmentation-column cochains are global forms")
        return self.entries.get((), Form.zero(self.cx.domain, self.q))

    def to_dict(self) -> dict:
        ents = []
        for s in sorted(self.entries):
            v = self.entries[s]
            ents.append({"simplex": list(s), "value": v.to_dict()})
        return {"p": self.p, "q": self.q, "entries": ents}


def _is_zero_value(v) -> bool:
    if isinstance(v, Form):
        return not v.components
    return v.is_zero()


class TotalCochain:
    """``t = sum_m t^(m)`` with ``t^(m)`` in column ``m`` and row ``k + m``."""

    __slots__ = ("cx", "degree", "components")

    def __init__(self, cx: "CechDeRham", degree: int, components=None):
        self.cx = cx
        self.degree = degree
        comps = {}
        for m, c in (components or {}).items():
            if (c.p, c.q) != (m, degree + m):
                raise ValueError("component %d has bidegree %s, expected column %d row %d"
                                 % (m, c.bidegree, m, degree + m))
            if c.entries:
                comps[m] = c
        self.components = comps

    def component(self, m: int) -> CechCochain:
        return self.components.get(m, CechCochain(self.cx, m, self.degree + m))

    def __add__(self, other: "TotalCochain") -> "TotalCochain":
        if self.degree != other.degree:
            raise ValueError("total degree mismatch")
        out = dict(self.components)
        for m, c in other.components.items():
            out[m] = out[m] + c if m in out else c
        return TotalCochain(self.cx, self.degree, out)

    def __neg__(self) -> "TotalCochain":
        return self.scale(-1)

    def __sub__(self, other: "TotalCochain") -> "TotalCochain":
        return self + (-other)

    def scale(self, c) -> "TotalCochain":
        return TotalCochain(self.cx, self.degree, {m: v.scale(c) for m, v in self.components.items()})

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components.values())

    def __eq__(self, other):
        if not isinstance(other, TotalCochain):
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    def __hash__(self):
        raise TypeError("TotalCochain is not hashable")

    def __repr__(self):
        return "TotalCochain(degree=%d, columns=%s)" % (self.degree, sorted(self.components))


class CechDeRham:
    """Operators of the double complex attached to a nerve.

    Per-simplex bumps ``e`` (one per manifold axis, unit mass on the
    intersection interval) are built lazily and cached, so ``L`` is a fixed
    linear operator.  ``parallel`` > 1 evaluates per-simplex work on a thread
    pool; results are assembled in simplex order either way.
    """

    def __init__(self, nv: Nerve, parallel: int | None = None):
        self.nerve = nv
        self.cover = nv.cover
        self.domain: Domain = nv.cover.domain
        self.man = self.domain.manifold_axes
        self.n = len(self.man)
        self.parallel = parallel or 1
        self._bumps: dict = {}

    # -- helpers ------------------------------------------------------------

    @cached_property
    def rho(self) -> tuple:
        return tuple(self.domain.restrict(r) for r in self.cover.pou)

    def value_is_zero(self, v) -> bool:
        if isinstance(v, Form):
            return v.is_zero()
        return self.domain.restrict(v).is_zero()

    def _map(self, fn, items):
        items = list(items)
        if self.parallel > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.parallel) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]

    def zero(self, p: int, q: int) -> CechCochain:
        return CechCochain(self, p, q)

    def augmentation(self, omega: Form) -> CechCochain:
        """A global form placed in the augmentation column."""
        return CechCochain(self, -1, omega.degree, {(): omega})

    def is_interior(self, s: tuple) -> bool:
        return self.nerve.is_interior(s)

    def bumps(self, s: tuple) -> dict:
        """``{axis: (e, E, start)}`` for an interior simplex ``s``."""
        if s in self._bumps:
            return self._bumps[s]
        box = self.nerve.boxes[s]
        out = {}
        for pos, axis in enumerate(self.man):
            iv = box[pos]
            spec = self.domain.axes[axis]
            e1 = bspline(0, interval=(iv.lo, iv.hi), normalize="mass")
            if spec.is_circle:
                e1 = periodize(e1, spec.period)
                start = iv.lo
            else:
                start = None
            e = e1.embed(self.domain.axes, axis)
            out[axis] = (e, e.cumulative_integral(axis, start), start)
        self._bumps[s] = out
        return out

    def boundary_axis(self, s: tuple) -> tuple[int, str]:
        """Last manifold axis on which the box of ``s`` reaches the boundary."""
        box = self.nerve.boxes[s]
        for pos in reversed(range(self.n)):
            iv = box[pos]
            if iv.closed_lo:
                return self.man[pos], "lo"
            if iv.closed_hi:
                return self.man[pos], "hi"
        raise ValueError("simplex %r is interior" % (s,))

    def integrate_manifold(self, f: PPFunction) -> PPFunction:
        """Integral over the manifold axes, kept as a function of the parameters."""
        f = self.domain.restrict(f)
        for a in self.man:
            f = f.integrate_axis(a)
        return f

    def top_form(self, c: PPFunction, s: tuple) -> Form:
        """``c * e_1 ... e_n dx_1 ^ ... ^ dx_n`` for interior ``s``."""
        b = self.bumps(s)
        f = c
        for a in self.man:
            f = f * b[a][0]
        return Form(self.domain, self.n, {self.man: f})

    # -- column operators on a single box -----------------------------------

    def pi_star(self, w: Form, axis: int) -> Form:
        """Integrate out ``dx_axis`` (which must be the last index where present)."""
        comps = {}
        for idx, f in w.components.items():
            if idx and idx[-1] == axis:
                comps[idx[:-1]] = f.integrate_axis(axis)
            elif axis in idx:
                raise ValueError("pi_star: axis %d is not the last index of %r" % (axis, idx))
        return Form(self.domain, w.degree - 1, comps)

    def e_star(self, w: Form, s: tuple, axis: int) -> Form:
        """``w ^ e(x_axis) dx_axis``."""
        e = self.bumps(s)[axis][0]
        comps = {}
        for idx, f in w.components.items():
            if idx and idx[-1] >= axis:
                raise ValueError("e_star: axis %d must follow every index of %r" % (axis, idx))
            comps[idx + (axis,)] = f * e
        return Form(self.domain, w.degree + 1, comps)

    def Q(self, w: Form, s: tuple, axis: int) -> Form:
        """Fiber homotopy on the box of interior ``s``: ``dQ + Qd = 1 - e* pi*``."""
        e, E, start = self.bumps(s)[axis]
        sgn = _sign(w.degree - 1)
        comps = {}
        for idx, f in w.components.items():
            if not idx or idx[-1] != axis:
                if axis in idx:
                    raise ValueError("Q: axis %d is not the last index of %r" % (axis, idx))
                continue
            F = f.cumulative_integral(axis, start) - E * f.integrate_axis(axis)
            comps[idx[:-1]] = F if sgn > 0 else -F
        return Form(self.domain, w.degree - 1, comps).restricted()

    def Q_boundary(self, w: Form, s: tuple) -> Form:
        """Contraction of the column of a boundary simplex.

        Integrates along the last boundary-reaching axis ``b``, starting on
        the side where the entries vanish, so no bump is subtracted.
        """
        b, side = self.boundary_axis(s)
        sgn = _sign(w.degree - 1)
        comps: dict = {}
        for idx, f in w.components.items():
            if b not in idx:
                continue
            later = sum(1 for i in idx if i > b)
            rest = tuple(i for i in idx if i != b)
            F = f.cumulative_integral(b)
            if side == "lo":
                F = F - f.integrate_axis(b)
            F = self.domain.restrict(F)
            if (sgn * _sign(later)) < 0:
                F = -F
            comps[rest] = comps[rest] + F if rest in comps else F
        return Form(self.domain, w.degree - 1, comps)

    def L_box(self, value, q: int, s: tuple):
        """Contraction of the augmented column of ``s`` (without the ``(-1)^p``)."""
        if q == 0:
            return None
        if not self.is_interior(s):
            if q == self.n + 1:
                raise ValueError("boundary simplices have no top-row entries")
            return self.Q_boundary(value, s)
        if q == self.n + 1:
            return self.top_form(value, s)
        total = Form.zero(self.domain, q - 1)
        w = value
        for j in range(self.n):
            if w.degree == 0:
                break
            axis = self.man[self.n - 1 - j]
            term = self.Q(w, s, axis)
            for a in self.man[self.n - j:]:
                term = self.e_star(term, s, a)
            total = total + term
            w = self.pi_star(w, axis)
        return total

    # -- double complex operators -------------------------------------------

    def d_h(self, c: CechCochain) -> CechCochain:
        if c.p < 0:
            raise ValueError("d_h is not defined on the augmentation column")
        if c.p == 0:
            if c.q == self.n + 1:
                return self.zero(-1, c.q)
            total = Form.zero(self.domain, c.q)
            for s in sorted(c.entries):
                total = total + c.entries[s]
            return CechCochain(self, -1, c.q, {(): total})
        top = c.q == self.n + 1
        out: dict = {}
        for t in sorted(c.entries):
            v = c.entries[t]
            for i in range(len(t)):
                s = t[:i] + t[i + 1:]
                if top and not self.is_interior(s):
                    continue
                term = v if i % 2 == 0 else -v
                out[s] = out[s] + term if s in out else term
        return CechCochain(self, c.p - 1, c.q, out)

    def d_v(self, c: CechCochain) -> CechCochain:
        if c.q > self.n:
            raise ValueError("d_v is not defined on row n+1")
        if c.p == -1:
            if c.q == self.n:
                return self.zero(-1, c.q + 1)
            return CechCochain(self, -1, c.q + 1, {(): -c.form().d()})
        sgn = _sign(c.p)
        keys = sorted(c.entries)
        if c.q == self.n:
            keys = [s for s in keys if self.is_interior(s)]

            def one(s):
                f = self.integrate_manifold(c.entries[s].component(self.man))
                return f if sgn > 0 else -f
        else:
            def one(s):
                w = c.entries[s].d()
                return w if sgn > 0 else -w
        return CechCochain(self, c.p, c.q + 1, dict(zip(keys, self._map(one, keys))))

    def K(self, c: CechCochain) -> CechCochain:
        if c.q > self.n:
            raise ValueError("K acts on rows 0..n")
        nv = self.nerve
        N = len(self.cover)
        rho = self.rho
        if c.p == -1:
            w = c.entries.get(())
            if w is None:
                return self.zero(0, c.q)
            keys = list(range(N))
            vals = self._map(lambda a: w.times(rho[a]), keys)
            return CechCochain(self, 0, c.q, {(a,): v for a, v in zip(keys, vals)})
        if c.p + 1 not in nv.simplices:
            return self.zero(c.p + 1, c.q)
        jobs = []
        for s in sorted(c.entries):
            cands = set.intersection(*(nv.neighbors[v] for v in s))
            for a in sorted(cands - set(s)):
                t = tuple(sorted(s + (a,)))
                if t in nv.boxes:
                    jobs.append((t, t.index(a), a, s))

        def one(job):
            t, i, a, s = job
            w = c.entries[s].times(rho[a])
            return w if i % 2 == 0 else -w

        out: dict = {}
        for (t, _, _, _), w in zip(jobs, self._map(one, jobs)):
            out[t] = out[t] + w if t in out else w
        return CechCochain(self, c.p + 1, c.q, out)

    def L(self, c: CechCochain) -> CechCochain:
        if c.p < 0:
            raise ValueError("L acts on the columns p >= 0")
        if c.q == 0:
            return self.zero(c.p, -1)
        sgn = _sign(c.p)
        keys = sorted(c.entries)

        def one(s):
            v = self.L_box(c.entries[s], c.q, s)
            return v if sgn > 0 else -v

        return CechCochain(self, c.p, c.q - 1, dict(zip(keys, self._map(one, keys))))

    # -- total complex and edge maps ----------------------------------------

    def D(self, t: TotalCochain) -> TotalCochain:
        """Total differential on the unaugmented complex (rows 0..n, columns >= 0)."""
        k = t.degree + 1
        out = {}
        for m in range(0, self.n - k + 1):
            parts = []
            prev = t.components.get(m)
            if prev is not None and prev.q < self.n:
                parts.append(self.d_v(prev))
            nxt = t.components.get(m + 1)
            if nxt is not None:
                parts.append(self.d_h(nxt))
            if parts:
                acc = parts[0]
                for x in parts[1:]:
                    acc = acc + x
                out[m] = acc
        return TotalCochain(self, k, out)

    def S(self, t: TotalCochain) -> Form:
        """Sum over charts of the column-0 component."""
        c = t.component(0)
        return self.d_h(c).form()

    def I(self, t: TotalCochain) -> CechCochain:
        """Integrals of the row-n component over interior simplices (no sign)."""
        m = self.n - t.degree
        c = t.component(m)
        keys = [s for s in sorted(c.entries) if self.is_interior(s)]
        vals = self._map(lambda s: self.integrate_manifold(c.entries[s].component(self.man)), keys)
        return CechCochain(self, m, self.n + 1, dict(zip(keys, vals)))

    def total(self, degree: int, components) -> TotalCochain:
        return TotalCochain(self, degree, components)

    def scalar(self, value) -> PPFunction:
        """A row ``n + 1`` value from a rational."""
        return self.domain.constant(Fraction(value))
