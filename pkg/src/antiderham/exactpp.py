"""Exact piecewise-polynomial functions over the rationals.

A :class:`PPFunction` lives on a product of axes.  Each axis is either a
``line`` (the real line, cut by finitely many breakpoints into bounded cells
plus two unbounded end cells) or a ``circle`` (``[0, period)`` cut by
breakpoints that always include ``0``).  On every cell the function is a
polynomial in the *global* coordinates, stored as a flint ``fmpq_mpoly``.
Because polynomials are global, refining a grid never rewrites coefficients.

All operations are exact and return new objects; instances are immutable.
"""

from __future__ import annotations

import bisect
import functools
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from flint import fmpq, fmpq_mpoly, fmpq_mpoly_ctx, fmpq_poly

LINE = "line"
CIRCLE = "circle"


class AxisMismatch(ValueError):
    """Raised when two functions do not live on compatible axes."""


class FiberNotIntegrable(ValueError):
    """Raised when integrating along a line axis with nonzero tails."""


def rational(x) -> Fraction:
    """Coerce ints, Fractions, fmpq and ``"num/den"`` strings to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact code paths: %r" % x)
    return Fraction(x)


def to_fmpq(x) -> fmpq:
    x = rational(x)
    return fmpq(x.numerator, x.denominator)


def fraction_str(x) -> str:
    x = rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


@lru_cache(maxsize=None)
def poly_ctx(nvars: int) -> fmpq_mpoly_ctx:
    return fmpq_mpoly_ctx.get(tuple("x%d" % i for i in range(nvars)), "lex")


def _poly_const(poly: fmpq_mpoly) -> Fraction:
    d = poly.to_dict()
    if not d:
        return Fraction(0)
    if len(d) != 1 or any(next(iter(d))):
        raise ValueError("polynomial is not constant: %s" % poly)
    return rational(next(iter(d.values())))


@dataclass(frozen=True)
class AxisSpec:
    """One coordinate axis: its kind, breakpoints and (for circles) period."""

    kind: str
    breakpoints: tuple = ()
    period: Fraction | None = None

    def __post_init__(self):
        bps = tuple(rational(b) for b in self.breakpoints)
        if self.kind == LINE:
            if self.period is not None:
                raise ValueError("line axes have no period")
        elif self.kind == CIRCLE:
            if self.period is None or rational(self.period) <= 0:
                raise ValueError("circle axes need a positive period")
            object.__setattr__(self, "period", rational(self.period))
            if any(b < 0 or b >= self.period for b in bps):
                raise ValueError("circle breakpoints must lie in [0, period)")
            if not bps or bps[0] != 0:
                bps = (Fraction(0),) + tuple(b for b in bps if b != 0)
        else:
            raise ValueError("unknown axis kind %r" % (self.kind,))
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.breakpoints, self.period))
            object.__setattr__(self, "_hash", h)
        return h

    @classmethod
    def line(cls, breakpoints: Iterable = ()) -> "AxisSpec":
        return cls(LINE, tuple(breakpoints))

    @classmethod
    def circle(cls, period=1, breakpoints: Iterable = ()) -> "AxisSpec":
        return cls(CIRCLE, tuple(breakpoints), rational(period))

    @property
    def is_circle(self) -> bool:
        return self.kind == CIRCLE

    def kind_only(self) -> "AxisSpec":
        return AxisSpec(self.kind, (), self.period)

    def compatible(self, other: "AxisSpec") -> bool:
        return self.kind == other.kind and self.period == other.period

    @property
    def ncells(self) -> int:
        if self.kind == LINE:
            return len(self.breakpoints) + 1
        return len(self.breakpoints)

    def cell_bounds(self, i: int):
        """``(lo, hi)`` of cell ``i``; ``None`` marks an infinite end."""
        b = self.breakpoints
        if self.kind == LINE:
            lo = b[i - 1] if i > 0 else None
            hi = b[i] if i < len(b) else None
            return lo, hi
        hi = b[i + 1] if i + 1 < len(b) else self.period
        return b[i], hi

    def locate(self, x) -> int:
        """Index of the cell containing ``x`` (cells are half-open ``[lo, hi)``)."""
        x = rational(x)
        if self.kind == CIRCLE:
            x = x % self.period
            return bisect.bisect_right(self.breakpoints, x) - 1
        return bisect.bisect_right(self.breakpoints, x)

    def merged(self, other: "AxisSpec") -> "AxisSpec":
        if self is other:
            return self
        return _merged(self, other)

    def _merged(self, other: "AxisSpec") -> "AxisSpec":
        if not self.compatible(other):
            raise AxisMismatch("axis kinds differ: %s vs %s" % (self, other))
        if self.breakpoints == other.breakpoints:
            return self
        bps = sorted(set(self.breakpoints) | set(other.breakpoints))
        return AxisSpec(self.kind, tuple(bps), self.period)

    def with_breakpoints(self, extra: Iterable) -> "AxisSpec":
        extra = [rational(e) for e in extra]
        if self.kind == CIRCLE:
            extra = [e % self.period for e in extra]
        bps = sorted(set(self.breakpoints) | set(extra))
        return AxisSpec(self.kind, tuple(bps), self.period)

    def children(self, fine: "AxisSpec") -> list[list[int]]:
        """For each cell of ``self``, the cells of the refinement ``fine`` inside it."""
        return _children(self, fine)

    def _children(self, fine: "AxisSpec") -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.ncells)]
        for j in range(fine.ncells):
            lo, hi = fine.cell_bounds(j)
            if lo is None:
                probe = hi - 1 if hi is not None else Fraction(0)
            else:
                probe = lo
            out[self.locate(probe)].append(j)
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "breakpoints": [fraction_str(b) for b in self.breakpoints]}
        if self.period is not None:
            d["period"] = fraction_str(self.period)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "AxisSpec":
        period = d.get("period")
        return cls(d["kind"], tuple(rational(b) for b in d.get("breakpoints", ())),
                   rational(period) if period is not None else None)


@functools.lru_cache(maxsize=4096)
def _merged(a: AxisSpec, b: AxisSpec) -> AxisSpec:
    return a._merged(b)


@functools.lru_cache(maxsize=4096)
def _children(a: AxisSpec, b: AxisSpec) -> list[list[int]]:
    return a._children(b)


@functools.lru_cache(maxsize=4096)
def _is_refinement(old: AxisSpec, new: AxisSpec) -> bool:
    return old.compatible(new) and set(old.breakpoints) <= set(new.breakpoints)


class PPFunction:
    """Piecewise polynomial with exact rational coefficients.

    ``cells`` maps cell-index tuples to nonzero polynomials; missing cells are
    zero.  On line axes the two unbounded end cells carry the behaviour
    outside the breakpoint range (the "tails"); a function whose end cells
    are all zero has compact support.
    """

    __slots__ = ("axes", "cells")

    def __init__(self, axes: Sequence[AxisSpec], cells: Mapping[tuple, fmpq_mpoly] | None = None):
        self.axes = tuple(axes)
        self.cells = {k: v for k, v in (cells or {}).items() if not v.is_zero()}

    # -- construction -------------------------------------------------------

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def ctx(self) -> fmpq_mpoly_ctx:
        return poly_ctx(len(self.axes))

    @classmethod
    def zero(cls, axes: Sequence[AxisSpec]) -> "PPFunction":
        return cls([a.kind_only() for a in axes])

    @classmethod
    def constant(cls, axes: Sequence[AxisSpec], c) -> "PPFunction":
        axes = [a.kind_only() for a in axes]
        p = poly_ctx(len(axes)).constant(to_fmpq(c))
        return cls(axes, {(0,) * len(axes): p})

    @classmethod
    def polynomial(cls, axes: Sequence[AxisSpec], terms: Mapping[tuple, object]) -> "PPFunction":
        """A single global polynomial ``{exponents: coefficient}``.

        Only sensible along line axes; on a circle axis a non-constant
        polynomial is discontinuous at the seam.
        """
        axes = [a.kind_only() for a in axes]
        ctx = poly_ctx(len(axes))
        p = ctx.from_dict({tuple(k): to_fmpq(v) for k, v in terms.items()})
        return cls(axes, {(0,) * len(axes): p})

    @classmethod
    def coordinate(cls, axes: Sequence[AxisSpec], i: int) -> "PPFunction":
        e = [0] * len(axes)
        e[i] = 1
        return cls.polynomial(axes, {tuple(e): 1})

    @classmethod
    def from_pieces(cls, axis: AxisSpec, pieces: Mapping[int, fmpq_poly | Sequence]) -> "PPFunction":
        """Univariate function on ``axis`` from ``{cell index: coefficient list}``."""
        ctx = poly_ctx(1)
        cells = {}
        for i, coeffs in pieces.items():
            if isinstance(coeffs, fmpq_poly):
                coeffs = coeffs.coeffs()
            p = ctx.from_dict({(e,): to_fmpq(c) for e, c in enumerate(coeffs) if c != 0})
            if not p.is_zero():
                cells[(i,)] = p
        return cls([axis], cells)

    def embed(self, axes: Sequence[AxisSpec], axis: int) -> "PPFunction":
        """Embed a univariate function as a function of coordinate ``axis`` of ``axes``."""
        if self.ndim != 1:
            raise ValueError("embed expects a univariate function")
        target = [a.kind_only() for a in axes]
        if not target[axis].compatible(self.axes[0]):
            raise AxisMismatch("cannot embed %s on axis %d (%s)" % (self.axes[0], axis, target[axis]))
        target[axis] = self.axes[0]
        ctx = poly_ctx(len(target))
        cells = {}
        for (i,), p in self.cells.items():
            key = [0] * len(target)
            key[axis] = i
            d = {}
            for (e,), c in p.to_dict().items():
                ex = [0] * len(target)
                ex[axis] = e
                d[tuple(ex)] = c
            cells[tuple(key)] = ctx.from_dict(d)
        return PPFunction(target, cells)

    # -- grid handling ------------------------------------------------------

    def check_compatible(self, other: "PPFunction") -> None:
        if self.ndim != other.ndim:
            raise AxisMismatch("dimension mismatch: %d vs %d" % (self.ndim, other.ndim))
        for a, b in zip(self.axes, other.axes):
            if not a.compatible(b):
                raise AxisMismatch("axis mismatch: %s vs %s" % (a.kind_only(), b.kind_only()))

    def refine(self, axes: Sequence[AxisSpec]) -> "PPFunction":
        """Re-express on a finer grid (each new axis must contain the old breakpoints)."""
        axes = tuple(axes)
        if axes == self.axes:
            return self
        kids = []
        for old, new in zip(self.axes, axes):
            if old == new:
                kids.append(None)
                continue
            if not _is_refinement(old, new):
                raise AxisMismatch("%s is not a refinement of %s" % (new, old))
            kids.append(old.children(new))
        cells = {}
        for key, p in self.cells.items():
            ranges = [[k] if ch is None else ch[k] for k, ch in zip(key, kids)]
            for nk in itertools.product(*ranges):
                cells[nk] = p
        out = PPFunction.__new__(PPFunction)
        out.axes = axes
        out.cells = cells
        return out

    def with_breakpoints(self, axis: int, extra: Iterable) -> "PPFunction":
        axes = list(self.axes)
        axes[axis] = axes[axis].with_breakpoints(extra)
        return self.refine(axes)

    def _common(self, other: "PPFunction"):
        if self.axes is other.axes or self.axes == other.axes:
            return self, other
        self.check_compatible(other)
        axes = tuple(a.merged(b) for a, b in zip(self.axes, other.axes))
        return self.refine(axes), other.refine(axes)

    def coarsen(self) -> "PPFunction":
        """Drop breakpoints across which the function does not change."""
        f = self
        for a in range(self.ndim):
            ax = f.axes[a]
            if not ax.breakpoints or (ax.is_circle and len(ax.breakpoints) == 1):
                continue
            rows: dict[tuple, dict[int, fmpq_mpoly]] = {}
            for key, p in f.cells.items():
                rows.setdefault(key[:a] + key[a + 1:], {})[key[a]] = p
            zero = f.ctx.constant(0)
            keep = []
            for bi, b in enumerate(ax.breakpoints):
                if ax.is_circle:
                    if b == 0:
                        keep.append(b)
                        continue
                    left, right = bi - 1, bi
                else:
                    left, right = bi, bi + 1
                same = all(r.get(left, zero) == r.get(right, zero) for r in rows.values())
                if not same:
                    keep.append(b)
            if len(keep) == len(ax.breakpoints):
                continue
            new_ax = AxisSpec(ax.kind, tuple(keep), ax.period)
            cells = {}
            for key, p in f.cells.items():
                lo, hi = ax.cell_bounds(key[a])
                probe = lo if lo is not None else (hi - 1 if hi is not None else Fraction(0))
                nk = key[:a] + (new_ax.locate(probe),) + key[a + 1:]
                cells[nk] = p
            axes = list(f.axes)
            axes[a] = new_ax
            f = PPFunction(axes, cells)
        return f

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, PPFunction):
            if other == 0:
                return self
            other = PPFunction.constant(self.axes, other)
        f, g = self._common(other)
        cells = dict(f.cells)
        for k, p in g.cells.items():
            q = cells.get(k)
            cells[k] = p if q is None else q + p
        return PPFunction(f.axes, cells)

    __radd__ = __add__

    def __neg__(self):
        return PPFunction(self.axes, {k: -p for k, p in self.cells.items()})

    def __sub__(self, other):
        if not isinstance(other, PPFunction):
            return self + (-rational(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "PPFunction":
        c = to_fmpq(c)
        if c == 0:
            return PPFunction(self.axes)
        return PPFunction(self.axes, {k: p * c for k, p in self.cells.items()})

    def __mul__(self, other):
        if not isinstance(other, PPFunction):
            return self.scale(other)
        f, g = self._common(other)
        small, big = (f, g) if len(f.cells) <= len(g.cells) else (g, f)
        cells = {}
        for k, p in small.cells.items():
            q = big.cells.get(k)
            if q is not None:
                cells[k] = p * q
        return PPFunction(f.axes, cells)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PPFunction):
            if isinstance(other, (int, Fraction)):
                other = PPFunction.constant(self.axes, other)
            else:
                return NotImplemented
        try:
            f, g = self._common(other)
        except AxisMismatch:
            return False
        return f.cells == g.cells

    def __hash__(self):
        raise TypeError("PPFunction is not hashable")

    def is_zero(self) -> bool:
        return not self.cells

    def __repr__(self):
        return "PPFunction(%d axes, %d cells)" % (self.ndim, len(self.cells))

    # -- calculus -----------------------------------------------------------

    def partial_derivative(self, axis: int) -> "PPFunction":
        if not 0 <= axis < self.ndim:
            raise IndexError("axis %d out of range for %d-axis function" % (axis, self.ndim))
        return PPFunction(self.axes, {k: p.derivative(axis) for k, p in self.cells.items()})

    def _eval_axis(self, poly: fmpq_mpoly, axis: int, value) -> fmpq_mpoly:
        return poly.subs({"x%d" % axis: to_fmpq(value)})

    def _rows(self, axis: int) -> dict[tuple, dict[int, fmpq_mpoly]]:
        rows: dict[tuple, dict[int, fmpq_mpoly]] = {}
        for key, p in self.cells.items():
            rows.setdefault(key[:axis] + (0,) + key[axis + 1:], {})[key[axis]] = p
        return rows

    def integrate_axis(self, axis: int) -> "PPFunction":
        """Definite integral along ``axis``, kept as a function constant in that axis."""
        ax = self.axes[axis]
        if not ax.is_circle:
            last = ax.ncells - 1
            for key in self.cells:
                if key[axis] == 0 or key[axis] == last:
                    raise FiberNotIntegrable(
                        "fiber not integrable: nonzero tail along line axis %d" % axis)
        out = {}
        for row, cells in self._rows(axis).items():
            acc = None
            for i, p in cells.items():
                lo, hi = ax.cell_bounds(i)
                prim = p.integral(axis)
                v = self._eval_axis(prim, axis, hi) - self._eval_axis(prim, axis, lo)
                acc = v if acc is None else acc + v
            if acc is not None and not acc.is_zero():
                out[row] = acc
        axes = list(self.axes)
        axes[axis] = ax.kind_only()
        return PPFunction(axes, out)

    def integrate_axis_full(self, axis: int) -> "PPFunction":
        """Definite integral along ``axis``; the result has one axis fewer."""
        return self.integrate_axis(axis).drop_axis(axis)

    def integral(self) -> Fraction:
        """Integral over all axes (every line axis must be compactly supported)."""
        f = self
        for a in range(self.ndim):
            f = f.integrate_axis(a)
        return f.constant_value()

    def cumulative_integral(self, axis: int, start=None) -> "PPFunction":
        """``x -> integral of f from the start of the axis up to x`` along ``axis``.

        On a line axis the integral runs from ``-inf`` (the lower tail must be
        zero) and ``start`` must be omitted.  On a circle axis a ``start``
        point is required: the integral is taken over the lift
        ``[start, start + period)``, so the result jumps at ``start`` unless
        the total integral vanishes.
        """
        ax = self.axes[axis]
        f = self
        if ax.is_circle:
            if start is None:
                raise ValueError("cumulative integral along a circle axis needs a start point")
            start = rational(start) % ax.period
            f = self.with_breakpoints(axis, [start])
            ax = f.axes[axis]
            first = ax.breakpoints.index(start)
            order = [(first + j) % ax.ncells for j in range(ax.ncells)]
        else:
            if start is not None:
                raise ValueError("line axes integrate from -inf; start is only for circles")
            if any(key[axis] == 0 for key in f.cells):
                raise ValueError("cumulative integral needs a zero lower tail along axis %d" % axis)
            order = list(range(ax.ncells))
        out = {}
        for row, cells in f._rows(axis).items():
            acc = None
            for i in order:
                lo, hi = ax.cell_bounds(i)
                p = cells.get(i)
                if p is not None:
                    prim = p.integral(axis)
                    val = prim - f._eval_axis(prim, axis, lo)
                    if acc is not None:
                        val = val + acc
                    if hi is not None:
                        end = f._eval_axis(prim, axis, hi) - f._eval_axis(prim, axis, lo)
                        acc = end if acc is None else acc + end
                else:
                    val = acc
                if val is not None and not val.is_zero():
                    out[row[:axis] + (i,) + row[axis + 1:]] = val
        return PPFunction(f.axes, out)

    def substitute(self, axis: int, value) -> "PPFunction":
        """Fix coordinate ``axis`` to ``value``; the result is constant in that axis."""
        ax = self.axes[axis]
        value = rational(value)
        if ax.is_circle:
            value = value % ax.period
        cell = ax.locate(value)
        out = {}
        for key, p in self.cells.items():
            if key[axis] == cell:
                q = self._eval_axis(p, axis, value)
                if not q.is_zero():
                    out[key[:axis] + (0,) + key[axis + 1:]] = q
        axes = list(self.axes)
        axes[axis] = ax.kind_only()
        return PPFunction(axes, out)

    def drop_axis(self, axis: int) -> "PPFunction":
        """Remove an axis the function does not depend on."""
        ax = self.axes[axis]
        if ax.breakpoints and not (ax.is_circle and len(ax.breakpoints) == 1):
            f = self.coarsen()
            ax = f.axes[axis]
            if ax.breakpoints and not (ax.is_circle and len(ax.breakpoints) == 1):
                raise ValueError("function still varies along axis %d" % axis)
        else:
            f = self
        ctx = poly_ctx(self.ndim - 1)
        out = {}
        for key, p in f.cells.items():
            d = {}
            for e, c in p.to_dict().items():
                if e[axis]:
                    raise ValueError("function depends on axis %d" % axis)
                d[e[:axis] + e[axis + 1:]] = c
            out[key[:axis] + key[axis + 1:]] = ctx.from_dict(d)
        return PPFunction(f.axes[:axis] + f.axes[axis + 1:], out)

    def insert_axis(self, position: int, spec: AxisSpec) -> "PPFunction":
        """Add an axis at ``position``; the result is constant along it."""
        spec = spec.kind_only()
        ctx = poly_ctx(self.ndim + 1)
        out = {}
        for key, p in self.cells.items():
            d = {e[:position] + (0,) + e[position:]: c for e, c in p.to_dict().items()}
            out[key[:position] + (0,) + key[position:]] = ctx.from_dict(d)
        return PPFunction(self.axes[:position] + (spec,) + self.axes[position:], out)

    def shift(self, axis: int, offset) -> "PPFunction":
        """``x -> f(x - offset)`` along a line axis (translate the graph by ``offset``)."""
        ax = self.axes[axis]
        if ax.is_circle:
            raise ValueError("shift is implemented for line axes only")
        offset = rational(offset)
        new_ax = AxisSpec(LINE, tuple(b + offset for b in ax.breakpoints))
        gens = list(self.ctx.gens())
        gens[axis] = gens[axis] - to_fmpq(offset)
        out = {k: p.compose(*gens) for k, p in self.cells.items()}
        axes = list(self.axes)
        axes[axis] = new_ax
        return PPFunction(axes, out)

    def restrict(self, axis: int, lo, hi) -> "PPFunction":
        """Zero the function outside ``[lo, hi]`` along a line axis."""
        lo, hi = rational(lo), rational(hi)
        f = self.with_breakpoints(axis, [lo, hi])
        ax = f.axes[axis]
        keep = set()
        for i in range(ax.ncells):
            a, b = ax.cell_bounds(i)
            if a is not None and b is not None and a >= lo and b <= hi:
                keep.add(i)
        return PPFunction(f.axes, {k: p for k, p in f.cells.items() if k[axis] in keep})

    # -- evaluation ---------------------------------------------------------

    def constant_value(self) -> Fraction:
        """The value of a function that is constant everywhere."""
        f = self.coarsen()
        if not f.cells:
            return Fraction(0)
        if len(f.cells) != 1 or f.cells.get((0,) * f.ndim) is None or any(
                a.ncells != 1 for a in f.axes):
            raise ValueError("function is not globally constant")
        return _poly_const(f.cells[(0,) * f.ndim])

    def __call__(self, *point) -> Fraction:
        if len(point) != self.ndim:
            raise ValueError("expected %d coordinates" % self.ndim)
        key = tuple(a.locate(x) for a, x in zip(self.axes, point))
        p = self.cells.get(key)
        if p is None:
            return Fraction(0)
        vals = {"x%d" % i: to_fmpq(x % a.period if a.is_circle else rational(x))
                for i, (a, x) in enumerate(zip(self.axes, point))}
        return _poly_const(p.subs(vals))

    def sample(self, *point: float) -> float:
        """Floating-point value at a point (report helper only)."""
        return float(self(*[Fraction(x) for x in point]))

    def support_cells(self):
        """Yield per-axis ``(lo, hi)`` bounds of every nonzero cell."""
        for key in self.cells:
            yield tuple(a.cell_bounds(i) for a, i in zip(self.axes, key))

    def max_degree(self) -> int:
        return max((max(p.degrees()) if self.ndim else 0 for p in self.cells.values()), default=0)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        cells = []
        for key in sorted(self.cells):
            terms = sorted(self.cells[key].to_dict().items())
            cells.append({"cell": list(key),
                          "terms": [[[int(i) for i in e], fraction_str(rational(c))]
                                    for e, c in terms]})
        return {"axes": [a.to_dict() for a in self.axes], "cells": cells}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PPFunction":
        axes = [AxisSpec.from_dict(a) for a in d["axes"]]
        ctx = poly_ctx(len(axes))
        cells = {}
        for c in d["cells"]:
            key = tuple(c["cell"])
            if len(key) != len(axes) or any(not 0 <= k < a.ncells for k, a in zip(key, axes)):
                raise ValueError("cell index %r out of range" % (key,))
            p = ctx.from_dict({tuple(e): to_fmpq(v) for e, v in c["terms"]})
            cells[key] = cells[key] + p if key in cells else p
        return cls(axes, cells)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, s: str) -> "PPFunction":
        return cls.from_dict(json.loads(s))


# -- module-level operation names --------------------------------------------

def arithmetic(f: PPFunction, g: PPFunction, op: str) -> PPFunction:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    raise ValueError("unknown op %r" % op)


def partial_derivative(f: PPFunction, axis: int) -> PPFunction:
    return f.partial_derivative(axis)


def integrate_axis_full(f: PPFunction, axis: int) -> PPFunction:
    return f.integrate_axis_full(axis)


def cumulative_integral(f: PPFunction, axis: int, start=None) -> PPFunction:
    return f.cumulative_integral(axis, start)


# -- B-splines ----------------------------------------------------------------

def _bspline_pieces(knots: Sequence[Fraction], degree: int) -> list[fmpq_poly]:
    """Cox-de Boor: the polynomial of B(knots) on each knot interval."""
    m = len(knots) - 1
    x = fmpq_poly([0, 1])
    # basis[i][j]: polynomial of B_{i,k} on [knots[j], knots[j+1])
    basis = [[fmpq_poly([1]) if j == i else fmpq_poly([]) for j in range(m)] for i in range(m)]
    for k in range(1, degree + 1):
        nxt = []
        for i in range(m - k):
            row = []
            d1 = knots[i + k] - knots[i]
            d2 = knots[i + k + 1] - knots[i + 1]
            for j in range(m):
                p = fmpq_poly([])
                if d1:
                    p += (x - to_fmpq(knots[i])) * basis[i][j] / to_fmpq(d1)
                if d2:
                    p += (to_fmpq(knots[i + k + 1]) - x) * basis[i + 1][j] / to_fmpq(d2)
                row.append(p)
            nxt.append(row)
        basis = nxt
    return basis[0]


def bspline(degree: int, knots: Sequence | None = None, interval: Sequence | None = None,
            normalize: str = "unity") -> PPFunction:
    """Univariate B-spline on a line axis.

    Give either the ``degree + 2`` knots or an ``interval`` (uniform knots).
    ``normalize="unity"`` is the partition-of-unity scaling (translates sum
    to one); ``normalize="mass"`` rescales to total integral one.  Degree 0
    is the indicator of the interval.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if (knots is None) == (interval is None):
        raise ValueError("give exactly one of knots or interval")
    if interval is not None:
        a, b = (rational(t) for t in interval)
        if not a < b:
            raise ValueError("degenerate interval [%s, %s]" % (a, b))
        knots = [a + (b - a) * Fraction(i, degree + 1) for i in range(degree + 2)]
    knots = [rational(t) for t in knots]
    if len(knots) != degree + 2:
        raise ValueError("need %d knots for degree %d" % (degree + 2, degree))
    if any(s > t for s, t in zip(knots, knots[1:])) or knots[0] == knots[-1]:
        raise ValueError("degenerate knot sequence %s" % knots)
    pieces = _bspline_pieces(knots, degree)
    bps = sorted(set(knots))
    axis = AxisSpec.line(bps)
    scale = Fraction(1)
    if normalize == "mass":
        scale = Fraction(degree + 1) / (knots[-1] - knots[0])
    elif normalize != "unity":
        raise ValueError("normalize must be 'unity' or 'mass'")
    out = {}
    for j, p in enumerate(pieces):
        lo, hi = knots[j], knots[j + 1]
        if lo == hi or p.is_zero():
            continue
        out[axis.locate(lo)] = p * to_fmpq(scale)
    return PPFunction.from_pieces(axis, out)


def periodize(f: PPFunction, period) -> PPFunction:
    """Wrap a compactly supported univariate line function onto a circle."""
    if f.ndim != 1 or f.axes[0].is_circle:
        raise ValueError("periodize expects a univariate line function")
    period = rational(period)
    ax = f.axes[0]
    if any(k[0] in (0, ax.ncells - 1) for k in f.cells):
        raise ValueError("periodize needs compact support")
    lo, hi = ax.breakpoints[0], ax.breakpoints[-1]
    kmin = (lo // period)
    kmax = (hi // period)
    cuts = set()
    for b in ax.breakpoints:
        cuts.add(b % period)
    circle = AxisSpec.circle(period, sorted(cuts))
    ctx = poly_ctx(1)
    x = ctx.gens()[0]
    cells: dict[tuple, fmpq_mpoly] = {}
    # piece on [t, t') in lifted coordinates, shifted by j*period into [0, period)
    fine = f.refine([ax.with_breakpoints([j * period for j in range(int(kmin), int(kmax) + 2)])])
    fax = fine.axes[0]
    for (i,), p in fine.cells.items():
        a, b = fax.cell_bounds(i)
        j = a // period
        shifted = p.compose(x + to_fmpq(j * period))
        c = circle.locate(a - j * period)
        cells[(c,)] = cells[(c,)] + shifted if (c,) in cells else shifted
        # the shifted piece [a - j*period, b - j*period) may span several circle cells
        for cc in range(c + 1, circle.ncells):
            clo, _ = circle.cell_bounds(cc)
            if clo < b - j * period:
                cells[(cc,)] = cells[(cc,)] + shifted if (cc,) in cells else shifted
            else:
                break
    return PPFunction([circle], cells)
