"""Finite good covers by axis-aligned boxes, their nerves and colorings.

Charts are products of intervals over the manifold axes.  On a line axis a
chart may reach the boundary of the domain box; it then contains that
boundary face (``closed_lo`` / ``closed_hi``).  On a circle axis a chart is
an arc ``[lo, hi)`` in lifted coordinates, shorter than the period.

The partition of unity is exact: it is built from B-spline translates, whose
sum is identically one on the domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exactpp import AxisSpec, PPFunction, bspline, periodize, rational
from .forms import Domain


class WrappedIntersection(ValueError):
    """A chart intersection on a circle axis is not a single arc."""


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction
    closed_lo: bool = False
    closed_hi: bool = False

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


def _intersect_line(ivs: Sequence[Interval]) -> Interval | None:
    lo = max(i.lo for i in ivs)
    hi = min(i.hi for i in ivs)
    if not lo < hi:
        return None
    return Interval(lo, hi, all(i.closed_lo for i in ivs), all(i.closed_hi for i in ivs))


def _intersect_arcs(a: Interval, b: Interval, period: Fraction) -> list[Interval]:
    pieces = []
    for k in (-1, 0, 1):
        lo = max(a.lo, b.lo + k * period)
        hi = min(a.hi, b.hi + k * period)
        if lo < hi:
            shift = (lo // period) * period
            pieces.append(Interval(lo - shift, hi - shift))
    return pieces


def intersect_boxes(domain: Domain, boxes: Sequence[tuple]) -> tuple | None:
    """Intersection of chart boxes; ``None`` if empty.

    Raises :class:`WrappedIntersection` if an arc intersection splits.
    """
    out = []
    for pos, axis in enumerate(domain.manifold_axes):
        spec = domain.axes[axis]
        ivs = [b[pos] for b in boxes]
        if not spec.is_circle:
            iv = _intersect_line(ivs)
        else:
            iv = ivs[0]
            for other in ivs[1:]:
                pieces = _intersect_arcs(iv, other, spec.period)
                if len(pieces) > 1:
                    raise WrappedIntersection(
                        "chart intersection on circle axis %d has %d components" % (axis, len(pieces)))
                iv = pieces[0] if pieces else None
                if iv is None:
                    break
        if iv is None:
            return None
        out.append(iv)
    return tuple(out)


def _cell_in_interval(spec: AxisSpec, lo, hi, iv: Interval) -> bool:
    if lo is None or hi is None:
        return False
    if not spec.is_circle:
        return iv.lo <= lo and hi <= iv.hi
    start = (lo - iv.lo) % spec.period
    return start + (hi - lo) <= iv.length


def support_within(domain: Domain, f: PPFunction, box: tuple) -> bool:
    """Whether the (domain-restricted) support of ``f`` lies in the closed chart box."""
    f = domain.restrict(f)
    for cell in f.support_cells():
        for pos, axis in enumerate(domain.manifold_axes):
            lo, hi = cell[axis]
            if not _cell_in_interval(domain.axes[axis], lo, hi, box[pos]):
                return False
    return True


@dataclass
class Cover:
    """Charts ``U_alpha`` (boxes over the manifold axes) with a partition of unity."""

    domain: Domain
    charts: tuple
    pou: tuple
    labels: tuple = ()
    grid: tuple = ()
    degree: int | None = None

    def __post_init__(self):
        self.charts = tuple(tuple(c) for c in self.charts)
        self.pou = tuple(self.pou)
        if len(self.charts) != len(self.pou):
            raise ValueError("need one partition-of-unity function per chart")
        if not self.labels:
            self.labels = tuple(range(len(self.charts)))

    def __len__(self):
        return len(self.charts)

    def validate(self) -> None:
        """Check exactly that the pou sums to one and is subordinate to the charts."""
        total = self.domain.zero_function()
        for rho in self.pou:
            total = total + rho
        if self.domain.restrict(total - self.domain.constant(1)).cells:
            raise ValueError("partition of unity does not sum to 1 on the domain")
        for i, (rho, box) in enumerate(zip(self.pou, self.charts)):
            if not support_within(self.domain, rho, box):
                raise ValueError("support of rho_%s is not inside its chart" % (self.labels[i],))
            for pos, axis in enumerate(self.domain.manifold_axes):
                spec = self.domain.axes[axis]
                if spec.is_circle and box[pos].length >= spec.period:
                    raise WrappedIntersection("chart %s wraps around circle axis %d"
                                              % (self.labels[i], axis))

    def enlarged(self, margin) -> "Cover":
        """Same partition of unity, every chart widened by ``margin`` on open sides."""
        margin = rational(margin)
        charts = []
        for box in self.charts:
            new = []
            for pos, axis in enumerate(self.domain.manifold_axes):
                iv = box[pos]
                lo = iv.lo if iv.closed_lo else iv.lo - margin
                hi = iv.hi if iv.closed_hi else iv.hi + margin
                spec = self.domain.axes[axis]
                if spec.is_circle:
                    if hi - lo >= spec.period:
                        raise WrappedIntersection("enlarged chart wraps around circle axis %d" % axis)
                    shift = (lo // spec.period) * spec.period
                    lo, hi = lo - shift, hi - shift
                new.append(Interval(lo, hi, iv.closed_lo, iv.closed_hi))
            charts.append(tuple(new))
        return Cover(self.domain, tuple(charts), self.pou, self.labels, self.grid, self.degree)


def _line_axis_charts(lo, hi, degree: int, resolution: int):
    if resolution < max(1, degree):
        raise ValueError("resolution %d too small on a line axis for degree %d (need >= %d)"
                         % (resolution, degree, max(1, degree)))
    h = (hi - lo) / resolution
    out = []
    for j in range(-degree, resolution):
        knots = [lo + (j + i) * h for i in range(degree + 2)]
        rho = bspline(degree, knots=knots).restrict(0, lo, hi)
        iv = Interval(max(lo, knots[0]), min(hi, knots[-1]), knots[0] < lo, knots[-1] > hi)
        out.append((j, iv, rho))
    return out, [lo + i * h for i in range(resolution + 1)]


def _circle_axis_charts(period, degree: int, resolution: int):
    need = max(degree + 2, 2 * degree + 1)
    if resolution < need:
        raise ValueError(
            "resolution %d too small on a circle axis for degree %d: charts span %d cells and "
            "would wrap onto each other (need >= %d)" % (resolution, degree, degree + 1, need))
    h = period / resolution
    out = []
    for j in range(resolution):
        knots = [(j + i) * h for i in range(degree + 2)]
        rho = periodize(bspline(degree, knots=knots), period)
        out.append((j, Interval(knots[0], knots[-1]), rho))
    return out, [i * h for i in range(resolution)]


def build_bspline_cover(domain: Domain, degree: int, resolution) -> Cover:
    """Tensor-product B-spline cover: charts are the supports of the translates."""
    if degree < 1:
        raise ValueError("cover degree must be >= 1")
    man = domain.manifold_axes
    if isinstance(resolution, int):
        resolution = [resolution] * len(man)
    if len(resolution) != len(man):
        raise ValueError("need one resolution per manifold axis")
    per_axis = []
    grid = []
    for axis, res in zip(man, resolution):
        spec = domain.axes[axis]
        if spec.is_circle:
            charts, g = _circle_axis_charts(spec.period, degree, res)
        else:
            charts, g = _line_axis_charts(*domain.bounds[axis], degree, res)
        per_axis.append([(j, iv, rho.embed(domain.axes, axis)) for j, iv, rho in charts])
        grid.append(tuple(g))
    charts, pou, labels = [], [], []
    for combo in itertools.product(*per_axis):
        labels.append(tuple(c[0] for c in combo))
        charts.append(tuple(c[1] for c in combo))
        rho = combo[0][2]
        for c in combo[1:]:
            rho = rho * c[2]
        pou.append(rho)
    return Cover(domain, tuple(charts), tuple(pou), tuple(labels), tuple(grid), degree)


@dataclass
class Nerve:
    """Simplices (increasing chart tuples with nonempty intersection) up to ``max_dim``."""

    cover: Cover
    simplices: dict
    boxes: dict
    max_dim: int
    complete: bool
    neighbors: dict = field(default_factory=dict)

    @property
    def P(self) -> int:
        return max((p for p, s in self.simplices.items() if s), default=-1)

    @property
    def dimension(self) -> int:
        return self.P

    def of_dim(self, p: int) -> list:
        return self.simplices.get(p, [])

    def is_interior(self, simplex: tuple) -> bool:
        """No side of the intersection box lies on the boundary of the domain."""
        return not any(iv.closed_lo or iv.closed_hi for iv in self.boxes[simplex])

    def interior(self, p: int) -> list:
        return [s for s in self.of_dim(p) if self.is_interior(s)]

    def __contains__(self, simplex) -> bool:
        return tuple(simplex) in self.boxes

    def counts(self) -> list[int]:
        return [len(self.simplices.get(p, [])) for p in range(self.P + 1)]


def nerve(cover: Cover, max_dim: int | None = None) -> Nerve:
    """Enumerate the nerve; ``max_dim`` truncates the enumeration.

    Every listed intersection is verified to be a product of single
    intervals/arcs; a wrapped (disconnected) intersection rejects the cover.
    """
    dom = cover.domain
    N = len(cover.charts)
    boxes = {(a,): cover.charts[a] for a in range(N)}
    neighbors = {a: set() for a in range(N)}
    for a, b in itertools.combinations(range(N), 2):
        box = intersect_boxes(dom, (cover.charts[a], cover.charts[b]))
        if box is not None:
            neighbors[a].add(b)
            neighbors[b].add(a)
            boxes[(a, b)] = box
    simplices = {0: [(a,) for a in range(N)]}
    if max_dim is None or max_dim >= 1:
        simplices[1] = sorted(k for k in boxes if len(k) == 2)
    p = 1
    complete = True
    while simplices.get(p):
        if max_dim is not None and p >= max_dim:
            complete = not any(
                any(c > s[-1] for c in set.intersection(*(neighbors[v] for v in s)))
                for s in simplices[p])
            break
        nxt = []
        for s in simplices[p]:
            common = set.intersection(*(neighbors[v] for v in s))
            for c in sorted(x for x in common if x > s[-1]):
                box = intersect_boxes(dom, (boxes[s], cover.charts[c]))
                if box is not None:
                    t = s + (c,)
                    boxes[t] = box
                    nxt.append(t)
        p += 1
        simplices[p] = nxt
    simplices = {k: v for k, v in simplices.items() if v}
    return Nerve(cover, simplices, boxes, max_dim if max_dim is not None else max(simplices),
                 complete, neighbors)


@dataclass
class Coloring:
    classes: list

    @property
    def count(self) -> int:
        return len(self.classes)

    def color_of(self) -> dict:
        return {a: m for m, cls in enumerate(self.classes) for a in cls}


def color_nerve(nv: Nerve) -> Coloring:
    """Greedy coloring of the chart intersection graph (charts in index order)."""
    color: dict[int, int] = {}
    for a in range(len(nv.cover.charts)):
        used = {color[b] for b in nv.neighbors.get(a, ()) if b in color}
        c = 0
        while c in used:
            c += 1
        color[a] = c
    classes = [[] for _ in range(max(color.values(), default=-1) + 1)]
    for a, c in color.items():
        classes[c].append(a)
    return Coloring(classes)


def charts_overlap(domain: Domain, a: tuple, b: tuple) -> bool:
    """Whether two chart boxes meet (arcs may meet in more than one piece)."""
    for pos, axis in enumerate(domain.manifold_axes):
        spec = domain.axes[axis]
        if spec.is_circle:
            if not _intersect_arcs(a[pos], b[pos], spec.period):
                return False
        elif _intersect_line((a[pos], b[pos])) is None:
            return False
    return True


def color_cover(cover: Cover) -> Coloring:
    """Greedy coloring by pairwise chart overlap, without building a nerve."""
    N = len(cover.charts)
    neighbors = {a: set() for a in range(N)}
    for a, b in itertools.combinations(range(N), 2):
        if charts_overlap(cover.domain, cover.charts[a], cover.charts[b]):
            neighbors[a].add(b)
            neighbors[b].add(a)
    stub = Nerve(cover, {0: [(a,) for a in range(N)]}, {}, 0, False, neighbors)
    return color_nerve(stub)
