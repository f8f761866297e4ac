"""Differential forms with piecewise-polynomial coefficients.

Forms live on a :class:`Domain`: a product of line axes (each restricted to
a closed interval) and circle axes.  Some axes may be marked as parameter
axes; they ride along inside the coefficients, so a form on such a domain
is a family of forms on the manifold factor and ``d`` differentiates along
manifold axes only.

Coefficients are only meaningful on the domain box.  Comparisons restrict
to it first, so data outside the box (e.g. tails of a coordinate function)
never affects equality.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exactpp import AxisSpec, LINE, PPFunction, rational, fraction_str


class DomainMismatch(ValueError):
    pass


class NotClosed(ValueError):
    """Raised when an operation needs a closed form and ``d omega != 0``."""


@dataclass(frozen=True)
class Domain:
    """Axes of ``A x M`` with box bounds on the line axes.

    ``axes`` holds kind/period templates (no breakpoints); ``bounds[i]`` is
    ``(lo, hi)`` for a line axis and ``None`` for a circle axis.
    """

    axes: tuple
    bounds: tuple
    parameter_axes: frozenset = field(default_factory=frozenset)
    names: tuple = ()

    def __post_init__(self):
        axes = tuple(a.kind_only() for a in self.axes)
        object.__setattr__(self, "axes", axes)
        bounds = []
        for a, b in zip(axes, self.bounds):
            if a.is_circle:
                bounds.append(None)
            else:
                lo, hi = rational(b[0]), rational(b[1])
                if not lo < hi:
                    raise ValueError("empty interval [%s, %s]" % (lo, hi))
                bounds.append((lo, hi))
        if len(bounds) != len(axes):
            raise ValueError("need one bound per axis")
        object.__setattr__(self, "bounds", tuple(bounds))
        object.__setattr__(self, "parameter_axes", frozenset(self.parameter_axes))
        if not self.manifold_axes:
            raise ValueError("the manifold needs at least one axis")
        if not self.names:
            object.__setattr__(self, "names", tuple("x%d" % i for i in range(len(axes))))

    @classmethod
    def box(cls, bounds: Sequence, parameters: Sequence = ()) -> "Domain":
        """A box ``prod [lo, hi]``, followed by parameter line axes."""
        allb = list(bounds) + list(parameters)
        return cls(tuple(AxisSpec.line() for _ in allb), tuple(allb),
                   frozenset(range(len(bounds), len(allb))))

    @classmethod
    def torus(cls, n: int, period=1, parameters: Sequence = ()) -> "Domain":
        axes = [AxisSpec.circle(period) for _ in range(n)] + [AxisSpec.line() for _ in parameters]
        return cls(tuple(axes), tuple([None] * n + list(parameters)),
                   frozenset(range(n, n + len(parameters))))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def manifold_axes(self) -> tuple:
        return tuple(i for i in range(len(self.axes)) if i not in self.parameter_axes)

    @property
    def n(self) -> int:
        return len(self.manifold_axes)

    def with_parameter(self, lo, hi, position: int | None = None) -> "Domain":
        """Append (or insert) one more line parameter axis."""
        pos = self.ndim if position is None else position
        axes = self.axes[:pos] + (AxisSpec.line(),) + self.axes[pos:]
        bounds = self.bounds[:pos] + ((lo, hi),) + self.bounds[pos:]
        params = {p + (p >= pos) for p in self.parameter_axes} | {pos}
        names = self.names[:pos] + ("s",) + self.names[pos:]
        return Domain(axes, bounds, frozenset(params), names)

    def restrict(self, f: PPFunction) -> PPFunction:
        """Zero ``f`` outside the domain box."""
        for i, b in enumerate(self.bounds):
            if b is not None:
                f = f.restrict(i, *b)
        return f

    def constant(self, c) -> PPFunction:
        return PPFunction.constant(self.axes, c)

    def coordinate(self, i: int) -> PPFunction:
        return PPFunction.coordinate(self.axes, i)

    def zero_function(self) -> PPFunction:
        return PPFunction.zero(self.axes)

    def check(self, f: PPFunction) -> None:
        if f.ndim != self.ndim or any(not a.compatible(b) for a, b in zip(f.axes, self.axes)):
            raise DomainMismatch("function axes do not match the domain")

    def to_dict(self) -> dict:
        return {
            "axes": [a.to_dict() for a in self.axes],
            "bounds": [None if b is None else [fraction_str(b[0]), fraction_str(b[1])]
                       for b in self.bounds],
            "parameter_axes": sorted(self.parameter_axes),
            "names": list(self.names),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Domain":
        return cls(tuple(AxisSpec.from_dict(a) for a in d["axes"]),
                   tuple(None if b is None else tuple(b) for b in d["bounds"]),
                   frozenset(d.get("parameter_axes", ())), tuple(d.get("names", ())))


def _insert_sign(index: tuple, j: int) -> tuple[int, tuple]:
    """``dx_j ^ dx_I = sign * dx_{I + j}``; returns (0, ()) if ``j in I``."""
    if j in index:
        return 0, ()
    pos = sum(1 for i in index if i < j)
    return (-1) ** pos, tuple(sorted(index + (j,)))


def _merge_sign(a: tuple, b: tuple) -> tuple[int, tuple]:
    """``dx_a ^ dx_b = sign * dx_{a+b}`` (0 if they share an index)."""
    if set(a) & set(b):
        return 0, ()
    inversions = sum(1 for i in a for j in b if i > j)
    return (-1) ** inversions, tuple(sorted(a + b))


class Form:
    """A degree-``q`` form: ``{increasing index tuple: PPFunction}``."""

    __slots__ = ("domain", "degree", "components")

    def __init__(self, domain: Domain, degree: int, components: Mapping | None = None):
        self.domain = domain
        self.degree = degree
        comps = {}
        man = set(domain.manifold_axes)
        for idx, f in (components or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)) or not set(idx) <= man:
                raise ValueError("bad index %r for a %d-form" % (idx, degree))
            if f.is_zero():
                continue
            domain.check(f)
            comps[idx] = f
        self.components = comps

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, domain: Domain, degree: int) -> "Form":
        return cls(domain, degree)

    @classmethod
    def function(cls, f: PPFunction, domain: Domain) -> "Form":
        return cls(domain, 0, {(): f})

    @classmethod
    def basis(cls, domain: Domain, index: Iterable[int], coeff=None) -> "Form":
        """``coeff * dx_index`` (``coeff`` defaults to 1)."""
        index = tuple(index)
        sign, idx = 1, ()
        for j in reversed(index):
            s, idx = _insert_sign(idx, j)
            sign *= s
        if sign == 0:
            return cls(domain, len(index))
        f = coeff if coeff is not None else domain.constant(1)
        return cls(domain, len(index), {idx: f.scale(sign)})

    def component(self, index) -> PPFunction:
        return self.components.get(tuple(index), self.domain.zero_function())

    # -- linear structure ---------------------------------------------------

    def _check(self, other: "Form") -> None:
        if self.domain != other.domain:
            raise DomainMismatch("forms live on different domains")
        if self.degree != other.degree:
            raise ValueError("degree mismatch %d vs %d" % (self.degree, other.degree))

    def __add__(self, other: "Form") -> "Form":
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        comps = dict(self.components)
        for k, f in other.components.items():
            comps[k] = comps[k] + f if k in comps else f
        return Form(self.domain, self.degree, comps)

    __radd__ = __add__

    def __neg__(self) -> "Form":
        return Form(self.domain, self.degree, {k: -f for k, f in self.components.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        return Form(self.domain, self.degree, {k: f.scale(c) for k, f in self.components.items()})

    def times(self, f: PPFunction) -> "Form":
        """Multiply every coefficient by the function ``f``."""
        return Form(self.domain, self.degree, {k: g * f for k, g in self.components.items()})

    def map_coefficients(self, fn) -> "Form":
        return Form(self.domain, self.degree, {k: fn(g) for k, g in self.components.items()})

    def restricted(self) -> "Form":
        return self.map_coefficients(self.domain.restrict)

    def coarsen(self) -> "Form":
        return self.map_coefficients(PPFunction.coarsen)

    def is_zero(self) -> bool:
        return all(self.domain.restrict(f).is_zero() for f in self.components.values())

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if self.domain != other.domain or self.degree != other.degree:
            return False
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("Form is not hashable")

    def __repr__(self):
        return "Form(degree=%d, components=%s)" % (self.degree, sorted(self.components))

    # -- calculus -----------------------------------------------------------

    def d(self) -> "Form":
        """Exterior derivative along the manifold axes."""
        comps: dict = {}
        for idx, f in self.components.items():
            for j in self.domain.manifold_axes:
                sign, new = _insert_sign(idx, j)
                if not sign:
                    continue
                g = f.partial_derivative(j)
                if g.is_zero():
                    continue
                g = g if sign > 0 else -g
                comps[new] = comps[new] + g if new in comps else g
        return Form(self.domain, self.degree + 1, comps)

    def wedge(self, other: "Form") -> "Form":
        if self.domain != other.domain:
            raise DomainMismatch("forms live on different domains")
        comps: dict = {}
        for a, f in self.components.items():
            for b, g in other.components.items():
                sign, new = _merge_sign(a, b)
                if not sign:
                    continue
                h = f * g
                if sign < 0:
                    h = -h
                comps[new] = comps[new] + h if new in comps else h
        return Form(self.domain, self.degree + other.degree, comps)

    def __xor__(self, other: "Form") -> "Form":
        return self.wedge(other)

    def is_closed(self) -> bool:
        return self.d().is_zero()

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "components": [{"index": list(k), "coefficient": self.components[k].to_dict()}
                           for k in sorted(self.components)],
        }

    @classmethod
    def from_dict(cls, d: Mapping, domain: Domain) -> "Form":
        comps = {}
        for c in d["components"]:
            f = PPFunction.from_dict(c["coefficient"])
            k = tuple(c["index"])
            comps[k] = comps[k] + f if k in comps else f
        return cls(domain, int(d["degree"]), comps)

    def dumps(self) -> str:
        return json.dumps({"domain": self.domain.to_dict(), "form": self.to_dict()},
                          sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, s: str) -> "Form":
        d = json.loads(s)
        return cls.from_dict(d["form"], Domain.from_dict(d["domain"]))


def exterior_derivative(omega: Form) -> Form:
    return omega.d()


def wedge(a: Form, b: Form) -> Form:
    return a.wedge(b)


@dataclass(frozen=True)
class PPMap:
    """A map ``A x M -> R^D`` with piecewise-polynomial coordinates."""

    domain: Domain
    coordinates: tuple
    declared_embedding: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        for f in self.coordinates:
            self.domain.check(f)
        if len(self.coordinates) < self.domain.n:
            raise ValueError("target dimension %d is smaller than dim M = %d"
                             % (len(self.coordinates), self.domain.n))

    @property
    def D(self) -> int:
        return len(self.coordinates)

    def differential(self, i: int) -> Form:
        return Form.function(self.coordinates[i], self.domain).d()

    def to_dict(self) -> dict:
        return {"declared_embedding": self.declared_embedding,
                "coordinates": [f.to_dict() for f in self.coordinates]}

    @classmethod
    def from_dict(cls, d: Mapping, domain: Domain) -> "PPMap":
        return cls(domain, tuple(PPFunction.from_dict(c) for c in d["coordinates"]),
                   bool(d.get("declared_embedding", False)))

    def __eq__(self, other):
        if not isinstance(other, PPMap) or self.domain != other.domain or self.D != other.D:
            return False
        return all(self.domain.restrict(a - b).is_zero()
                   for a, b in zip(self.coordinates, other.coordinates))

    __hash__ = None


def standard_symplectic(D: int) -> list[list[Fraction]]:
    """Coefficient matrix of ``sum_i dx_{2i-1} ^ dx_{2i}`` on ``R^D``."""
    if D % 2:
        raise ValueError("the standard form needs an even dimension")
    c = [[Fraction(0)] * D for _ in range(D)]
    for i in range(0, D, 2):
        c[i][i + 1] = Fraction(1)
        c[i + 1][i] = Fraction(-1)
    return c


def pullback_constant_form(phi: PPMap, omega_target: Sequence[Sequence]) -> Form:
    """``sum_{i<j} c_ij dphi_i ^ dphi_j`` for a constant antisymmetric ``c``."""
    D = len(omega_target)
    if D != phi.D:
        raise ValueError("target form is on R^%d but the map lands in R^%d" % (D, phi.D))
    c = [[rational(x) for x in row] for row in omega_target]
    for i in range(D):
        if len(c[i]) != D or c[i][i] != 0:
            raise ValueError("target form must be a square antisymmetric array")
        for j in range(i):
            if c[i][j] != -c[j][i]:
                raise ValueError("target form must be antisymmetric")
    diffs: dict[int, Form] = {}

    def dphi(i):
        if i not in diffs:
            diffs[i] = phi.differential(i)
        return diffs[i]

    out = Form.zero(phi.domain, 2)
    for i, j in itertools.combinations(range(D), 2):
        if c[i][j]:
            out = out + dphi(i).wedge(dphi(j)).scale(c[i][j])
    return out


def periods(omega: Form, cycle: tuple[int, int], basepoint: Mapping[int, object]) -> Fraction:
    """Integral of a closed 2-form over the coordinate 2-torus ``cycle``.

    ``basepoint`` fixes every other axis (manifold and parameter).
    """
    if omega.degree != 2:
        raise ValueError("periods are defined for 2-forms")
    i, j = sorted(cycle)
    dom = omega.domain
    for a in (i, j):
        if not dom.axes[a].is_circle or a in dom.parameter_axes:
            raise ValueError("axis %d is not a circle axis of the manifold" % a)
    if not omega.is_closed():
        raise NotClosed("form is not closed; its period would depend on the basepoint")
    f = omega.component((i, j))
    for a in range(dom.ndim):
        if a in (i, j):
            continue
        if a not in basepoint:
            raise ValueError("basepoint is missing a value for axis %d" % a)
        f = f.substitute(a, basepoint[a])
    return f.integrate_axis(i).integrate_axis(j).constant_value()
