"""Linear anti-differential: closed form -> Cech cocycle -> zig-zag -> primitive.

Pipeline for a closed ``k``-form ``omega`` on a domain of dimension ``n``:

1. ``gamma``: ``gamma^(0) = K omega``, ``gamma^(i+1) = -K d_v gamma^(i)``; a
   cocycle of the total complex with ``S(gamma) = omega``.
2. ``I(gamma)`` is a Cech cycle in the top row; ``omega`` is exact iff it is a
   boundary, tested as ``d_h T I(gamma) = I(gamma)`` with a fixed exact
   generalized inverse ``T``.
3. ``delta`` with ``D delta = gamma`` comes from the column contraction ``L``:
   ``delta^(n-k+1) = (-1)^(n-k+1) L T I(gamma)`` and
   ``delta^(m) = L(gamma^(m) - d_h delta^(m+1))``.
4. The primitive is ``S(delta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cechdr import CechCochain, CechDeRham, TotalCochain
from .cover import Cover, Nerve, nerve
from flint import fmpq

from .exactpp import PPFunction, fraction_str, rational, to_fmpq
from .forms import Form, NotClosed, periods


class NotExact(ValueError):
    """The form has a nonzero class; ``certificate`` explains why."""

    def __init__(self, certificate: "ExactnessCertificate"):
        super().__init__(certificate.summary())
        self.certificate = certificate


class ZigzagHypothesisError(ValueError):
    """Inputs of the zig-zag lift violate its hypotheses."""


# -- sparse exact generalized inverse ----------------------------------------

def _scale(v, c):
    return v * c if isinstance(v, fmpq) else v.scale(c)


def _axpy(acc, v, c):
    """``acc + c * v`` where either may be ``None`` (zero)."""
    if v is None or c == 0:
        return acc
    term = _scale(v, c)
    return term if acc is None else acc + term


class GeneralizedInverse:
    """Exact ``G`` with ``A G A = A`` for a sparse matrix ``A`` (rows x cols).

    Gaussian elimination with a fixed pivoting rule (columns in order,
    shortest candidate row first, ties by row index) records the row
    operations; ``G b`` replays them and back-substitutes with every free
    variable set to zero.  The same recorded operations apply to vectors
    whose entries are rationals (flint ``fmpq``) or PPFunctions.
    """

    def __init__(self, nrows: int, ncols: int, entries: dict):
        self.nrows = nrows
        self.ncols = ncols
        self.A = {k: to_fmpq(v) for k, v in entries.items() if v}
        rows: list[dict] = [dict() for _ in range(nrows)]
        cols: list[set] = [set() for _ in range(ncols)]
        for (i, j), v in self.A.items():
            rows[i][j] = v
            cols[j].add(i)
        ops = []
        pivots = []
        used = set()
        for j in range(ncols):
            cand = [i for i in cols[j] if i not in used]
            if not cand:
                continue
            r = min(cand, key=lambda i: (len(rows[i]), i))
            used.add(r)
            pivots.append((r, j))
            prow = rows[r]
            pv = prow[j]
            for i in sorted(cand):
                if i == r:
                    continue
                fac = rows[i][j] / pv
                ops.append((r, i, fac))
                row = rows[i]
                for jj, v in prow.items():
                    nv = row.get(jj, 0) - fac * v
                    if nv != 0:
                        if jj not in row:
                            cols[jj].add(i)
                        row[jj] = nv
                    elif jj in row:
                        del row[jj]
                        cols[jj].discard(i)
        self.ops = ops
        self.pivots = pivots
        self.rows = {r: dict(rows[r]) for r, _ in pivots}
        self.inv_pivot = {r: 1 / self.rows[r][j] for r, j in pivots}
        self.cols_of = {}
        for (i, j), v in self.A.items():
            self.cols_of.setdefault(j, []).append((i, v))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def apply(self, b: dict) -> dict:
        """``G b`` for ``b = {row: value}``; returns ``{col: value}``."""
        b = dict(b)
        for r, i, fac in self.ops:
            v = b.get(r)
            if v is not None:
                b[i] = _axpy(b.get(i), v, -fac)
        x: dict = {}
        for r, j in reversed(self.pivots):
            acc = b.get(r)
            for jj, v in self.rows[r].items():
                if jj != j and jj in x:
                    acc = _axpy(acc, x[jj], -v)
            if acc is not None:
                x[j] = _scale(acc, self.inv_pivot[r])
        return x

    def matvec(self, x: dict) -> dict:
        out: dict = {}
        for j, v in x.items():
            for i, a in self.cols_of.get(j, ()):
                out[i] = _axpy(out.get(i), v, a)
        return out

    def matrix(self) -> list[list[Fraction]]:
        """Dense ``G`` (cols x rows)."""
        M = [[Fraction(0)] * self.nrows for _ in range(self.ncols)]
        for i in range(self.nrows):
            for j, v in self.apply({i: fmpq(1)}).items():
                M[j][i] = rational(v)
        return M

    def _apply_rows(self, B: dict) -> dict:
        """``G B`` for a sparse rational matrix ``B = {row: {col: value}}``."""
        B = {r: dict(v) for r, v in B.items()}

        def addto(target: dict, src: dict, c) -> None:
            for k, v in src.items():
                nv = target.get(k, 0) + c * v
                if nv != 0:
                    target[k] = nv
                else:
                    target.pop(k, None)

        for r, i, fac in self.ops:
            src = B.get(r)
            if src:
                addto(B.setdefault(i, {}), src, -fac)
        X: dict = {}
        for r, j in reversed(self.pivots):
            acc = dict(B.get(r, {}))
            for jj, v in self.rows[r].items():
                if jj != j and jj in X:
                    addto(acc, X[jj], -v)
            if acc:
                inv = self.inv_pivot[r]
                X[j] = {k: v * inv for k, v in acc.items()}
        return X

    def verify(self) -> bool:
        """Check ``A G A = A`` exactly."""
        A_rows: dict = {}
        for (i, j), v in self.A.items():
            A_rows.setdefault(i, {})[j] = v
        GA = self._apply_rows(A_rows)
        AGA: dict = {}
        for j, row in GA.items():
            for i, a in self.cols_of.get(j, ()):
                tgt = AGA.setdefault(i, {})
                for k, v in row.items():
                    tgt[k] = tgt.get(k, 0) + a * v
        AGA = {i: {k: v for k, v in r.items() if v != 0} for i, r in AGA.items()}
        AGA = {i: r for i, r in AGA.items() if r}
        return AGA == A_rows


@dataclass
class CechSplitting:
    """``T: C_(p-1) -> C_p`` on the top row with ``d_h T d_h = d_h``.

    ``inverses[p]`` is the generalized inverse of the boundary matrix from
    interior ``p``-simplices to interior ``(p-1)``-simplices.
    """

    nerve: Nerve
    simplices: dict
    inverses: dict = field(default_factory=dict)

    def boundary_entries(self, p: int) -> dict:
        rows = {s: i for i, s in enumerate(self.simplices.get(p - 1, []))}
        ent = {}
        for j, t in enumerate(self.simplices.get(p, [])):
            for i in range(len(t)):
                s = t[:i] + t[i + 1:]
                if s in rows:
                    ent[(rows[s], j)] = -1 if i % 2 else 1
        return ent

    def inverse(self, p: int) -> GeneralizedInverse:
        if p not in self.inverses:
            g = GeneralizedInverse(len(self.simplices.get(p - 1, [])),
                                   len(self.simplices.get(p, [])), self.boundary_entries(p))
            if not g.verify():
                raise ArithmeticError("generalized inverse failed its check in degree %d" % p)
            self.inverses[p] = g
        return self.inverses[p]

    def matrix(self, p: int) -> list[list[Fraction]]:
        return self.inverse(p).matrix()

    def apply(self, cx: CechDeRham, c: CechCochain) -> CechCochain:
        """``T c`` for a top-row cochain in column ``c.p``; lands in column ``c.p + 1``."""
        p = c.p + 1
        rows = {s: i for i, s in enumerate(self.simplices.get(c.p, []))}
        scalar = not cx.domain.parameter_axes
        b = {}
        for s, v in c.entries.items():
            if s not in rows:
                raise ValueError("top-row entry on a non-interior simplex %r" % (s,))
            b[rows[s]] = to_fmpq(v.constant_value()) if scalar else v
        x = self.inverse(p).apply(b)
        cols = self.simplices.get(p, [])
        if scalar:
            return CechCochain(cx, p, c.q, {cols[j]: cx.scalar(rational(v)) for j, v in x.items()})
        return CechCochain(cx, p, c.q, {cols[j]: v for j, v in x.items()})


def build_splitting(nv: Nerve, degrees=None) -> CechSplitting:
    """Generalized inverses of the (relative) top-row boundary maps.

    ``degrees`` limits which ``p`` are built eagerly (all by default); the
    others are built on first use.
    """
    simplices = {p: nv.interior(p) for p in nv.simplices}
    sp = CechSplitting(nv, simplices)
    for p in (degrees if degrees is not None else sorted(simplices)):
        if p >= 1:
            sp.inverse(p)
    return sp


# -- zig-zag --------------------------------------------------------------------

def _sum(cs):
    cs = [c for c in cs if c is not None]
    if not cs:
        return None
    acc = cs[0]
    for c in cs[1:]:
        acc = acc + c
    return acc


def zigzag_lift(cx: CechDeRham, x: CechCochain, alphas: list, direction: str = "row",
                verify: bool = True) -> list[CechCochain]:
    """Lift through a contracted double complex.

    ``direction="row"`` uses ``K`` (rows contracted by the horizontal
    differential): ``beta_0 = K x``, ``beta_i = K(alpha_(i-1) - d_v beta_(i-1))``;
    hypotheses ``d_h alpha_0 = -d_v x`` and ``d_h alpha_(i+1) + d_v alpha_i = 0``;
    conclusions ``d_h beta_0 = x`` and ``d_h beta_(i+1) + d_v beta_i = alpha_i``.

    ``direction="column"`` is the same with the roles of the two
    differentials exchanged and ``L`` in place of ``K``.
    """
    if direction == "row":
        C, first, second = cx.K, cx.d_h, cx.d_v
    elif direction == "column":
        C, first, second = cx.L, cx.d_v, cx.d_h
    else:
        raise ValueError("direction must be 'row' or 'column'")

    def second_or_none(c):
        if c is None:
            return None
        if direction == "row" and c.q > cx.n:
            return None
        if direction == "column" and c.p < 0:
            return None
        if direction == "column" and c.p == 0:
            return None
        return second(c)

    def vanishes(c) -> bool:
        return c is None or c.is_zero()

    if verify:
        s = second_or_none(x)
        lhs = _sum([first(alphas[0]) if alphas else None, s])
        if not vanishes(lhs):
            raise ZigzagHypothesisError("hypothesis on alpha_0 fails")
        for i in range(len(alphas) - 1):
            lhs = _sum([first(alphas[i + 1]), second_or_none(alphas[i])])
            if not vanishes(lhs):
                raise ZigzagHypothesisError("hypothesis on alpha_%d fails" % (i + 1))
    betas = [C(x)]
    for i in range(len(alphas)):
        prev = second_or_none(betas[-1])
        arg = alphas[i] if prev is None else alphas[i] - prev
        betas.append(C(arg))
    if verify:
        if first(betas[0]) != x:
            raise ArithmeticError("zig-zag conclusion fails for beta_0")
        for i in range(len(alphas)):
            lhs = _sum([first(betas[i + 1]), second_or_none(betas[i])])
            if lhs != alphas[i]:
                raise ArithmeticError("zig-zag conclusion fails at step %d" % i)
    return betas


# -- exactness and the primitive ------------------------------------------------

def check_closed(omega: Form) -> None:
    dw = omega.d()
    for idx, f in sorted(dw.components.items()):
        if not omega.domain.restrict(f).is_zero():
            raise NotClosed("d(omega) has nonzero component dx%s" % "^dx".join(map(str, idx)))


def gamma(omega: Form, cx: CechDeRham, verify: bool = True) -> TotalCochain:
    """Cocycle ``gamma`` with ``D gamma = 0`` and ``S(gamma) = omega``."""
    omega = omega.restricted()
    check_closed(omega)
    k = omega.degree
    last = min(cx.nerve.P, cx.n - k)
    comps = {}
    c = cx.K(cx.augmentation(omega))
    for m in range(last + 1):
        comps[m] = c
        if m < last:
            c = -cx.K(cx.d_v(c))
    g = TotalCochain(cx, k, comps)
    if verify:
        if not cx.D(g).is_zero():
            raise ArithmeticError("gamma is not a cocycle")
        if cx.S(g) != omega:
            raise ArithmeticError("S(gamma) != omega")
    return g


@dataclass
class ExactnessCertificate:
    exact: bool
    degree: int
    cycle: CechCochain
    witness: CechCochain | None = None
    residual: CechCochain | None = None
    periods: dict = field(default_factory=dict)

    def summary(self) -> str:
        if self.exact:
            return "exact"
        s = "not_exact: Cech cycle I(gamma) is not a boundary"
        if self.periods:
            s += "; periods " + ", ".join("%s=%s" % (k, v) for k, v in sorted(self.periods.items()))
        return s

    def to_dict(self) -> dict:
        out = {"status": "exact" if self.exact else "not_exact", "degree": self.degree,
               "cycle": self.cycle.to_dict()}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        if self.residual is not None:
            out["residual"] = self.residual.to_dict()
        if self.periods:
            out["periods"] = {k: v if isinstance(v, dict) else fraction_str(v)
                              for k, v in sorted(self.periods.items())}
        return out


def _torus_periods(omega: Form) -> dict:
    dom = omega.domain
    circles = [a for a in dom.manifold_axes if dom.axes[a].is_circle]
    out = {}
    if omega.degree != 2 or dom.parameter_axes:
        return out
    base = {a: 0 for a in dom.manifold_axes}
    for i in circles:
        for j in circles:
            if i < j:
                out["%d,%d" % (i, j)] = periods(omega, (i, j), base)
    return out


def exactness(omega: Form, cx: CechDeRham, splitting: CechSplitting,
              g: TotalCochain | None = None) -> ExactnessCertificate:
    k = omega.degree
    if g is None:
        g = gamma(omega, cx)
    cyc = cx.I(g)
    if k == 0:
        # Compactly supported constants: the class is the value itself.
        exact = omega.is_zero()
        return ExactnessCertificate(exact, k, cyc)
    x = splitting.apply(cx, cyc)
    residual = cx.d_h(x) - cyc
    if residual.is_zero():
        return ExactnessCertificate(True, k, cyc, witness=x)
    return ExactnessCertificate(False, k, cyc, witness=x, residual=residual,
                                periods=_torus_periods(omega))


def is_exact(omega: Form, cover_or_cx, splitting: CechSplitting | None = None):
    """``("exact" | "not_exact", certificate)``."""
    cx, splitting = _prepare(cover_or_cx, splitting)
    cert = exactness(omega, cx, splitting)
    return ("exact" if cert.exact else "not_exact"), cert


def _prepare(cover_or_cx, splitting):
    if isinstance(cover_or_cx, CechDeRham):
        cx = cover_or_cx
    elif isinstance(cover_or_cx, Nerve):
        cx = CechDeRham(cover_or_cx)
    elif isinstance(cover_or_cx, Cover):
        cx = CechDeRham(nerve(cover_or_cx, max_dim=cover_or_cx.domain.n))
    else:
        raise TypeError("expected a Cover, Nerve or CechDeRham")
    if splitting is None:
        splitting = build_splitting(cx.nerve, degrees=())
    return cx, splitting


def delta(cx: CechDeRham, g: TotalCochain, witness: CechCochain) -> TotalCochain:
    """``delta`` with ``D delta = gamma`` given ``d_h witness = I(gamma)``."""
    k = g.degree
    top = cx.n - k + 1
    sgn = -1 if top % 2 else 1
    comps = {}
    c = cx.L(witness).scale(sgn)
    comps[top] = c
    for m in range(top - 1, -1, -1):
        arg = g.component(m) - cx.d_h(c)
        c = cx.L(arg)
        comps[m] = c
    return TotalCochain(cx, k - 1, comps)


@dataclass
class PrimitiveResult:
    beta: Form
    gamma: TotalCochain
    delta: TotalCochain
    certificate: ExactnessCertificate
    verified: bool


def primitive_result(omega: Form, cover_or_cx, splitting: CechSplitting | None = None,
                     verify: bool = True) -> PrimitiveResult:
    cx, splitting = _prepare(cover_or_cx, splitting)
    omega = omega.restricted()
    k = omega.degree
    if k == 0:
        raise ValueError("a 0-form has no primitive")
    g = gamma(omega, cx, verify=verify)
    cert = exactness(omega, cx, splitting, g)
    if not cert.exact:
        raise NotExact(cert)
    dl = delta(cx, g, cert.witness)
    beta = cx.S(dl).restricted()
    ok = True
    if verify:
        if cx.D(dl) != g:
            raise ArithmeticError("D(delta) != gamma")
        ok = beta.d() == omega
        if not ok:
            raise ArithmeticError("d(beta) != omega")
    return PrimitiveResult(beta, g, dl, cert, ok)


def primitive(omega: Form, cover_or_cx, splitting: CechSplitting | None = None,
              verify: bool = True) -> Form:
    """A primitive of the exact form ``omega``; linear in ``omega`` for fixed data."""
    return primitive_result(omega, cover_or_cx, splitting, verify).beta


def primitive_family(omega: Form, cover_or_cx, splitting: CechSplitting | None = None,
                     verify: bool = True) -> Form:
    """Same as :func:`primitive` with parameter axes carried in coefficients.

    Every operator is multiplication by, or integration along, manifold
    data, so wherever ``omega`` vanishes in the parameters so does the
    result.
    """
    if not omega.domain.parameter_axes:
        raise ValueError("primitive_family expects a domain with parameter axes")
    return primitive(omega, cover_or_cx, splitting, verify)


def explicit_delta(cx: CechDeRham, g: TotalCochain, witness: CechCochain) -> TotalCochain:
    """``delta`` through the generic column zig-zag lift (used as a cross-check).

    Runs :func:`zigzag_lift` with ``x = T I(gamma)``,
    ``alpha_i = (-1)^(n-k-1) gamma^(n-k-i)`` and scales the sum by the same
    sign.
    """
    k = g.degree
    top = cx.n - k
    s = -1 if (top - 1) % 2 else 1
    alphas = [g.component(top - i).scale(s) for i in range(top + 1)]
    betas = zigzag_lift(cx, witness, alphas, direction="column", verify=False)
    comps = {}
    for b in betas:
        comps[b.p] = comps[b.p] + b.scale(s) if b.p in comps else b.scale(s)
    return TotalCochain(cx, k - 1, comps)


def scalar_value(v) -> Fraction:
    """Rational value of a top-row entry on a domain without parameters."""
    return v.constant_value() if isinstance(v, PPFunction) else Fraction(v)
