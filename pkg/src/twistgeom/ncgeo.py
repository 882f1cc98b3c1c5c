"""Star-product differential geometry in a commuting invariant frame.

All curvature formulas act on the coefficient functions of tensors in a
local frame e_a satisfying [e_a, e_b] = 0 and [X, e_a] = 0 for every twist
generator X.  In such a frame the deformed Levi-Civita connection, torsion,
curvature and Einstein tensors are assembled from star products of the
metric coefficients alone.  A plain-product code path computes the classical
counterparts independently for cross-checking the order-0 coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .series import LambdaSeries, NotInvertible
from .symbolic import Expr, ExprDomain, is_zero_sympy
from .twistalg import StarContext, conjugate_series, lie_bracket


class PreconditionFailed(ValueError):
    pass


class FrameBundle:
    """Commuting invariant frame, metric coefficients and volume factor."""

    def __init__(self, chart, frame, metric, volume_factor, twist, dual_names=None):
        self.chart = chart
        self.frame = list(frame)
        self.dim = len(frame)
        self.g = [[_as_expr(chart, metric[a][b]) for b in range(self.dim)]
                  for a in range(self.dim)]
        self.gamma = _as_expr(chart, volume_factor)
        self.twist = twist
        self.dual_names = dual_names or [f"theta{a}" for a in range(self.dim)]
        self.ctx = StarContext(twist)
        self.domain = ExprDomain(chart)

    @property
    def order(self):
        return self.twist.order

    def e(self, a, h):
        """Frame derivative of a field or of a series, coefficientwise."""
        if isinstance(h, LambdaSeries):
            return h.map(lambda c: self.frame[a].apply(c))
        return self.frame[a].apply(h)


def _as_expr(chart, v):
    return v if isinstance(v, Expr) else chart.expr(v)


@dataclass
class FrameReport:
    ok: bool
    witness: object = None


def validate_frame(fb):
    """Check [e_a, e_b] = 0 and [X, e_a] = 0 for all twist generators."""
    for a in range(fb.dim):
        for b in range(a + 1, fb.dim):
            br = lie_bracket(fb.frame[a], fb.frame[b])
            if not all(c.is_zero() for c in br.components.values()):
                return FrameReport(False, ("frame", a, b, br))
    for i, X in enumerate(fb.twist.generators):
        for a in range(fb.dim):
            br = lie_bracket(X, fb.frame[a])
            if not all(c.is_zero() for c in br.components.values()):
                return FrameReport(False, ("twist", i, a, br))
    return FrameReport(True)


@dataclass
class CurvatureBundle:
    christoffel: dict
    torsion: dict
    riemann: dict
    ricci: dict
    scalar: LambdaSeries
    einstein: dict = field(default_factory=dict)


def christoffel_star(fb, ginv=None):
    """Gamma_{ab}^c = (1/2) g^{cd} * (e_a g_bd + e_b g_ad - e_d g_ab).

    Symmetric in (a, b) by construction, hence torsion-free.
    """
    ctx = fb.ctx
    if ginv is None:
        ginv = ctx.star_inverse_matrix(fb.g)
    dim = fb.dim
    dg = {}
    for a in range(dim):
        for b in range(dim):
            for d in range(dim):
                dg[(a, b, d)] = fb.e(a, fb.g[b][d])
    gamma = {}
    for a in range(dim):
        for b in range(a, dim):
            for c in range(dim):
                acc = LambdaSeries.zero(fb.domain, fb.order)
                for d in range(dim):
                    bracket = dg[(a, b, d)] + dg[(b, a, d)] - dg[(d, a, b)]
                    if _syntactically_zero(bracket) or _syntactically_zero(ginv[c][d]):
                        continue
                    acc = acc + ctx.star(ginv[c][d], bracket)
                val = _half_series(acc)
                gamma[(a, b, c)] = val
                gamma[(b, a, c)] = val
    return gamma


def _syntactically_zero(series):
    return all(c.s == 0 for c in series.coeffs)


def _half_series(s):
    return s.map(lambda e: Expr._wrap(e.chart, sp.expand(e.s / 2)))


def _cancel_series(s):
    return s.map(lambda e: Expr._wrap(e.chart, sp.cancel(sp.together(e.s))))


def curvature_star(fb, gamma=None, ginv=None):
    """Torsion, curvature, Ricci, scalar and Einstein tensors of the frame."""
    ctx = fb.ctx
    if ginv is None:
        ginv = ctx.star_inverse_matrix(fb.g)
    if gamma is None:
        gamma = christoffel_star(fb, ginv)
    dim = fb.dim
    zero = LambdaSeries.zero(fb.domain, fb.order)

    torsion = {
        (a, b, c): gamma[(a, b, c)] - gamma[(b, a, c)]
        for a in range(dim)
        for b in range(dim)
        for c in range(dim)
    }

    riemann = {}
    for a in range(dim):
        for b in range(dim):
            if a == b:
                for c in range(dim):
                    for d in range(dim):
                        riemann[(a, b, c, d)] = zero
                continue
            if a > b:
                for c in range(dim):
                    for d in range(dim):
                        riemann[(a, b, c, d)] = -riemann[(b, a, c, d)]
                continue
            for c in range(dim):
                for d in range(dim):
                    acc = fb.e(a, gamma[(b, c, d)]) - fb.e(b, gamma[(a, c, d)])
                    for e in range(dim):
                        if not (_syntactically_zero(gamma[(b, c, e)])
                                or _syntactically_zero(gamma[(a, e, d)])):
                            acc = acc + ctx.star(gamma[(b, c, e)], gamma[(a, e, d)])
                        if not (_syntactically_zero(gamma[(a, c, e)])
                                or _syntactically_zero(gamma[(b, e, d)])):
                            acc = acc - ctx.star(gamma[(a, c, e)], gamma[(b, e, d)])
                    riemann[(a, b, c, d)] = _cancel_series(acc)

    ricci = {}
    for a in range(dim):
        for b in range(dim):
            acc = zero
            for c in range(dim):
                acc = acc + riemann[(c, a, b, c)]
            ricci[(a, b)] = acc

    scalar = zero
    for a in range(dim):
        for b in range(dim):
            if _syntactically_zero(ricci[(a, b)]) or _syntactically_zero(ginv[a][b]):
                continue
            scalar = scalar + ctx.star(ginv[a][b], ricci[(a, b)])
    scalar = _cancel_series(scalar)

    einstein = {}
    for a in range(dim):
        for b in range(dim):
            einstein[(a, b)] = _cancel_series(
                ricci[(a, b)] - _half_series(ctx.star(fb.g[a][b], scalar))
            )

    return CurvatureBundle(gamma, torsion, riemann, ricci, scalar, einstein)


def einstein_star(fb):
    return curvature_star(fb).einstein


# -- classical oracle (plain products, no twist machinery) ------------------


def classical_christoffel(fb):
    dim = fb.dim
    g0 = sp.Matrix(dim, dim, lambda a, b: fb.g[a][b].s)
    ginv = g0.inv().applyfunc(sp.cancel)
    dg = {}
    for a in range(dim):
        for b in range(dim):
            for d in range(dim):
                dg[(a, b, d)] = fb.frame[a].apply(fb.g[b][d]).s
    gamma = {}
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                acc = sp.S.Zero
                for d in range(dim):
                    acc += ginv[c, d] * (dg[(a, b, d)] + dg[(b, a, d)] - dg[(d, a, b)])
                gamma[(a, b, c)] = sp.cancel(sp.expand(acc / 2))
    return gamma


def classical_curvature(fb):
    """Classical curvature data from plain products in the same frame."""
    dim = fb.dim
    chart = fb.chart
    gamma = classical_christoffel(fb)
    g0 = sp.Matrix(dim, dim, lambda a, b: fb.g[a][b].s)
    ginv = g0.inv().applyfunc(sp.cancel)

    def d(a, expr):
        return fb.frame[a].apply(Expr._wrap(chart, expr)).s

    riemann = {}
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                for e in range(dim):
                    acc = d(a, gamma[(b, c, e)]) - d(b, gamma[(a, c, e)])
                    for f in range(dim):
                        acc += gamma[(b, c, f)] * gamma[(a, f, e)]
                        acc -= gamma[(a, c, f)] * gamma[(b, f, e)]
                    riemann[(a, b, c, e)] = sp.cancel(sp.expand(acc))
    ricci = {}
    for a in range(dim):
        for b in range(dim):
            ricci[(a, b)] = sp.cancel(
                sp.expand(sum(riemann[(c, a, b, c)] for c in range(dim)))
            )
    scalar = sp.cancel(
        sp.expand(
            sum(ginv[a, b] * ricci[(a, b)] for a in range(dim) for b in range(dim))
        )
    )
    einstein = {}
    for a in range(dim):
        for b in range(dim):
            einstein[(a, b)] = sp.cancel(
                sp.expand(ricci[(a, b)] - fb.g[a][b].s * scalar / 2)
            )
    return {
        "christoffel": gamma,
        "riemann": riemann,
        "ricci": ricci,
        "scalar": scalar,
        "einstein": einstein,
    }


# -- vanishing-correction theorem as an executable check --------------------


@dataclass
class KillingReport:
    ok: bool
    verified: list
    annihilators: list
    detail: str = ""


def _annihilating_combination(twist, block, fields):
    """Constant (u, v) with (u X_a + v X_b)(f) = 0 for all fields, if any.

    The twist stays fixed under X_a -> X_a, X_b -> u X_a + v X_b rescalings
    inside one canonical 2x2 block, so a single annihilating direction per
    block makes every star product of invariant coefficients collapse.
    """
    a, b = block
    Xa, Xb = twist.generators[a], twist.generators[b]
    da = [Xa.apply(f) for f in fields]
    db = [Xb.apply(f) for f in fields]
    if all(x.is_zero() for x in da):
        return (1, 0)
    if all(x.is_zero() for x in db):
        return (0, 1)
    # try u*Xa + Xb with constant u fixed by the first non-annihilated field
    for fa, fbv in zip(da, db):
        if not fa.is_zero():
            u = sp.cancel(-fbv.s / fa.s)
            if not u.free_symbols.isdisjoint(twist.chart.coords):
                return None
            break
    for fa, fbv in zip(da, db):
        if not is_zero_sympy(u * fa.s + fbv.s):
            return None
    return (u, 1)


def check_killing_reduction(fb, matter=(), curvature=None):
    """Verify that all corrections to the geometry vanish for a Killing twist.

    Precondition: within each canonical 2x2 block of the twist some constant
    combination of the two generators annihilates every metric coefficient,
    the volume factor and all supplied matter fields.  On success every
    lambda^n (n >= 1) coefficient of Gamma, T, Riem, Ric, scalar and G is
    asserted to vanish identically.
    """
    fields = [fb.g[a][b] for a in range(fb.dim) for b in range(fb.dim)]
    fields.append(fb.gamma)
    fields.extend(_as_expr(fb.chart, m) for m in matter)
    annihilators = []
    for block in fb.twist.blocks():
        combo = _annihilating_combination(fb.twist, block, fields)
        if combo is None:
            raise PreconditionFailed(
                f"no annihilating generator combination in block {block}"
            )
        annihilators.append((block, combo))

    if curvature is None:
        curvature = curvature_star(fb)
    verified = []
    named = [
        ("christoffel", curvature.christoffel.values()),
        ("torsion", curvature.torsion.values()),
        ("riemann", curvature.riemann.values()),
        ("ricci", curvature.ricci.values()),
        ("scalar", [curvature.scalar]),
        ("einstein", curvature.einstein.values()),
    ]
    for name, seq in named:
        for series in seq:
            for n in range(1, series.order + 1):
                if not is_zero_sympy(series.coeffs[n].s):
                    return KillingReport(
                        False,
                        verified,
                        annihilators,
                        f"{name} has a surviving lambda^{n} coefficient",
                    )
        verified.append(name)
    return KillingReport(True, verified, annihilators)


# -- conformally flat closed forms ------------------------------------------


def conformal_velocity(ctx, phi, eta):
    """u_mu = (1/2) phi^{-*} * d_mu phi on a flat-frame chart."""
    chart = ctx.chart
    inv = ctx.star_inverse(phi)
    out = []
    for mu, c in enumerate(chart.coords):
        dphi = Expr._wrap(chart, sp.expand(sp.diff(phi.s, c)))
        out.append(_half_series(ctx.star(inv, dphi)))
    return out


def conformal_christoffel_closed(ctx, phi, eta):
    """u_mu delta_nu^rho + u_nu delta_mu^rho - u^rho eta_{mu nu}."""
    chart = ctx.chart
    u = conformal_velocity(ctx, phi, eta)
    dim = len(chart.coords)
    uup = [_eta_scale(u, eta, rho) for rho in range(dim)]
    out = {}
    for mu in range(dim):
        for nu in range(dim):
            for rho in range(dim):
                acc = LambdaSeries.zero(ctx.domain, ctx.twist.order)
                if nu == rho:
                    acc = acc + u[mu]
                if mu == rho:
                    acc = acc + u[nu]
                if eta[mu][nu] != 0:
                    acc = acc - eta[mu][nu] * uup[rho]
                out[(mu, nu, rho)] = acc
    return out


def _eta_scale(u, eta, rho):
    # raise the index with the constant flat metric
    acc = None
    dim = len(u)
    for s in range(dim):
        if eta[rho][s] == 0:
            continue
        term = _inv_int(eta[rho][s]) * u[s]
        acc = term if acc is None else acc + term
    return acc


def _inv_int(v):
    return sp.Rational(1, v) if v in (1, -1) else sp.Rational(1) / sp.Rational(v)


def conformal_ricci_closed(ctx, phi, eta):
    """d_nu u_mu - (N-1) d_mu u_nu - d.u eta_{mu nu} + (N-2)(u_mu*u_nu - u.u eta_{mu nu})."""
    chart = ctx.chart
    dim = len(chart.coords)
    u = conformal_velocity(ctx, phi, eta)
    uup = [_eta_scale(u, eta, rho) for rho in range(dim)]

    def dmu(mu, series):
        c = chart.coords[mu]
        return series.map(lambda e: Expr._wrap(chart, sp.expand(sp.diff(e.s, c))))

    div = None
    for rho in range(dim):
        term = dmu(rho, uup[rho])
        div = term if div is None else div + term
    usq = None
    for rho in range(dim):
        term = ctx.star(u[rho], uup[rho])
        usq = term if usq is None else usq + term

    out = {}
    for mu in range(dim):
        for nu in range(dim):
            acc = dmu(nu, u[mu]) - (dim - 1) * dmu(mu, u[nu])
            if eta[mu][nu] != 0:
                acc = acc - eta[mu][nu] * div
                acc = acc - (dim - 2) * (eta[mu][nu] * usq)
            acc = acc + (dim - 2) * ctx.star(u[mu], u[nu])
            out[(mu, nu)] = acc
    return out


def conformal_scalar_closed(ctx, phi, eta):
    """phi^{-*} * (2(1-N) d.u - (N-2)(N-1) u.u)."""
    chart = ctx.chart
    dim = len(chart.coords)
    u = conformal_velocity(ctx, phi, eta)
    uup = [_eta_scale(u, eta, rho) for rho in range(dim)]

    def dmu(mu, series):
        c = chart.coords[mu]
        return series.map(lambda e: Expr._wrap(chart, sp.expand(sp.diff(e.s, c))))

    div = None
    for rho in range(dim):
        term = dmu(rho, uup[rho])
        div = term if div is None else div + term
    usq = None
    for rho in range(dim):
        term = ctx.star(u[rho], uup[rho])
        usq = term if usq is None else usq + term
    inner = 2 * (1 - dim) * div - (dim - 2) * (dim - 1) * usq
    return ctx.star(ctx.star_inverse(phi), inner)


def inverse_metric_compat_defect(ctx, phi, eta, mu=0):
    """d_mu g^{nu rho} + g^{tau rho} * Gamma_{mu tau}^nu + g^{nu tau} * Gamma_{mu tau}^rho.

    For a conformally flat metric this equals
    (-phi^{-*} * d_mu phi * phi^{-*} + phi^{-2*} * d_mu phi) eta^{nu rho},
    which carries a nonvanishing lambda coefficient whenever the twist acts
    nontrivially on phi.
    """
    chart = ctx.chart
    inv = ctx.star_inverse(phi)
    dphi = Expr._wrap(chart, sp.expand(sp.diff(phi.s, chart.coords[mu])))
    first = ctx.star(ctx.star(inv, dphi), inv)
    second = ctx.star(ctx.star(inv, inv), dphi)
    return second - first


def star_conjugation_relation(ctx, phi, series_a, series_b):
    """Check (a)^* = phi * b * phi^{-*} order by order; returns the defect."""
    inv = ctx.star_inverse(phi)
    rhs = ctx.star(ctx.star(phi, series_b), inv)
    return conjugate_series(series_a) - rhs
