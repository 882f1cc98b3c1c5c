"""Deformed scalar wave operators for the model catalog.

Operators are finite sums of partial-derivative monomials with field
coefficients, stored per multi-index.  Star multiplication from the left or
right by a field is itself such an operator at every order, so the full
equation-of-motion operator assembles as a truncated series of operators by
composition; exponential shift operators are never materialized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import sympy as sp

from .series import Domain, LambdaSeries, NotInvertible
from .symbolic import Chart, Expr, is_zero_sympy
from .twistalg import AbelianTwist, StarContext, VectorField, canonical_theta
from .ncgeo import FrameBundle


class UnknownModel(ValueError):
    pass


class BadParams(ValueError):
    pass


MODEL_IDS = (
    "moyal-minkowski",
    "kappa-minkowski",
    "desitter-isotropic",
    "desitter-timeangle",
    "desitter-angleradius",
    "schwarzschild-timeradius",
    "homothetic-frw",
    "ads-rs",
    "z2-euclid",
    "compact-frw",
)


class DiffOp:
    """Finite sum of terms coeff(x) * d^I over a chart, keyed by multi-index."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms=None):
        self.chart = chart
        clean = {}
        for idx, c in (terms or {}).items():
            cs = c.s if isinstance(c, Expr) else sp.sympify(c, rational=True)
            cs = sp.expand(cs)
            if cs != 0:
                clean[tuple(idx)] = cs
        self.terms = clean

    @classmethod
    def identity(cls, chart):
        return cls(chart, {(0,) * len(chart.coords): sp.S.One})

    @classmethod
    def mult(cls, chart, coeff):
        return cls(chart, {(0,) * len(chart.coords): coeff})

    @classmethod
    def partial(cls, chart, coord, n=1):
        idx = [0] * len(chart.coords)
        idx[chart.coords.index(chart.coord(coord) if isinstance(coord, str) else coord)] = n
        return cls(chart, {tuple(idx): sp.S.One})

    @classmethod
    def from_vector_field(cls, v):
        terms = {}
        coords = v.chart.coords
        for sym, c in v.components.items():
            idx = [0] * len(coords)
            idx[coords.index(sym)] = 1
            terms[tuple(idx)] = c.s
        return cls(v.chart, terms)

    def apply(self, f):
        fs = f.s if isinstance(f, Expr) else sp.sympify(f)
        tot = sp.S.Zero
        for idx, c in self.terms.items():
            d = fs
            for x, m in zip(self.chart.coords, idx):
                if m:
                    d = sp.diff(d, x, m)
            tot += c * d
        return Expr._wrap(self.chart, sp.expand(tot))

    def __add__(self, other):
        terms = dict(self.terms)
        for idx, c in other.terms.items():
            terms[idx] = terms.get(idx, sp.S.Zero) + c
        return DiffOp(self.chart, terms)

    def __neg__(self):
        return DiffOp(self.chart, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        cs = c.s if isinstance(c, Expr) else sp.sympify(c)
        return DiffOp(self.chart, {i: cs * v for i, v in self.terms.items()})

    def compose(self, other):
        """(A o B)(f) = A(B(f)) via the Leibniz expansion of d^I(b d^J)."""
        out = {}
        coords = self.chart.coords
        for I, a in self.terms.items():
            for J, b in other.terms.items():
                for K in itertools.product(*[range(i + 1) for i in I]):
                    co = 1
                    for i, k in zip(I, K):
                        co *= sp.binomial(i, k)
                    db = b
                    for x, m in zip(coords, K):
                        if m:
                            db = sp.diff(db, x, m)
                    if db == 0:
                        continue
                    idx = tuple(i - k + j for i, k, j in zip(I, K, J))
                    out[idx] = out.get(idx, sp.S.Zero) + a * co * db
        return DiffOp(self.chart, out)

    def cancel(self):
        return DiffOp(
            self.chart, {i: sp.cancel(sp.together(c)) for i, c in self.terms.items()}
        )

    def is_zero(self):
        return all(is_zero_sympy(c) for c in self.terms.values())

    def eq(self, other):
        return (self - other).is_zero()

    def order(self):
        return max((sum(i) for i in self.terms), default=0)

    def __repr__(self):
        if not self.terms:
            return "DiffOp(0)"
        bits = []
        for idx in sorted(self.terms):
            mono = "".join(
                f"d_{x}^{m}" if m > 1 else f"d_{x}"
                for x, m in zip(self.chart.coords, idx)
                if m
            )
            bits.append(f"({self.terms[idx]}){mono or ''}")
        return "DiffOp[" + " + ".join(bits) + "]"


class DiffOpDomain(Domain):
    """Series coefficient domain of differential operators on one chart."""

    def __init__(self, chart):
        self.chart = chart

    def zero(self):
        return DiffOp(self.chart)

    def one(self):
        return DiffOp.identity(self.chart)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a.compose(b)

    def eq(self, a, b):
        return a.eq(b)

    def is_zero(self, a):
        return a.is_zero()

    def halve(self, a):
        return a.scale(sp.Rational(1, 2))

    def coerce(self, x):
        if isinstance(x, DiffOp):
            return x
        return DiffOp.mult(self.chart, x)


class StarOperators:
    """Left/right star-multiplication by fields, as operator series."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.chart = ctx.chart
        self.domain = DiffOpDomain(ctx.chart)
        self._words = {}

    def _word(self, indices):
        hit = self._words.get(indices)
        if hit is None:
            op = DiffOp.identity(self.chart)
            for a in indices:
                op = DiffOp.from_vector_field(self.ctx.twist.generators[a]).compose(op)
            self._words[indices] = op
            hit = op
        return hit

    def _mult_kernel(self, h, n, side):
        """Order-n operator part of psi -> h * psi (left) or psi * h (right)."""
        hs = h.s if isinstance(h, Expr) else sp.sympify(h)
        if n == 0:
            return DiffOp.mult(self.chart, hs)
        twist = self.ctx.twist
        X = twist.generators
        c = (sp.I / 2) ** n / sp.factorial(n)
        out = DiffOp(self.chart)
        for combo in itertools.product(twist.pairs, repeat=n):
            coeff = Fraction(1)
            for _, _, v in combo:
                coeff *= v
            if side == "left":
                coef_idx = [a for a, _, _ in combo]
                op_idx = tuple(b for _, b, _ in combo)
            else:
                coef_idx = [b for _, b, _ in combo]
                op_idx = tuple(a for a, _, _ in combo)
            ha = hs
            for a in coef_idx:
                ha = _vf_sympy(X[a], ha)
                if ha == 0:
                    break
            if ha == 0:
                continue
            scale = c * sp.Rational(coeff.numerator, coeff.denominator) * ha
            out = out + self._word(op_idx).scale(scale)
        return out

    def left_mult(self, h, order):
        """h as a series or field; returns the operator series of h * (.)."""
        H = self.ctx.promote(h).truncate(order)
        coeffs = []
        for n in range(order + 1):
            acc = DiffOp(self.chart)
            for k in range(n + 1):
                acc = acc + self._mult_kernel(H.coeffs[k], n - k, "left")
            coeffs.append(acc)
        return LambdaSeries(self.domain, coeffs)

    def right_mult(self, h, order):
        H = self.ctx.promote(h).truncate(order)
        coeffs = []
        for n in range(order + 1):
            acc = DiffOp(self.chart)
            for k in range(n + 1):
                acc = acc + self._mult_kernel(H.coeffs[k], n - k, "right")
            coeffs.append(acc)
        return LambdaSeries(self.domain, coeffs)

    def constant(self, op, order):
        return LambdaSeries.constant(self.domain, op, order)


def _vf_sympy(v, fs):
    tot = sp.S.Zero
    for sym, c in v.components.items():
        tot += c.s * sp.diff(fs, sym)
    return sp.expand(tot)


def operator_exp_series(op, a, order, chart):
    """exp(a * lambda * op) truncated: order-n coefficient a^n/n! op^n."""
    dom = DiffOpDomain(chart)
    coeffs = [DiffOp.identity(chart)]
    power = DiffOp.identity(chart)
    for n in range(1, order + 1):
        power = power.compose(op)
        coeffs.append(power.scale(sp.sympify(a) ** n / sp.factorial(n)))
    return LambdaSeries(dom, coeffs)


def operator_cosh_series(op, a, order, chart):
    plus = operator_exp_series(op, a, order, chart)
    minus = operator_exp_series(op, -sp.sympify(a), order, chart)
    return (plus + minus).map(lambda o: o.scale(sp.Rational(1, 2)))


# -- model catalog ------------------------------------------------------------


@dataclass
class ModelBundle:
    model_id: str
    chart: Chart
    twist: AbelianTwist
    frame_bundle: object  # FrameBundle or None when no commuting frame exists
    mass2: object
    xi: object
    potential: object  # the full mass/curvature weight W = M^2 + xi * Ric
    coord_metric: list  # lower-index coordinate metric coefficients
    coord_density: object  # sqrt(|det g|) in the coordinate basis
    params: dict = dc_field(default_factory=dict)

    @property
    def ctx(self):
        return self.frame_bundle.ctx if self.frame_bundle else StarContext(self.twist)


def _spherical_chart(params=(), positive_params=()):
    return Chart(
        "spherical",
        ("t", "r", "zeta", "phi"),
        tuple(params),
        positive=("r",) + tuple(positive_params),
    )


def build_model(model_id, order=4, **params):
    """Frame, metric, volume factor and twist of one catalog model."""
    if model_id not in MODEL_IDS:
        raise UnknownModel(model_id)
    builder = {
        "moyal-minkowski": _moyal_minkowski,
        "kappa-minkowski": _kappa_minkowski,
        "desitter-isotropic": _desitter_isotropic,
        "desitter-timeangle": _desitter_timeangle,
        "desitter-angleradius": _desitter_angleradius,
        "schwarzschild-timeradius": _schwarzschild,
        "homothetic-frw": _homothetic_frw,
        "ads-rs": _ads_rs,
        "z2-euclid": _z2_euclid,
        "compact-frw": _compact_frw,
    }[model_id]
    return builder(order, params)


def _mass_param(chart, params, default_name="M2"):
    v = params.get("mass2", default_name)
    if isinstance(v, str):
        return chart.expr(chart.param(v))
    return chart.expr(v)


def _moyal_minkowski(order, params):
    chart = Chart("cartesian", ("t", "x1", "x2", "x3"), ("M2",))
    gens = [VectorField(chart, {c: 1}) for c in ("t", "x1", "x2", "x3")]
    twist = AbelianTwist(chart, gens, order=order)
    eta = [[0] * 4 for _ in range(4)]
    eta[0][0] = -1
    for i in range(1, 4):
        eta[i][i] = 1
    fb = FrameBundle(chart, gens, eta, 1, twist)
    m2 = _mass_param(chart, params)
    return ModelBundle(
        "moyal-minkowski", chart, twist, fb, m2, chart.expr(0), m2,
        [[chart.expr(eta[a][b]) for b in range(4)] for a in range(4)],
        chart.expr(1), params,
    )


def _radial_frame(chart):
    return [
        VectorField(chart, {"t": 1}),
        VectorField(chart, {"r": chart.coord("r")}),
        VectorField(chart, {"zeta": 1}),
        VectorField(chart, {"phi": 1}),
    ]


def _spherical_coordinate_frame(chart):
    return [VectorField(chart, {c: 1}) for c in ("t", "r", "zeta", "phi")]


def _diag(chart, entries):
    dim = len(entries)
    return [
        [chart.expr(entries[a]) if a == b else chart.expr(0) for b in range(dim)]
        for a in range(dim)
    ]


def _kappa_minkowski(order, params):
    chart = _spherical_chart(("M2",))
    r, zeta = chart.coord("r"), chart.coord("zeta")
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"r": r}), VectorField(chart, {"t": 1})],
        order=order,
    )
    g = _diag(chart, [-1, r**2, r**2, (r * sp.sin(zeta)) ** 2])
    fb = FrameBundle(chart, _radial_frame(chart), g, r**3 * sp.sin(zeta), twist)
    m2 = _mass_param(chart, params)
    coord = _diag(chart, [-1, 1, r**2, (r * sp.sin(zeta)) ** 2])
    return ModelBundle(
        "kappa-minkowski", chart, twist, fb, m2, chart.expr(0), m2,
        coord, chart.expr(r**2 * sp.sin(zeta)), params,
    )


def _desitter_isotropic(order, params):
    chart = _spherical_chart(("M2", "H"), positive_params=("H",))
    r, zeta, t, H = (chart.coord("r"), chart.coord("zeta"), chart.coord("t"),
                     chart.param("H"))
    a2 = sp.exp(2 * H * t)
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"r": r}), VectorField(chart, {"t": 1})],
        order=order,
    )
    g = _diag(chart, [-1, a2 * r**2, a2 * r**2, a2 * (r * sp.sin(zeta)) ** 2])
    fb = FrameBundle(
        chart, _radial_frame(chart), g, sp.exp(3 * H * t) * r**3 * sp.sin(zeta), twist
    )
    m2 = _mass_param(chart, params)
    coord = _diag(chart, [-1, a2, a2 * r**2, a2 * (r * sp.sin(zeta)) ** 2])
    return ModelBundle(
        "desitter-isotropic", chart, twist, fb, m2, chart.expr(0), m2,
        coord, chart.expr(sp.exp(3 * H * t) * r**2 * sp.sin(zeta)), params,
    )


def _desitter_timeangle(order, params):
    chart = _spherical_chart(("M2", "H"), positive_params=("H",))
    r, zeta, t, H = (chart.coord("r"), chart.coord("zeta"), chart.coord("t"),
                     chart.param("H"))
    a2 = sp.exp(2 * H * t)
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"phi": 1}), VectorField(chart, {"t": 1})],
        order=order,
    )
    g = _diag(chart, [-1, a2, a2 * r**2, a2 * (r * sp.sin(zeta)) ** 2])
    fb = FrameBundle(
        chart,
        _spherical_coordinate_frame(chart),
        g,
        sp.exp(3 * H * t) * r**2 * sp.sin(zeta),
        twist,
    )
    m2 = _mass_param(chart, params)
    return ModelBundle(
        "desitter-timeangle", chart, twist, fb, m2, chart.expr(0), m2,
        g, chart.expr(sp.exp(3 * H * t) * r**2 * sp.sin(zeta)), params,
    )


def _desitter_angleradius(order, params):
    chart = _spherical_chart(("M2", "H"), positive_params=("H",))
    r, zeta, t, H = (chart.coord("r"), chart.coord("zeta"), chart.coord("t"),
                     chart.param("H"))
    a2 = sp.exp(2 * H * t)
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"phi": 1}), VectorField(chart, {"r": r})],
        order=order,
    )
    g = _diag(chart, [-1, a2 * r**2, a2 * r**2, a2 * (r * sp.sin(zeta)) ** 2])
    fb = FrameBundle(
        chart, _radial_frame(chart), g, sp.exp(3 * H * t) * r**3 * sp.sin(zeta), twist
    )
    m2 = _mass_param(chart, params)
    coord = _diag(chart, [-1, a2, a2 * r**2, a2 * (r * sp.sin(zeta)) ** 2])
    return ModelBundle(
        "desitter-angleradius", chart, twist, fb, m2, chart.expr(0), m2,
        coord, chart.expr(sp.exp(3 * H * t) * r**2 * sp.sin(zeta)), params,
    )


def _schwarzschild(order, params):
    chart = _spherical_chart(("M2", "r_s"), positive_params=("r_s",))
    r, zeta, rs = chart.coord("r"), chart.coord("zeta"), chart.param("r_s")
    Q = 1 - rs / r
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"t": 1}), VectorField(chart, {"r": r})],
        order=order,
    )
    g = _diag(chart, [-Q, r**2 / Q, r**2, (r * sp.sin(zeta)) ** 2])
    fb = FrameBundle(chart, _radial_frame(chart), g, r**3 * sp.sin(zeta), twist)
    m2 = _mass_param(chart, params)
    coord = _diag(chart, [-Q, 1 / Q, r**2, (r * sp.sin(zeta)) ** 2])
    return ModelBundle(
        "schwarzschild-timeradius", chart, twist, fb, m2, chart.expr(0), m2,
        coord, chart.expr(r**2 * sp.sin(zeta)), params,
    )


def _homothetic_frw(order, params):
    chart = Chart("frw", ("t", "x1", "x2", "x3"), ("xi",), positive=("t",))
    t = chart.coord("t")
    xi = params.get("xi", "xi")
    xi = chart.expr(chart.param(xi)) if isinstance(xi, str) else chart.expr(xi)
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"x1": 1}), VectorField(chart, {"t": t})],
        order=order,
    )
    frame = [VectorField(chart, {"t": t})] + [
        VectorField(chart, {c: 1}) for c in ("x1", "x2", "x3")
    ]
    g = _diag(chart, [-(t**2), t**2, t**2, t**2])
    fb = FrameBundle(chart, frame, g, t**4, twist)
    # scale factor a(t) = t: curvature scalar 6/t^2, potential xi * Ric
    potential = xi * chart.expr(6 / t**2)
    coord = _diag(chart, [-1, t**2, t**2, t**2])
    return ModelBundle(
        "homothetic-frw", chart, twist, fb, chart.expr(0), xi, potential,
        coord, chart.expr(t**3), params,
    )


def _compact_frw(order, params):
    chart = Chart("cone", ("t", "phi"), ("xi",), positive=("t",))
    t = chart.coord("t")
    xi = params.get("xi", "xi")
    xi = chart.expr(chart.param(xi)) if isinstance(xi, str) else chart.expr(xi)
    twist = AbelianTwist(
        chart,
        [VectorField(chart, {"phi": 2}), VectorField(chart, {"t": t})],
        order=order,
    )
    frame = [VectorField(chart, {"t": t}), VectorField(chart, {"phi": 1})]
    g = _diag(chart, [-(t**2), t**2])
    fb = FrameBundle(chart, frame, g, t**2, twist)
    coord = _diag(chart, [-1, t**2])
    # the 2d cone metric is flat: zero curvature weight
    return ModelBundle(
        "compact-frw", chart, twist, fb, chart.expr(0), xi, chart.expr(0),
        coord, chart.expr(t), params,
    )


def _parse_T(chart, params, key, default):
    rows = params.get(key, default)
    return [
        [sp.sympify(v, rational=True) for v in row] for row in rows
    ]


def _ads_rs(order, params):
    chart = Chart("adsrs", ("t", "x1", "x2", "x3", "y"), ("k",), positive=("k",))
    k, y = chart.param("k"), chart.coord("y")
    nblocks = params.get("nblocks", 1)
    Todd = _parse_T(chart, params, "T_odd", [[0, 1, 0, 0, 0]])
    Teven = _parse_T(chart, params, "T_even", [[0, 0, 1, 0, 0]])
    if len(Todd) != nblocks or len(Teven) != nblocks:
        raise BadParams("T matrices must supply one row per block")
    profile = chart.expr(params.get("profile", y))
    gens = []
    for a in range(nblocks):
        gens.append(VectorField(chart, dict(zip(chart.coords, Todd[a]))))
        gens.append(
            VectorField(
                chart,
                {c: profile * chart.expr(v) for c, v in zip(chart.coords, Teven[a])},
            )
        )
    twist = AbelianTwist(chart, gens, order=order)
    w = sp.exp(2 * k * y)
    coord = _diag(chart, [-1 / w, 1 / w, 1 / w, 1 / w, 1])
    m2 = chart.expr(params.get("mass2", 0))
    return ModelBundle(
        "ads-rs", chart, twist, None, m2, chart.expr(0), m2,
        coord, chart.expr(sp.exp(-4 * k * y)), params,
    )


def _z2_euclid(order, params):
    chart = Chart("z2", ("x1", "x2", "x3", "x4"), ("gslope", "M2", "g4"),
                  positive=("gslope",))
    x4 = chart.coord("x4")
    slope = chart.expr(params.get("profile_slope", chart.param("gslope")))
    profile = 2 * slope * chart.expr(x4)
    gens = []
    for a in range(3):
        gens.append(VectorField(chart, {f"x{a+1}": 1}))
        gens.append(VectorField(chart, {f"x{a+1}": profile}))
    twist = AbelianTwist(chart, gens, order=order)
    coord = _diag(chart, [1, 1, 1, 1])
    m2 = _mass_param(chart, params)
    return ModelBundle(
        "z2-euclid", chart, twist, None, m2, chart.expr(0), m2,
        coord, chart.expr(1), params,
    )


# -- wave operators ------------------------------------------------------------


def wave_operator_star(mb, ginv=None):
    """P(Phi) = (1/2)(e_a(g^{ab} * e_b Phi * gamma) + e_a(gamma * e_b Phi * g^{ba})
    - (W * Phi * gamma + gamma * Phi * W)) * gamma^{-*}."""
    num, ops, order = _numerator(mb, ginv)
    gamma_inv = mb.ctx.star_inverse(mb.frame_bundle.gamma)
    return (ops.right_mult(gamma_inv, order) * num).map(lambda o: o.cancel())


def wave_operator_tilde(mb, ginv=None):
    """Same numerator composed with the plain inverse volume factor."""
    num, ops, order = _numerator(mb, ginv)
    inv = DiffOp.mult(mb.chart, sp.cancel(1 / mb.frame_bundle.gamma.s))
    const = ops.constant(inv, order)
    return (const * num).map(lambda o: o.cancel())


def _numerator(mb, ginv=None):
    fb = mb.frame_bundle
    if fb is None:
        raise BadParams(f"model {mb.model_id} has no commuting invariant frame")
    ctx = fb.ctx
    ops = StarOperators(ctx)
    order = fb.order
    if ginv is None:
        ginv = ctx.star_inverse_matrix(fb.g)
    gamma = fb.gamma
    W = mb.potential
    dim = fb.dim
    E = [ops.constant(DiffOp.from_vector_field(fb.frame[a]), order) for a in range(dim)]
    Rgamma = ops.right_mult(gamma, order)
    Lgamma = ops.left_mult(gamma, order)
    num = LambdaSeries.zero(ops.domain, order)
    for a in range(dim):
        for b in range(dim):
            if all(c.s == 0 for c in ginv[a][b].coeffs):
                continue
            num = num + E[a] * Rgamma * ops.left_mult(ginv[a][b], order) * E[b]
            num = num + E[a] * ops.right_mult(ginv[b][a], order) * Lgamma * E[b]
    if not is_zero_sympy(W.s):
        num = num - Rgamma * ops.left_mult(W, order)
        num = num - Lgamma * ops.right_mult(W, order)
    return num.map(lambda o: o.scale(sp.Rational(1, 2))), ops, order


def classical_wave_operator(mb):
    """Independent Klein-Gordon oracle from the coordinate-basis metric.

    box = w^{-1} d_mu (w g^{mu nu} d_nu) with w the coordinate volume density,
    minus the mass/curvature weight.
    """
    chart = mb.chart
    dim = len(chart.coords)
    g = sp.Matrix(dim, dim, lambda a, b: mb.coord_metric[a][b].s)
    ginv = g.inv().applyfunc(sp.cancel)
    w = mb.coord_density.s
    terms = {}
    for mu in range(dim):
        for nu in range(dim):
            if ginv[mu, nu] == 0:
                continue
            idx = [0] * dim
            idx[mu] += 1
            idx[nu] += 1
            terms[tuple(idx)] = terms.get(tuple(idx), sp.S.Zero) + ginv[mu, nu]
            idx2 = [0] * dim
            idx2[nu] += 1
            grad = sp.cancel(sp.diff(w * ginv[mu, nu], chart.coords[mu]) / w)
            terms[tuple(idx2)] = terms.get(tuple(idx2), sp.S.Zero) + grad
    zero_idx = (0,) * dim
    terms[zero_idx] = terms.get(zero_idx, sp.S.Zero) - mb.potential.s
    return DiffOp(chart, terms).cancel()


def apply_series(op_series, f):
    """Apply an operator series to a plain field; field-valued series."""
    from .symbolic import ExprDomain

    dom = ExprDomain(op_series.coeffs[0].chart)
    return LambdaSeries(dom, [op.apply(f) for op in op_series.coeffs])


# -- deformed partial derivatives ----------------------------------------------


def _lie_oneform(chart, X, omega):
    """(L_X omega)_nu = X(omega_nu) + omega_rho d_nu X^rho, componentwise."""
    out = {}
    for nu, c in enumerate(chart.coords):
        acc = _vf_sympy(X, omega.get(nu, sp.S.Zero))
        for rho, crho in enumerate(chart.coords):
            comp = X.components.get(crho)
            if comp is None or rho not in omega:
                continue
            acc += omega[rho] * sp.diff(comp.s, c)
        acc = sp.expand(acc)
        if acc != 0:
            out[nu] = acc
    return out


def deformed_partial_derivatives(mb):
    """Operators D_mu with d Phi = dx^mu * D_mu Phi, solved order by order."""
    chart = mb.chart
    twist = mb.twist
    dim = len(chart.coords)
    order = twist.order
    dom = DiffOpDomain(chart)
    X = twist.generators

    # iterated one-form Lie derivatives of the basis dx^mu per index word
    def lie_word(indices, mu):
        omega = {mu: sp.S.One}
        for a in reversed(indices):
            omega = _lie_oneform(chart, X[a], omega)
            if not omega:
                break
        return omega

    words = {}

    def word_op(indices):
        hit = words.get(indices)
        if hit is None:
            op = DiffOp.identity(chart)
            for a in indices:
                op = DiffOp.from_vector_field(X[a]).compose(op)
            words[indices] = op
            hit = op
        return hit

    D = [[DiffOp.partial(chart, chart.coords[mu])] for mu in range(dim)]
    for n in range(1, order + 1):
        new = [DiffOp(chart) for _ in range(dim)]
        for m in range(1, n + 1):
            c = (sp.I / 2) ** m / sp.factorial(m)
            for combo in itertools.product(twist.pairs, repeat=m):
                coeff = Fraction(1)
                for _, _, v in combo:
                    coeff *= v
                alphas = tuple(a for a, _, _ in combo)
                betas = tuple(b for _, b, _ in combo)
                for mu in range(dim):
                    omega = lie_word(alphas, mu)
                    if not omega:
                        continue
                    tail = word_op(betas).compose(D[mu][n - m])
                    for nu, val in omega.items():
                        scale = c * sp.Rational(coeff.numerator, coeff.denominator) * val
                        new[nu] = new[nu] + tail.scale(scale)
        for mu in range(dim):
            new[mu] = -new[mu]
            D[mu].append(new[mu])
    return [LambdaSeries(dom, D[mu]) for mu in range(dim)]
