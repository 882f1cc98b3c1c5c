"""Deformed symmetry reduction for cosmological and black-hole symmetry algebras.

A twist generator is admissible for a symmetry algebra g when [X, g] lies in
g with constant coefficients; families of mutually commuting admissible
generators are classified into the two-generator types C11..C32 (momenta and
rotations plus dilations on flat FRW slices) and B11..B32 (time translation
and rotations around a black hole).  Constructors build each family from its
parameter slots and validate the defining constraints by direct bracket
computation.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import sympy as sp

from .symbolic import Chart, Expr, is_zero_sympy
from .twistalg import AbelianTwist, ChartMismatch, VectorField, lie_bracket

EPS = [[[0] * 3 for _ in range(3)] for _ in range(3)]
for _i, _j, _k in itertools.permutations(range(3)):
    sign = 1
    perm = (_i, _j, _k)
    # parity of the permutation
    p = list(perm)
    for a in range(3):
        for b in range(a + 1, 3):
            if p[a] > p[b]:
                sign = -sign
    EPS[_i][_j][_k] = sign if sorted(perm) == [0, 1, 2] else 0

FRW_FAMILIES = ("C11", "C21", "C12", "C22", "C32")
BLACKHOLE_FAMILIES = ("B11", "B21", "B12", "B22", "B32")


class ConstraintViolated(ValueError):
    def __init__(self, condition, detail=""):
        self.condition = condition
        super().__init__(f"{condition}: {detail}" if detail else condition)


def cartesian_chart(extra_params=(), positive=()):
    return Chart(
        "cartesian", ("t", "x1", "x2", "x3"), tuple(extra_params), positive=positive
    )


def momentum_fields(chart):
    return [VectorField(chart, {f"x{i+1}": 1}) for i in range(3)]


def rotation_fields(chart):
    x = [chart.coord(f"x{i+1}") for i in range(3)]
    out = []
    for i in range(3):
        comp = {}
        for j in range(3):
            for k in range(3):
                if EPS[i][j][k]:
                    comp[x[k]] = comp.get(x[k], chart.expr(0)) + EPS[i][j][k] * chart.expr(x[j])
        out.append(VectorField(chart, comp))
    return out


def dilation_field(chart):
    return VectorField(chart, {f"x{i+1}": chart.coord(f"x{i+1}") for i in range(3)})


class SymmetryAlgebra:
    """Finite list of generators with exact structure constants."""

    def __init__(self, chart, generators, names):
        self.chart = chart
        self.generators = list(generators)
        self.names = list(names)
        self.structure_constants = {}
        for i, ti in enumerate(self.generators):
            for j, tj in enumerate(self.generators):
                res = _span_coefficients(lie_bracket(ti, tj), self.generators)
                if res is None:
                    raise ValueError(
                        f"[{self.names[i]},{self.names[j]}] leaves the span"
                    )
                self.structure_constants[(i, j)] = res


def cosmology_algebra(chart):
    """Momenta and rotations of the spatially flat cosmological background."""
    gens = momentum_fields(chart) + rotation_fields(chart)
    return SymmetryAlgebra(chart, gens, ["p1", "p2", "p3", "L1", "L2", "L3"])


def blackhole_algebra(chart):
    """Time translation and rotations of the static spherical background."""
    gens = [VectorField(chart, {"t": 1})] + rotation_fields(chart)
    return SymmetryAlgebra(chart, gens, ["p0", "L1", "L2", "L3"])


def _span_coefficients(bracket, basis, seed=11):
    """Constant coefficients c_j with bracket = sum_j c_j basis_j, or None.

    Candidates come from exact rational sampling of the coordinates; the
    candidate is then verified symbolically, so false positives cannot occur.
    """
    chart = bracket.chart
    unknowns = [sp.Dummy(f"c{j}") for j in range(len(basis))]
    residual = {}
    syms = set()
    for vf in [bracket] + list(basis):
        syms.update(vf.components.keys())
    for sym in syms:
        expr = bracket.component(sym).s
        for c, vf in zip(unknowns, basis):
            expr = expr - c * vf.component(sym).s
        residual[sym] = sp.expand(expr)
    rng = random.Random(seed)
    eqs = []
    for _ in range(4 + len(basis)):
        point = {
            c: sp.Rational(rng.randint(2, 40), rng.randint(1, 7))
            for c in chart.coords
        }
        for sym in syms:
            eqs.append(residual[sym].subs(point))
    sol = sp.linsolve(eqs, unknowns)
    if not sol:
        return None
    values = list(sol)[0]
    values = [
        v.subs({u: 0 for u in unknowns if u in v.free_symbols}) for v in values
    ]
    for sym in syms:
        check = residual[sym].subs(dict(zip(unknowns, values)))
        if not is_zero_sympy(check):
            return None
    if any(not v.free_symbols.isdisjoint(chart.coords) for v in values):
        return None
    return tuple(sp.nsimplify(v, rational=True) if v.is_number else v for v in values)


@dataclass
class ModuleConditionReport:
    holds: bool
    coefficients: dict = field(default_factory=dict)
    witness: object = None


def check_module_condition(X, algebra):
    """Does [X, t_i] stay in span(t_j) with constant coefficients for all i?"""
    if X.chart is not algebra.chart:
        raise ChartMismatch("generator lives on a different chart")
    coeffs = {}
    for i, ti in enumerate(algebra.generators):
        br = lie_bracket(X, ti)
        res = _span_coefficients(br, algebra.generators)
        if res is None:
            return ModuleConditionReport(False, witness=(algebra.names[i], br))
        coeffs[algebra.names[i]] = res
    return ModuleConditionReport(True, coefficients=coeffs)


def check_commuting_family(fields):
    """All pairwise Lie brackets vanish identically; first violation returned."""
    for a in range(len(fields)):
        for b in range(a + 1, len(fields)):
            br = lie_bracket(fields[a], fields[b])
            if not all(c.is_zero() for c in br.components.values()):
                return False, (a, b, br)
    return True, None


# -- family constructors --------------------------------------------------


@dataclass
class FamilySpec:
    family: str
    params: dict
    order: int = 4


def _vec3(chart, val, name):
    if val is None:
        return [chart.expr(0)] * 3
    vals = list(val)
    if len(vals) != 3:
        raise ConstraintViolated(f"{name}-shape", "needs three components")
    return [v if isinstance(v, Expr) else chart.expr(v) for v in vals]


def _scalar(chart, val, default=0):
    if val is None:
        val = default
    return val if isinstance(val, Expr) else chart.expr(val)


def _time_fn(chart, val):
    """Expression in t (and parameters) for a time-component slot."""
    e = _scalar(chart, val)
    bad = e.s.free_symbols & set(chart.coords) - {chart.coord("t")}
    if bad:
        raise ConstraintViolated("time-slot", f"depends on {bad}")
    return e


def _radial_fn(chart, val):
    """Expression in the placeholder rho, mapped to the Euclidean radius."""
    if val is None:
        return chart.expr(0)
    if isinstance(val, Expr):
        return val
    raw = sp.sympify(val, rational=True) if isinstance(val, str) else sp.sympify(val)
    rho = [s for s in raw.free_symbols if s.name == "rho"]
    r = chart.radial()
    if rho:
        raw = raw.subs(rho[0], r.s)
    return chart.expr(raw)


def _combine(chart, time_part, c=None, d=None, f=None, f_is_radial=False):
    comp = {}
    if not time_part.is_zero():
        comp["t"] = time_part
    vf = VectorField(chart, comp)
    if c is not None:
        for i, ci in enumerate(c):
            vf = vf + VectorField(chart, {f"x{i+1}": ci})
    if d is not None:
        rots = rotation_fields(chart)
        for di, Li in zip(d, rots):
            vf = vf + di * Li
    if f is not None:
        vf = vf + f * dilation_field(chart)
    return vf


def build_family(spec, chart=None):
    """Vector fields of one classified two-generator family, as a twist.

    Raises ConstraintViolated naming the family condition that fails.
    """
    family = spec.family
    p = dict(spec.params)
    if chart is None:
        extra = set()
        for v in p.values():
            if v is None:
                continue
            for item in v if isinstance(v, (list, tuple)) else [v]:
                raw = sp.sympify(item, rational=True) if not isinstance(item, Expr) else item.s
                extra |= {
                    s.name
                    for s in raw.free_symbols
                    if s.name not in ("t", "rho", "x1", "x2", "x3")
                }
        chart = cartesian_chart(sorted(extra))

    if family in FRW_FAMILIES:
        X1, X2 = _frw_fields(family, p, chart)
        _check_time_commute(chart, X1, X2)
    elif family in BLACKHOLE_FAMILIES:
        X1, X2 = _blackhole_fields(family, p, chart)
    else:
        raise ConstraintViolated("family-id", f"unknown family {family!r}")

    ok, witness = check_commuting_family([X1, X2])
    if not ok:
        raise ConstraintViolated(
            "commuting-family", f"[X1,X2] = {witness[2]} does not vanish"
        )
    return AbelianTwist(chart, [X1, X2], order=spec.order)


def _frw_fields(family, p, chart):
    X01 = _time_fn(chart, p.get("X01"))
    X02 = _time_fn(chart, p.get("X02"))
    c1 = _vec3(chart, p.get("c1"), "c1")
    c2 = _vec3(chart, p.get("c2"), "c2")
    d1 = _vec3(chart, p.get("d1"), "d1")
    f1 = _scalar(chart, p.get("f1"))
    f2 = _scalar(chart, p.get("f2"))
    kappa = _scalar(chart, p.get("kappa"))
    if family == "C11":
        return (
            _combine(chart, X01, c=c1),
            _combine(chart, X02, c=c2),
        )
    if family == "C21":
        return (
            _combine(chart, X01, c=c1, f=f1),
            _combine(chart, X02),
        )
    if family == "C12":
        return (
            _combine(chart, X01, c=c1, d=d1),
            _combine(chart, X02, c=[kappa * di for di in d1]),
        )
    if family == "C22":
        return (
            _combine(chart, X01, c=c1, d=d1, f=f1),
            _combine(chart, X02),
        )
    # C32: the spatial translation part is fixed by d1, c2 and f2
    if is_zero_sympy(f2.s):
        raise ConstraintViolated("C32-f2", "needs f2 != 0")
    shift = [
        sum(
            (EPS[j][k][i] * d1[j] * c2[k] for j in range(3) for k in range(3)),
            chart.expr(0),
        )
        / f2
        for i in range(3)
    ]
    return (
        _combine(chart, X01, c=shift, d=d1),
        _combine(chart, X02, c=c2, f=f2),
    )


def _check_time_commute(chart, X1, X2):
    a = X1.component("t")
    b = X2.component("t")
    t = chart.coord("t")
    resid = sp.expand(a.s * sp.diff(b.s, t) - b.s * sp.diff(a.s, t))
    if not is_zero_sympy(resid):
        raise ConstraintViolated(
            "frwcond-time", "time components do not commute as flows on t"
        )


def _blackhole_fields(family, p, chart):
    d = _vec3(chart, p.get("d", (0, 0, 1)), "d")
    kappa1 = _scalar(chart, p.get("kappa1"))
    kappa2 = _scalar(chart, p.get("kappa2"))
    c10 = _radial_fn(chart, p.get("c10"))
    c20 = _radial_fn(chart, p.get("c20"))
    f2 = _radial_fn(chart, p.get("f2"))
    N10 = _scalar(chart, p.get("N10"))
    N20 = _scalar(chart, p.get("N20"))
    t = chart.coord("t")
    r = chart.radial()
    kd1 = [kappa1 * di for di in d]
    kd2 = [kappa2 * di for di in d]

    if family == "B11":
        return (
            _combine(chart, c10, d=kd1),
            _combine(chart, c20, d=kd2),
        )
    if family == "B21":
        if is_zero_sympy(N10.s):
            raise ConstraintViolated("B21-N10", "needs N10 != 0")
        return (
            _combine(chart, c10 + N10 * chart.expr(t)),
            _combine(chart, chart.expr(0), d=kd2),
        )
    if family == "B12":
        if not c10.s.free_symbols.isdisjoint(chart.coords):
            raise ConstraintViolated("B12-c10-constant", "c10 has to be constant")
        return (
            _combine(chart, c10, d=kd1),
            _radial_dilation(chart, c20, kd2, f2),
        )
    if family == "B22":
        if is_zero_sympy(N10.s):
            raise ConstraintViolated("B22-N10", "needs N10 != 0")
        dc10 = _radial_derivative(chart, c10)
        time2 = chart.expr(-1) * f2 * r * dc10 / N10
        return (
            _combine(chart, c10 + N10 * chart.expr(t), d=kd1),
            _radial_dilation(chart, time2, kd2, f2),
        )
    # B32
    if is_zero_sympy(N20.s):
        raise ConstraintViolated("B32-N20", "needs N20 != 0")
    dc10 = _radial_derivative(chart, c10)
    resid = c10 - f2 * r * dc10 / N20
    if not is_zero_sympy(resid.s):
        raise ConstraintViolated(
            "B32-radial-ode", "c10 must solve c10 = f2*r*c10'/N20"
        )
    return (
        _combine(chart, c10, d=kd1),
        _radial_dilation(chart, c20 + N20 * chart.expr(t), kd2, f2),
    )


def _radial_dilation(chart, time_part, kd, f2):
    """time_part d_t + kd^i L_i + f2(r) x^i d_i."""
    vf = _combine(chart, time_part, d=kd)
    for i in range(3):
        xi = chart.coord(f"x{i+1}")
        vf = vf + VectorField(chart, {xi: f2 * chart.expr(xi)})
    return vf


def _radial_derivative(chart, e):
    """d/dr of a function of the Euclidean radius, as a chart field."""
    r = chart.radial().s
    x1 = chart.coord("x1")
    # d/dx1 = (x1/r) d/dr away from the axis, so r/x1 * d/dx1 recovers d/dr
    d = sp.cancel(sp.diff(e.s, x1) * r / x1)
    return Expr._wrap(chart, d)


# -- first-order coordinate commutators -----------------------------------


def coordinate_commutators_o1(twist, coords=None):
    """lambda^1 coefficient of [x^mu *, x^nu]: i Theta^{ab} X_a(x^mu) X_b(x^nu)."""
    chart = twist.chart
    if coords is None:
        coords = chart.coords
    out = {}
    for mu, xm in enumerate(coords):
        for nu, xn in enumerate(coords):
            acc = sp.S.Zero
            for a, b, v in twist.pairs:
                fa = twist.generators[a].apply(chart.expr(xm))
                gb = twist.generators[b].apply(chart.expr(xn))
                acc += sp.Rational(v.numerator, v.denominator) * fa.s * gb.s
            out[(mu, nu)] = Expr._wrap(chart, sp.expand(sp.I * acc))
    return out


def expected_commutators(spec, chart):
    """Closed-form first-order commutator table rows for the ten families.

    Returns the lambda^1 coefficients keyed (mu, nu) for mu < nu over
    (t, x1, x2, x3); entries not listed are zero.
    """
    family = spec.family
    p = dict(spec.params)
    x = [chart.expr(chart.coord(f"x{i+1}")) for i in range(3)]
    I = sp.I
    out = {}

    def cross(d, i):
        # (d x x)_i = eps_{jki} d^j x^k  (the rotation action on x^i)
        acc = chart.expr(0)
        for j in range(3):
            for k in range(3):
                if EPS[j][k][i]:
                    acc = acc + EPS[j][k][i] * d[j] * x[k]
        return acc

    if family in FRW_FAMILIES:
        X01 = _time_fn(chart, p.get("X01"))
        X02 = _time_fn(chart, p.get("X02"))
        c1 = _vec3(chart, p.get("c1"), "c1")
        c2 = _vec3(chart, p.get("c2"), "c2")
        d1 = _vec3(chart, p.get("d1"), "d1")
        f1 = _scalar(chart, p.get("f1"))
        f2 = _scalar(chart, p.get("f2"))
        kappa = _scalar(chart, p.get("kappa"))
        if family == "C11":
            for i in range(3):
                out[(0, i + 1)] = X01 * c2[i] - X02 * c1[i]
            for i in range(3):
                for j in range(3):
                    if i < j:
                        out[(i + 1, j + 1)] = c1[i] * c2[j] - c1[j] * c2[i]
        elif family == "C21":
            for i in range(3):
                out[(0, i + 1)] = chart.expr(-1) * X02 * (c1[i] + f1 * x[i])
        elif family == "C12":
            for i in range(3):
                out[(0, i + 1)] = X01 * kappa * d1[i] - X02 * (c1[i] + cross(d1, i))
            for i in range(3):
                for j in range(3):
                    if i < j:
                        out[(i + 1, j + 1)] = kappa * (
                            (c1[i] + cross(d1, i)) * d1[j]
                            - (c1[j] + cross(d1, j)) * d1[i]
                        )
        elif family == "C22":
            for i in range(3):
                out[(0, i + 1)] = chart.expr(-1) * X02 * (
                    c1[i] + cross(d1, i) + f1 * x[i]
                )
        else:  # C32
            shift = [
                sum(
                    (EPS[j][k][i] * d1[j] * c2[k] for j in range(3) for k in range(3)),
                    chart.expr(0),
                )
                / f2
                for i in range(3)
            ]
            for i in range(3):
                out[(0, i + 1)] = X01 * (c2[i] + f2 * x[i]) - X02 * (
                    shift[i] + cross(d1, i)
                )
            for i in range(3):
                for j in range(3):
                    if i < j:
                        out[(i + 1, j + 1)] = (shift[i] + cross(d1, i)) * (
                            c2[j] + f2 * x[j]
                        ) - (shift[j] + cross(d1, j)) * (c2[i] + f2 * x[i])
    else:
        d = _vec3(chart, p.get("d", (0, 0, 1)), "d")
        kappa1 = _scalar(chart, p.get("kappa1"))
        kappa2 = _scalar(chart, p.get("kappa2"))
        c10 = _radial_fn(chart, p.get("c10"))
        c20 = _radial_fn(chart, p.get("c20"))
        f2 = _radial_fn(chart, p.get("f2"))
        N10 = _scalar(chart, p.get("N10"))
        N20 = _scalar(chart, p.get("N20"))
        t = chart.expr(chart.coord("t"))
        r = chart.radial()
        if family == "B11":
            for i in range(3):
                out[(0, i + 1)] = (c10 * kappa2 - c20 * kappa1) * cross(d, i)
        elif family == "B21":
            for i in range(3):
                out[(0, i + 1)] = (c10 + N10 * t) * kappa2 * cross(d, i)
        elif family == "B12":
            for i in range(3):
                out[(0, i + 1)] = c10 * (
                    kappa2 * cross(d, i) + f2 * x[i]
                ) - kappa1 * c20 * cross(d, i)
            _spatial_b(out, chart, kappa1, d, f2, x, cross)
        elif family == "B22":
            dc10 = _radial_derivative(chart, c10)
            for i in range(3):
                out[(0, i + 1)] = (c10 + N10 * t) * (
                    kappa2 * cross(d, i) + f2 * x[i]
                ) + f2 * r * dc10 * kappa1 * cross(d, i) / N10
            _spatial_b(out, chart, kappa1, d, f2, x, cross)
        else:  # B32
            for i in range(3):
                out[(0, i + 1)] = c10 * (kappa2 * cross(d, i) + f2 * x[i]) - (
                    c20 + N20 * t
                ) * kappa1 * cross(d, i)
            _spatial_b(out, chart, kappa1, d, f2, x, cross)

    return {
        key: Expr._wrap(chart, sp.expand(I * e.s)) for key, e in out.items()
    }


def _spatial_b(out, chart, kappa1, d, f2, x, cross):
    for i in range(3):
        for j in range(3):
            if i < j:
                out[(i + 1, j + 1)] = kappa1 * (
                    cross(d, i) * f2 * x[j] - cross(d, j) * f2 * x[i]
                )
