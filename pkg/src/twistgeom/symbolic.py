"""Minimal symbolic scalar fields on a named coordinate chart.

The expression class is deliberately small: rational constants, the
imaginary unit, coordinates, parameters, sums, products, integer powers
(half-integer powers of the radial quadratic on Cartesian charts), and
exp/sin/cos of arguments affine in the coordinates.  This class is closed
under differentiation and admits a canonical form that decides equality.
Sympy supplies the tree arithmetic; the class restriction and the
canonicalization pipeline live here.
"""

from __future__ import annotations

import random
from fractions import Fraction

import sympy as sp


class UnsupportedExpression(ValueError):
    """Input falls outside the supported function class."""


class UnknownCoordinate(ValueError):
    pass


class UnknownSymbol(ValueError):
    pass


class Chart:
    """Named coordinate chart with disjoint coordinate and parameter symbols."""

    def __init__(self, name, coordinates, parameters=(), positive=()):
        self.name = name
        pos = set(positive)
        self.coords = tuple(
            sp.Symbol(c, real=True, positive=(c in pos)) for c in coordinates
        )
        self.params = tuple(
            sp.Symbol(p, real=True, positive=(p in pos)) for p in parameters
        )
        names = [s.name for s in self.coords + self.params]
        if len(set(names)) != len(names):
            raise ValueError("coordinate and parameter names must be disjoint")
        self._by_name = {s.name: s for s in self.coords + self.params}

    def coord(self, name):
        s = self._by_name.get(name)
        if s is None or s not in self.coords:
            raise UnknownCoordinate(f"{name!r} is not a coordinate of chart {self.name!r}")
        return s

    def param(self, name):
        s = self._by_name.get(name)
        if s is None or s not in self.params:
            raise UnknownSymbol(f"{name!r} is not a parameter of chart {self.name!r}")
        return s

    def symbol(self, name):
        s = self._by_name.get(name)
        if s is None:
            raise UnknownSymbol(f"{name!r} unknown on chart {self.name!r}")
        return s

    def expr(self, raw):
        """Wrap and validate a raw sympy expression (or int/Fraction/str)."""
        return Expr(self, raw)

    def radial(self):
        """Euclidean norm of the non-time coordinates (Cartesian charts)."""
        spatial = [c for c in self.coords if c.name not in ("t",)]
        return Expr(self, sp.sqrt(sum(c**2 for c in spatial)))

    def __repr__(self):
        return f"Chart({self.name!r})"


def _as_sympy(raw):
    if isinstance(raw, Expr):
        return raw.s
    if isinstance(raw, str):
        return sp.sympify(raw, rational=True)
    if isinstance(raw, Fraction):
        return sp.Rational(raw.numerator, raw.denominator)
    return sp.sympify(raw, rational=True)


def _is_affine_in(arg, coords):
    try:
        p = sp.Poly(arg, *coords)
    except sp.PolynomialError:
        return False
    if p.total_degree() > 1:
        return False
    return all(c.free_symbols.isdisjoint(coords) for c in p.coeffs())


def _validate(node, chart):
    """Reject nodes outside the supported class; raise UnsupportedExpression."""
    if node.is_Atom:
        if isinstance(node, sp.Symbol):
            if node not in chart.coords and node not in chart.params:
                raise UnsupportedExpression(
                    f"symbol {node} not on chart {chart.name!r}"
                )
            return
        if node is sp.I or isinstance(node, (sp.Integer, sp.Rational)):
            return
        if node in (sp.S.One, sp.S.Zero, sp.S.NegativeOne):
            return
        raise UnsupportedExpression(f"unsupported atom {node!r} (floats/pi are out of class)")
    if isinstance(node, (sp.Add, sp.Mul)):
        for a in node.args:
            _validate(a, chart)
        return
    if isinstance(node, sp.Pow):
        base, ex = node.args
        if ex.is_Integer:
            _validate(base, chart)
            return
        # half-integer powers only for coordinate quadratics (radial norms)
        if isinstance(ex, sp.Rational) and ex.q == 2:
            if _is_quadratic_in_coords(base, chart):
                return
        raise UnsupportedExpression(f"unsupported power {node!r}")
    if isinstance(node, (sp.exp, sp.sin, sp.cos)):
        (arg,) = node.args
        if _is_affine_in(arg, chart.coords):
            for a in sp.Add.make_args(arg):
                _validate(a, chart)
            return
        # affine in a radial norm (e.g. exp(-c*r) on a Cartesian chart)
        if _is_affine_in_radial(arg, chart):
            return
        raise UnsupportedExpression(
            f"{type(node).__name__} argument {arg!r} is not affine in the coordinates"
        )
    raise UnsupportedExpression(f"unsupported node {node!r}")


def _is_quadratic_in_coords(base, chart):
    try:
        p = sp.Poly(base, *chart.coords)
    except sp.PolynomialError:
        return False
    return p.total_degree() == 2 and all(
        c.free_symbols.isdisjoint(chart.coords) for c in p.coeffs()
    )


def _is_affine_in_radial(arg, chart):
    radials = [
        a for a in arg.atoms(sp.Pow)
        if isinstance(a.exp, sp.Rational) and a.exp.q == 2
        and _is_quadratic_in_coords(a.base, chart)
    ]
    if not radials:
        return False
    rep = {r: sp.Dummy() for r in radials}
    sub = arg.xreplace(rep)
    return sub.free_symbols.isdisjoint(chart.coords) and _is_affine_in(
        sub, tuple(rep.values())
    )


class Expr:
    """Immutable scalar field on a chart; thin wrapper over a sympy tree."""

    __slots__ = ("chart", "s")

    def __init__(self, chart, raw):
        s = _as_sympy(raw)
        rep = {
            sym: chart._by_name[sym.name]
            for sym in s.free_symbols
            if sym.name in chart._by_name and chart._by_name[sym.name] is not sym
        }
        if rep:
            s = s.xreplace(rep)
        _validate(s, chart)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "s", s)

    def __setattr__(self, *a):
        raise AttributeError("Expr is immutable")

    @classmethod
    def _wrap(cls, chart, s):
        # internal fast path: s already known to be in class
        obj = object.__new__(cls)
        object.__setattr__(obj, "chart", chart)
        object.__setattr__(obj, "s", s)
        return obj

    def _peer(self, other):
        if isinstance(other, Expr):
            if other.chart is not self.chart:
                raise ValueError("expressions live on different charts")
            return other.s
        return _as_sympy(other)

    def __add__(self, other):
        return Expr._wrap(self.chart, self.s + self._peer(other))

    __radd__ = __add__

    def __neg__(self):
        return Expr._wrap(self.chart, -self.s)

    def __sub__(self, other):
        return Expr._wrap(self.chart, self.s - self._peer(other))

    def __rsub__(self, other):
        return Expr._wrap(self.chart, self._peer(other) - self.s)

    def __mul__(self, other):
        if hasattr(other, "components"):  # defer to VectorField.__rmul__
            return NotImplemented
        return Expr._wrap(self.chart, self.s * self._peer(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Expr._wrap(self.chart, self.s / self._peer(other))

    def __rtruediv__(self, other):
        return Expr._wrap(self.chart, self._peer(other) / self.s)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise UnsupportedExpression("only integer powers")
        return Expr._wrap(self.chart, self.s**n)

    def diff(self, coord):
        return differentiate(self, coord)

    def subs(self, bindings):
        return substitute(self, bindings)

    def conjugate(self):
        return Expr._wrap(self.chart, sp.conjugate(self.s).rewrite(sp.exp).doit())

    def is_zero(self):
        return is_zero_sympy(self.s)

    def equals(self, other):
        return expr_equal(self, other)

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return expr_equal(self, other)

    def __hash__(self):
        return hash((self.chart.name, self.s))

    def __repr__(self):
        return f"Expr({self.s})"

    def serialize(self):
        return prefix_form(self.s)


def differentiate(e, coord):
    """Exact partial derivative along a chart coordinate, canonicalized lightly."""
    c = e.chart.coord(coord) if isinstance(coord, str) else coord
    if c not in e.chart.coords:
        raise UnknownCoordinate(f"{coord!r} is not a coordinate of {e.chart.name!r}")
    return Expr._wrap(e.chart, sp.expand(sp.diff(e.s, c)))


def substitute(e, bindings):
    """Capture-free substitution of coordinates/parameters by expressions."""
    rep = {}
    for key, val in bindings.items():
        sym = e.chart.symbol(key) if isinstance(key, str) else key
        if sym not in e.chart.coords and sym not in e.chart.params:
            raise UnknownSymbol(f"{key!r} unknown on chart {e.chart.name!r}")
        rep[sym] = _as_sympy(val)
    return Expr._wrap(e.chart, canon_sympy(e.s.subs(rep, simultaneous=True)))


# -- canonicalization ---------------------------------------------------------

_CANON_CACHE = {}


def canon_sympy(s):
    """Canonical form on the supported class.

    Pipeline: rewrite trig to complex exponentials, expand, collect over a
    common denominator and cancel.  Exponentials of distinct affine forms are
    linearly independent over the rational functions, so the result is zero
    iff the field vanishes identically.
    """
    key = s
    hit = _CANON_CACHE.get(key)
    if hit is not None:
        return hit
    e = sp.expand(s)
    if e.has(sp.sin, sp.cos):
        e = sp.expand(e.rewrite(sp.exp))
    if not e.is_polynomial():
        e = sp.cancel(sp.together(e))
    _CANON_CACHE[key] = e
    return e


def canon(e):
    return Expr._wrap(e.chart, canon_sympy(e.s))


def normal_coeff(s):
    """Cheap normal form for series coefficients.

    Polynomial-like trees expand; genuine quotients go over a common
    denominator and cancel, which is what makes p/q cancellations exact.
    """
    e = sp.together(s)
    if sp.fraction(e)[1] == 1:
        return sp.expand(e)
    return sp.cancel(e)


def is_zero_sympy(s):
    """Tiered zero test: expand, cancel, exp-rewrite, then full simplify.

    A high-precision numeric probe short-circuits clearly nonzero inputs
    after the cancel tier; it can only return False, never certify zero.
    """
    if s == 0:
        return True
    e = sp.expand(s)
    if e == 0:
        return True
    if e.is_number:
        return abs(complex(e.evalf(30))) == 0
    e = sp.cancel(sp.together(e))
    if e == 0:
        return True
    if _clearly_nonzero(e):
        return False
    if e.has(sp.sin, sp.cos):
        e = sp.cancel(sp.expand(e.rewrite(sp.exp)))
        if e == 0:
            return True
    if e.has(sp.exp):
        e = sp.cancel(sp.expand(sp.powsimp(e, force=False)))
        if e == 0:
            return True
    return sp.simplify(e) == 0


def _clearly_nonzero(e, tries=3, seed=1299721):
    rng = random.Random(seed + hash(e) % 100003)
    free = list(e.free_symbols)
    for _ in range(tries):
        point = {
            s: sp.Rational(rng.randint(13, 61), rng.randint(7, 17)) for s in free
        }
        try:
            v = complex(e.subs(point).evalf(30))
        except (TypeError, ValueError, ZeroDivisionError):
            return False
        if abs(v) > 1e-8:
            return True
    return False


def expr_equal(a, b, diagnostics=False):
    """Equality on the supported class via the canonicalizer.

    With ``diagnostics`` a randomized high-precision evaluation at sample
    points cross-checks the verdict; disagreement flags a canonicalizer gap
    (it never overrides the symbolic answer).
    """
    bs = b.s if isinstance(b, Expr) else _as_sympy(b)
    verdict = is_zero_sympy(a.s - bs)
    if diagnostics:
        numeric = _numeric_agreement(a.chart, a.s - bs)
        if numeric is not None and numeric != verdict:
            import warnings

            warnings.warn(
                f"canonicalizer disagrees with numeric sampling on {a.s - bs}"
            )
    return verdict


def _numeric_agreement(chart, diff, npoints=8, tol=1e-10, seed=7):
    rng = random.Random(seed)
    free = diff.free_symbols
    scale = 0.0
    for _ in range(npoints):
        point = {}
        for s in free:
            # rational samples away from the singular loci of the models
            point[s] = sp.Rational(rng.randint(11, 99), rng.randint(7, 13))
        try:
            v = complex(diff.subs(point).evalf(30))
        except (TypeError, ValueError):
            return None
        scale = max(scale, abs(v))
    return scale <= tol


# -- deterministic serialization ---------------------------------------------


def prefix_form(s):
    """Deterministic prefix string of a sympy tree (sorted argument order)."""
    if isinstance(s, sp.Symbol):
        return s.name
    if isinstance(s, (sp.Integer, sp.Rational)):
        return str(s)
    if s is sp.I:
        return "i"
    if s.is_Atom:
        return str(s)
    name = type(s).__name__
    args = sorted((prefix_form(a) for a in s.args))
    if isinstance(s, sp.Pow):
        args = [prefix_form(s.args[0]), prefix_form(s.args[1])]
    return "(" + name.lower() + " " + " ".join(args) + ")"


# -- series coefficient domain -------------------------------------------------

from .series import Domain  # noqa: E402


class ExprDomain(Domain):
    """LambdaSeries coefficient domain of scalar fields on one chart."""

    def __init__(self, chart):
        self.chart = chart

    def zero(self):
        return Expr._wrap(self.chart, sp.S.Zero)

    def one(self):
        return Expr._wrap(self.chart, sp.S.One)

    def add(self, a, b):
        return Expr._wrap(self.chart, sp.expand(a.s + b.s))

    def neg(self, a):
        return Expr._wrap(self.chart, -a.s)

    def mul(self, a, b):
        return Expr._wrap(self.chart, sp.expand(a.s * b.s))

    def eq(self, a, b):
        return is_zero_sympy(a.s - b.s)

    def is_zero(self, a):
        return is_zero_sympy(a.s)

    def invert(self, a):
        if a.s == 0:
            from .series import NotInvertible

            raise NotInvertible("zero field")
        return Expr._wrap(self.chart, sp.cancel(1 / a.s))

    def halve(self, a):
        return Expr._wrap(self.chart, a.s / 2)

    def coerce(self, x):
        if isinstance(x, Expr):
            return x
        return Expr(self.chart, x)

    def __repr__(self):
        return f"ExprDomain({self.chart.name!r})"
