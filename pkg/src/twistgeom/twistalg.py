"""Vector fields, abelian twists and the induced star-product calculus.

The twist is exp(-(i*lambda/2) Theta^{ab} X_a (x) X_b) with mutually
commuting generators X_a and a constant antisymmetric Theta.  The induced
product of two fields carries the order-n bidifferential kernel
(i/2)^n/n! Theta^{a1 b1} ... Theta^{an bn} X_{a1}...X_{an} (x) X_{b1}...X_{bn},
evaluated here by an explicit multi-index sum so that truncation is exact.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import sympy as sp

from .series import LambdaSeries, NotInvertible
from .symbolic import Chart, Expr, ExprDomain, is_zero_sympy, normal_coeff


class ChartMismatch(ValueError):
    pass


class VectorField:
    """First-order derivation v = v^mu(x) d_mu; zero components omitted."""

    def __init__(self, chart, components):
        self.chart = chart
        comp = {}
        for key, val in components.items():
            sym = chart.coord(key) if isinstance(key, str) else key
            e = val if isinstance(val, Expr) else chart.expr(val)
            if sp.expand(e.s) != 0:
                comp[sym] = e
        self.components = comp

    def component(self, coord):
        sym = self.chart.coord(coord) if isinstance(coord, str) else coord
        return self.components.get(sym, self.chart.expr(0))

    def apply(self, e):
        """Derivation action on a scalar field."""
        if e.chart is not self.chart:
            raise ChartMismatch("field lives on a different chart")
        tot = sp.S.Zero
        for sym, c in self.components.items():
            tot += c.s * sp.diff(e.s, sym)
        return Expr._wrap(self.chart, sp.expand(tot))

    def __add__(self, other):
        if other.chart is not self.chart:
            raise ChartMismatch("vector fields on different charts")
        comp = dict(self.components)
        for sym, c in other.components.items():
            comp[sym] = comp.get(sym, self.chart.expr(0)) + c
        return VectorField(self.chart, comp)

    def __rmul__(self, scalar):
        e = scalar if isinstance(scalar, Expr) else self.chart.expr(scalar)
        return VectorField(
            self.chart, {sym: e * c for sym, c in self.components.items()}
        )

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return not self.components

    def __repr__(self):
        parts = [f"({c.s})d_{sym}" for sym, c in self.components.items()]
        return " + ".join(parts) if parts else "0"


def lie_bracket(v, w):
    """[v, w]^nu = v^mu d_mu w^nu - w^mu d_mu v^nu."""
    if v.chart is not w.chart:
        raise ChartMismatch("vector fields on different charts")
    chart = v.chart
    comp = {}
    for sym in set(v.components) | set(w.components):
        a = v.apply(w.component(sym))
        b = w.apply(v.component(sym))
        comp[sym] = a - b
    return VectorField(chart, comp)


def canonical_theta(nblocks):
    """Block-diagonal antisymmetric matrix with 2x2 blocks (0,1;-1,0)."""
    n = 2 * nblocks
    theta = [[Fraction(0)] * n for _ in range(n)]
    for b in range(nblocks):
        theta[2 * b][2 * b + 1] = Fraction(1)
        theta[2 * b + 1][2 * b] = Fraction(-1)
    return theta


class AbelianTwist:
    """Mutually commuting generators plus a constant antisymmetric matrix."""

    def __init__(self, chart, generators, theta=None, order=4, check=True):
        self.chart = chart
        self.generators = tuple(generators)
        if theta is None:
            if len(self.generators) % 2:
                raise ValueError("canonical Theta needs an even number of generators")
            theta = canonical_theta(len(self.generators) // 2)
        self.theta = tuple(tuple(Fraction(x) for x in row) for row in theta)
        self.order = order
        n = len(self.generators)
        if len(self.theta) != n or any(len(r) != n for r in self.theta):
            raise ValueError("Theta shape does not match the generator count")
        for a in range(n):
            for b in range(n):
                if self.theta[a][b] != -self.theta[b][a]:
                    raise ValueError("Theta must be antisymmetric")
        if check:
            for a in range(n):
                for b in range(a + 1, n):
                    br = lie_bracket(self.generators[a], self.generators[b])
                    if not all(c.is_zero() for c in br.components.values()):
                        raise ValueError(
                            f"generators {a} and {b} do not commute: [X{a},X{b}] = {br}"
                        )
        self.pairs = tuple(
            (a, b, self.theta[a][b])
            for a in range(n)
            for b in range(n)
            if self.theta[a][b] != 0
        )

    def is_trivial(self):
        return not self.pairs

    def blocks(self):
        """Index pairs of the 2x2 canonical blocks (requires canonical form)."""
        n = len(self.generators)
        out = []
        seen = set()
        for a in range(n):
            for b in range(n):
                if self.theta[a][b] != 0 and a not in seen and b not in seen:
                    out.append((a, b))
                    seen.update((a, b))
        return out


class StarContext:
    """Star-product evaluator for one abelian twist, with kernel caching."""

    def __init__(self, twist):
        self.twist = twist
        self.chart = twist.chart
        self.domain = ExprDomain(twist.chart)
        self._coeff_cache = {}
        self._diff_cache = {}

    # -- kernels ---------------------------------------------------------

    def kernel_coeff(self, f, g, n):
        """Order-n kernel applied to a pair of plain fields (sympy level)."""
        key = (f.s, g.s, n)
        hit = self._coeff_cache.get(key)
        if hit is not None:
            return hit
        out = Expr._wrap(self.chart, self._kernel_sympy(f.s, g.s, n))
        self._coeff_cache[key] = out
        return out

    def _gen_diff(self, fs, a):
        """Cached, cancel-normalized action of generator a on a field."""
        key = (fs, a)
        hit = self._diff_cache.get(key)
        if hit is None:
            hit = _vf_raw(self.twist.generators[a], fs)
            if hit != 0 and sp.fraction(hit)[1] != 1:
                hit = sp.cancel(sp.together(hit))
            self._diff_cache[key] = hit
        return hit

    def _chain(self, fs, indices):
        for a in indices:
            fs = self._gen_diff(fs, a)
            if fs == 0:
                break
        return fs

    def _kernel_sympy(self, fs, gs, n):
        if n == 0:
            return fs * gs
        c = (sp.I / 2) ** n / sp.factorial(n)
        tot = sp.S.Zero
        for combo in itertools.product(self.twist.pairs, repeat=n):
            coeff = Fraction(1)
            for _, _, v in combo:
                coeff *= v
            fa = self._chain(fs, [a for a, _, _ in combo])
            if fa == 0:
                continue
            gb = self._chain(gs, [b for _, b, _ in combo])
            if gb == 0:
                continue
            tot += sp.Rational(coeff.numerator, coeff.denominator) * fa * gb
        return c * tot

    # -- products ----------------------------------------------------------

    def promote(self, h):
        """Coerce a field or series to a LambdaSeries over this chart."""
        if isinstance(h, LambdaSeries):
            return h
        e = h if isinstance(h, Expr) else self.chart.expr(h)
        return LambdaSeries.constant(self.domain, e, self.twist.order)

    def star(self, h, k):
        """h * k as a truncated series; order-0 term is the pointwise product."""
        A, B = self.promote(h), self.promote(k)
        order = min(A.order, B.order)
        out = []
        for n in range(order + 1):
            acc = sp.S.Zero
            for m in range(n + 1):
                for j in range(n - m + 1):
                    acc += self.kernel_coeff(A.coeffs[j], B.coeffs[n - m - j], m).s
            out.append(Expr._wrap(self.chart, normal_coeff(acc)))
        return LambdaSeries(self.domain, out)

    def star_commutator(self, h, k):
        return self.star(h, k) - self.star(k, h)

    def braided_star(self, h, k):
        """Expansion of sum (Rbar^a k) * (Rbar_a h), with R = F^{-2}.

        Equals h * k for abelian twists; used as a property check.
        """
        A, B = self.promote(h), self.promote(k)
        order = min(A.order, B.order)
        X = self.twist.generators
        out = LambdaSeries.zero(self.domain, order)
        # R^{-1} = exp(-i*lambda*Theta^{ab} X_a (x) X_b): order-m term
        for m in range(order + 1):
            c = (-sp.I) ** m / sp.factorial(m)
            for combo in itertools.product(self.twist.pairs, repeat=m):
                coeff = Fraction(1)
                for _, _, v in combo:
                    coeff *= v
                kk = B
                hh = A
                for a, b, _ in combo:
                    kk = _series_vf(X[a], kk)
                    hh = _series_vf(X[b], hh)
                if kk.is_zero() or hh.is_zero():
                    continue
                term = self.star(kk, hh) * LambdaSeries.lam(self.domain, order, m)
                scale = Expr._wrap(
                    self.chart,
                    c * sp.Rational(coeff.numerator, coeff.denominator),
                )
                out = out + term.map(lambda e: self.domain.mul(scale, e))
        return out

    # -- inverses ----------------------------------------------------------

    def star_inverse(self, h):
        """Two-sided star inverse of a plain field, solved order by order."""
        e = h if isinstance(h, Expr) else self.chart.expr(h)
        if e.s == 0:
            raise NotInvertible("zero field has no star inverse")
        order = self.twist.order
        inv0 = sp.cancel(1 / e.s)
        right = [Expr._wrap(self.chart, inv0)]
        for n in range(1, order + 1):
            acc = sp.S.Zero
            for m in range(1, n + 1):
                acc += self.kernel_coeff(e, right[n - m], m).s
            right.append(Expr._wrap(self.chart, sp.cancel(sp.together(-acc * inv0))))
        left = [Expr._wrap(self.chart, inv0)]
        for n in range(1, order + 1):
            acc = sp.S.Zero
            for m in range(1, n + 1):
                acc += self.kernel_coeff(left[n - m], e, m).s
            left.append(Expr._wrap(self.chart, sp.cancel(sp.together(-acc * inv0))))
        for a, b in zip(left, right):
            if not is_zero_sympy(a.s - b.s):
                raise NotInvertible("left and right star inverses differ")
        return LambdaSeries(self.domain, right)

    def star_inverse_matrix(self, g):
        """Entrywise star inverse matrix of a square matrix of fields/series.

        Solves g * R = id order by order and checks R * g = id.
        """
        dim = len(g)
        G = [[self.promote(g[i][j]) for j in range(dim)] for i in range(dim)]
        order = min(G[i][j].order for i in range(dim) for j in range(dim))
        g0 = sp.Matrix(dim, dim, lambda i, j: G[i][j].coeffs[0].s)
        det = sp.cancel(g0.det())
        if det == 0:
            raise NotInvertible("order-0 metric matrix is singular")
        g0inv = g0.inv()
        g0inv = g0inv.applyfunc(sp.cancel)
        R = [[[None] * (order + 1) for _ in range(dim)] for _ in range(dim)]
        for i in range(dim):
            for j in range(dim):
                R[i][j][0] = Expr._wrap(self.chart, g0inv[i, j])
        for n in range(1, order + 1):
            for i in range(dim):
                low = [sp.S.Zero] * dim
                for k in range(dim):
                    for j in range(dim):
                        for m in range(n + 1):
                            for p in range(n - m + 1):
                                q = n - m - p
                                if m == 0 and p == 0:
                                    continue  # the unknown R[.][.][n] term
                                low[k] += self.kernel_coeff(
                                    G[k][j].coeffs[p],
                                    R[j][i][q],
                                    m,
                                ).s
                for k in range(dim):
                    acc = sp.S.Zero
                    for l in range(dim):
                        acc += g0inv[k, l] * low[l]
                    R[k][i][n] = Expr._wrap(self.chart, sp.cancel(sp.expand(-acc)))
        out = [
            [LambdaSeries(self.domain, R[i][j]) for j in range(dim)]
            for i in range(dim)
        ]
        self._check_matrix_identity(G, out, dim, order, "g * ginv")
        self._check_matrix_identity(out, G, dim, order, "ginv * g")
        return out

    def _check_matrix_identity(self, A, B, dim, order, label):
        for i in range(dim):
            for j in range(dim):
                acc = LambdaSeries.zero(self.domain, order)
                for k in range(dim):
                    acc = acc + self.star(A[i][k], B[k][j])
                target = (
                    LambdaSeries.unit(self.domain, order)
                    if i == j
                    else LambdaSeries.zero(self.domain, order)
                )
                if not (acc - target).is_zero():
                    raise NotInvertible(f"{label} misses the identity at ({i},{j})")

    def invariant(self, e):
        """True when every twist generator annihilates the field."""
        f = e if isinstance(e, Expr) else self.chart.expr(e)
        return all(X.apply(f).is_zero() for X in self.twist.generators)


def _vf_sympy(v, fs):
    tot = sp.S.Zero
    for sym, c in v.components.items():
        tot += c.s * sp.diff(fs, sym)
    return sp.expand(tot)


def _vf_raw(v, fs):
    tot = sp.S.Zero
    for sym, c in v.components.items():
        tot += c.s * sp.diff(fs, sym)
    return tot


def _series_vf(v, series):
    return series.map(lambda e: v.apply(e))


def conjugate_series(series):
    """Coefficientwise complex conjugation (lambda itself stays real)."""
    return series.map(lambda e: e.conjugate())
