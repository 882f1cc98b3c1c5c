"""Truncated formal power series in the deformation parameter.

A series is a finite list of coefficients c_(0), ..., c_(N) drawn from a
coefficient domain (exact complex rationals, symbolic field expressions,
differential operators, word sums, ...).  All arithmetic is exact and
truncates at the order of the shortest operand; coefficients beyond the
truncation order are never produced or consulted.
"""

from __future__ import annotations

import math
from fractions import Fraction


class NotInvertible(ArithmeticError):
    """Leading coefficient admits no inverse in its domain."""


class LeadingNotUnit(ArithmeticError):
    """Square root recursion requires leading coefficient equal to one."""


class ComplexRational:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        other = _coerce(other)
        return ComplexRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __mul__(self, other):
        other = _coerce(other)
        return ComplexRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise NotInvertible("zero has no inverse")
        return ComplexRational(self.re / n, -self.im / n)

    def conjugate(self):
        return ComplexRational(self.re, -self.im)

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def _coerce(x):
    if isinstance(x, ComplexRational):
        return x
    if isinstance(x, (int, Fraction)):
        return ComplexRational(x)
    raise TypeError(f"cannot coerce {x!r} to ComplexRational")


class Domain:
    """Coefficient domain contract: ring operations plus optional inverse.

    Subclasses fix the element type.  ``invert`` may raise NotInvertible.
    Commutativity is required only of scalar and field-expression domains;
    operator domains use the same interface without it.
    """

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def eq(self, a, b):
        raise NotImplementedError

    def invert(self, a):
        raise NotInvertible(f"domain {self!r} provides no inverses")

    def is_zero(self, a):
        return self.eq(a, self.zero())

    def coerce(self, x):
        return x


class RationalComplexDomain(Domain):
    """Exact complex rationals; the scalar instance of the series ring."""

    def zero(self):
        return ComplexRational(0)

    def one(self):
        return ComplexRational(1)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def eq(self, a, b):
        return a == b

    def invert(self, a):
        return a.inverse()

    def coerce(self, x):
        return _coerce(x)

    def __repr__(self):
        return "QQ(i)"


QQI = RationalComplexDomain()


class LambdaSeries:
    """Truncated series sum_{n=0}^{order} lambda^n c_(n) over a domain."""

    __slots__ = ("domain", "coeffs", "order")

    def __init__(self, domain, coeffs):
        coeffs = tuple(domain.coerce(c) for c in coeffs)
        if not coeffs:
            raise ValueError("a series needs at least the order-0 coefficient")
        self.domain = domain
        self.coeffs = coeffs
        self.order = len(coeffs) - 1

    @classmethod
    def constant(cls, domain, c, order):
        return cls(domain, [c] + [domain.zero()] * order)

    @classmethod
    def unit(cls, domain, order):
        return cls.constant(domain, domain.one(), order)

    @classmethod
    def zero(cls, domain, order):
        return cls.constant(domain, domain.zero(), order)

    @classmethod
    def lam(cls, domain, order, power=1):
        """The monomial lambda^power, truncated at ``order``."""
        coeffs = [domain.zero()] * (order + 1)
        if power <= order:
            coeffs[power] = domain.one()
        return cls(domain, coeffs)

    def truncate(self, order):
        if order >= self.order:
            return self
        return LambdaSeries(self.domain, self.coeffs[: order + 1])

    def _common(self, other):
        if not isinstance(other, LambdaSeries):
            other = LambdaSeries.constant(self.domain, other, self.order)
        n = min(self.order, other.order)
        return self.truncate(n), other.truncate(n)

    def __add__(self, other):
        a, b = self._common(other)
        d = a.domain
        return LambdaSeries(d, [d.add(x, y) for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        d = self.domain
        return LambdaSeries(d, [d.neg(c) for c in self.coeffs])

    def __sub__(self, other):
        a, b = self._common(other)
        return a + (-b)

    def __rsub__(self, other):
        a, b = self._common(other)
        return b + (-a)

    def __mul__(self, other):
        a, b = self._common(other)
        d = a.domain
        out = []
        for n in range(a.order + 1):
            acc = d.zero()
            for m in range(n + 1):
                acc = d.add(acc, d.mul(a.coeffs[m], b.coeffs[n - m]))
            out.append(acc)
        return LambdaSeries(d, out)

    def __rmul__(self, other):
        a, b = self._common(other)
        return b * a

    def __eq__(self, other):
        if not isinstance(other, LambdaSeries):
            return NotImplemented
        a, b = self._common(other)
        return all(a.domain.eq(x, y) for x, y in zip(a.coeffs, b.coeffs))

    def __hash__(self):
        return hash((id(self.domain), self.coeffs))

    def is_zero(self):
        return all(self.domain.is_zero(c) for c in self.coeffs)

    def map(self, fn):
        return LambdaSeries(self.domain, [fn(c) for c in self.coeffs])

    def invert(self):
        """Two-sided inverse; needs an invertible order-0 coefficient."""
        d = self.domain
        g0 = d.invert(self.coeffs[0])
        out = [g0]
        for n in range(1, self.order + 1):
            acc = d.zero()
            for m in range(1, n + 1):
                acc = d.add(acc, d.mul(self.coeffs[m], out[n - m]))
            out.append(d.neg(d.mul(g0, acc)))
        return LambdaSeries(d, out)

    def sqrt_unital(self):
        """Square root with unit leading term: 2 s_(n) = c_(n) - sum s_(m) s_(n-m).

        Valid in noncommutative domains too, since only s_(0) = 1 is ever
        required to be central.
        """
        d = self.domain
        if not d.eq(self.coeffs[0], d.one()):
            raise LeadingNotUnit("sqrt recursion needs leading coefficient 1")
        half = _half(d)
        out = [d.one()]
        for n in range(1, self.order + 1):
            acc = self.coeffs[n]
            for m in range(1, n):
                acc = d.add(acc, d.neg(d.mul(out[m], out[n - m])))
            out.append(half(acc))
        return LambdaSeries(d, out)

    def valuation(self):
        """Least order with nonzero coefficient and the ultrametric norm 2^-omega."""
        for n, c in enumerate(self.coeffs):
            if not self.domain.is_zero(c):
                return n, 2.0 ** (-n)
        return math.inf, 0.0

    def __repr__(self):
        return f"LambdaSeries({list(self.coeffs)!r})"


def _half(domain):
    """Multiplication by 1/2 in a domain that may lack division."""
    halver = getattr(domain, "halve", None)
    if halver is not None:
        return halver
    h = domain.invert(domain.add(domain.one(), domain.one()))
    return lambda a: domain.mul(h, a)


def ultrametric_distance(a, b):
    return (a - b).valuation()[1]
