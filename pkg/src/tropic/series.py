"""Truncated power series and Puiseux series over Q.

Two independent representations are kept on purpose: ``PowerSeries`` is a dense
coefficient list in a uniformizer s and is what the Newton solver works with;
``Puiseux`` is a sparse map from rational t-exponents to coefficients and is
used to re-evaluate residuals from scratch.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import gmpy2

from .rational import Q, fmt

# coefficients are GMP rationals: the Newton iteration is dominated by gcd work
# on growing numerators, which gmpy2 does far faster than fractions.Fraction
mpq = gmpy2.mpq
ZERO = mpq(0)


def coef(x):
    """Coerce an int, Fraction, mpq or ``"a/b"`` string to a coefficient."""
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, (int, str, Fraction)) and not isinstance(x, bool):
        return mpq(Q(x))
    raise TypeError(f"cannot read {x!r} as an exact rational")


class SeriesError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PowerSeries:
    """sum_j c[j] s^j modulo s^prec."""

    c: tuple

    @staticmethod
    def const(x, prec: int) -> "PowerSeries":
        return PowerSeries((coef(x),) + (ZERO,) * (prec - 1))

    @staticmethod
    def monomial(x, e: int, prec: int) -> "PowerSeries":
        c = [ZERO] * prec
        if e < prec:
            c[e] = coef(x)
        return PowerSeries(tuple(c))

    @property
    def prec(self) -> int:
        return len(self.c)

    def truncate(self, prec: int) -> "PowerSeries":
        c = self.c[:prec]
        return PowerSeries(c + (ZERO,) * (prec - len(c)))

    def __add__(self, o: "PowerSeries") -> "PowerSeries":
        p = min(self.prec, o.prec)
        return PowerSeries(tuple(a + b for a, b in zip(self.c[:p], o.c[:p])))

    def __sub__(self, o: "PowerSeries") -> "PowerSeries":
        p = min(self.prec, o.prec)
        return PowerSeries(tuple(a - b for a, b in zip(self.c[:p], o.c[:p])))

    def __neg__(self) -> "PowerSeries":
        return PowerSeries(tuple(-a for a in self.c))

    def scale(self, x) -> "PowerSeries":
        x = coef(x)
        return PowerSeries(tuple(a * x for a in self.c))

    def __mul__(self, o: "PowerSeries") -> "PowerSeries":
        p = min(self.prec, o.prec)
        a = [(i, x) for i, x in enumerate(self.c[:p]) if x]
        b = [(j, y) for j, y in enumerate(o.c[:p]) if y]
        out = [ZERO] * p
        for i, x in a:
            for j, y in b:
                if i + j >= p:
                    break
                out[i + j] += x * y
        return PowerSeries(tuple(out))

    def shift(self, e: int) -> "PowerSeries":
        """Multiply by s^e (e >= 0), keeping the precision."""
        return PowerSeries(((ZERO,) * e + self.c)[: self.prec])

    def inverse(self) -> "PowerSeries":
        if self.c[0] == 0:
            raise SeriesError("only units can be inverted")
        p = self.prec
        inv0 = 1 / self.c[0]
        out = [inv0] + [ZERO] * (p - 1)
        for k in range(1, p):
            acc = sum((self.c[j] * out[k - j] for j in range(1, k + 1) if self.c[j]), ZERO)
            out[k] = -acc * inv0
        return PowerSeries(tuple(out))

    def __pow__(self, e: int) -> "PowerSeries":
        if e < 0:
            return self.inverse() ** (-e)
        out = PowerSeries.const(1, self.prec)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient; None if zero to this precision."""
        for i, x in enumerate(self.c):
            if x:
                return i
        return None


@dataclass(frozen=True)
class Puiseux:
    """Sparse Puiseux polynomial: {t-exponent: coefficient}, exact below ``bound``."""

    terms: tuple  # sorted ((exponent, coeff), ...)
    bound: Fraction

    @staticmethod
    def of(d: dict, bound) -> "Puiseux":
        bound = Q(bound)
        return Puiseux(tuple(sorted((Q(e), coef(c)) for e, c in d.items() if c and Q(e) < bound)), bound)

    @staticmethod
    def from_power_series(lead, ramification: int, ps: PowerSeries, bound=None) -> "Puiseux":
        """t^lead * sum_j c_j t^(j/ramification)."""
        lead = Q(lead)
        top = lead + Fraction(ps.prec, ramification) if bound is None else Q(bound)
        return Puiseux.of({lead + Fraction(j, ramification): x for j, x in enumerate(ps.c) if x}, top)

    def __mul__(self, o: "Puiseux") -> "Puiseux":
        # exact below min(bound_a + val_b, bound_b + val_a)
        va, vb = self.valuation(), o.valuation()
        if va is None or vb is None:
            return Puiseux((), min(self.bound + (vb or 0), o.bound + (va or 0)))
        bound = min(self.bound + vb, o.bound + va)
        out: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in o.terms:
                e = e1 + e2
                if e < bound:
                    out[e] = out.get(e, ZERO) + c1 * c2
        return Puiseux.of(out, bound)

    def __add__(self, o: "Puiseux") -> "Puiseux":
        out = dict(self.terms)
        for e, c in o.terms:
            out[e] = out.get(e, ZERO) + c
        return Puiseux.of(out, min(self.bound, o.bound))

    def scale(self, x, texp=0) -> "Puiseux":
        x, texp = coef(x), Q(texp)
        return Puiseux.of({e + texp: c * x for e, c in self.terms}, self.bound + texp)

    def valuation(self) -> Fraction | None:
        return self.terms[0][0] if self.terms else None

    def leading(self) -> Fraction:
        if not self.terms:
            raise SeriesError("zero to the known precision")
        return self.terms[0][1]

    def inverse(self) -> "Puiseux":
        v = self.valuation()
        if v is None:
            raise SeriesError("cannot invert a series that vanishes to its precision")
        if len(self.terms) == 1:
            return Puiseux(((-v, 1 / self.terms[0][1]),), self.bound - 2 * v)
        # t^-v * (1/u) with u = t^-v * self a unit in t^(1/D)
        den = 1
        for e, _ in self.terms:
            den = lcm(den, (e - v).denominator)
        den = lcm(den, (self.bound - v).denominator)
        prec = int((self.bound - v) * den)
        c = [ZERO] * max(prec, 1)
        for e, x in self.terms:
            c[int((e - v) * den)] = x
        inv = PowerSeries(tuple(c)).inverse()
        return Puiseux.of({-v + Fraction(j, den): x for j, x in enumerate(inv.c) if x}, -v + Fraction(prec, den))

    def __pow__(self, e: int) -> "Puiseux":
        if e < 0:
            return self.inverse() ** (-e)
        out = Puiseux(((Fraction(0), mpq(1)),), Fraction(10**9))
        for _ in range(e):
            out = out * self
        return out

    def to_json(self) -> list:
        return [[fmt(e), str(c)] for e, c in self.terms]

    @staticmethod
    def from_json(terms: list, bound) -> "Puiseux":
        return Puiseux.of({Q(e): coef(c) for e, c in terms}, bound)


def evaluate_laurent(terms: Sequence[tuple], coords: Sequence[Puiseux], texp_of) -> Puiseux:
    """sum_m c_m t^{texp_of(m)} z^m for a Laurent polynomial given as ((m, c), ...)."""
    total = None
    powers: dict = {}
    for m, c in terms:
        term = Puiseux(((Q(texp_of(m)), coef(c)),), Fraction(10**9))
        for k, e in enumerate(m):
            if e:
                key = (k, int(e))
                if key not in powers:
                    powers[key] = coords[k] ** int(e)
                term = term * powers[key]
        total = term if total is None else total + term
    return total
