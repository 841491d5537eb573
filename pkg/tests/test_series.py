from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from tropic.series import Puiseux, PowerSeries, SeriesError, evaluate_laurent

coef = st.fractions(-5, 5, max_denominator=4)
units = st.lists(coef, min_size=6, max_size=6).filter(lambda c: c[0] != 0)
series = st.lists(coef, min_size=6, max_size=6)


def ps(c):
    return PowerSeries(tuple(Fraction(x) for x in c))


def sympy_coeffs(expr, s, n):
    poly = sympy.series(expr, s, 0, n).removeO()
    return tuple(Fraction(str(poly.coeff(s, k))) for k in range(n))


def test_inverse_against_sympy():
    c = (Fraction(2), Fraction(-1, 3), Fraction(0), Fraction(5, 2), Fraction(1), Fraction(-7))
    s = sympy.Symbol("s")
    expr = 1 / sum(sympy.Rational(x.numerator, x.denominator) * s**k for k, x in enumerate(c))
    assert ps(c).inverse().c == sympy_coeffs(expr, s, 6)


def test_power_against_sympy():
    c = (Fraction(1), Fraction(2), Fraction(-1, 2), Fraction(0), Fraction(3))
    s = sympy.Symbol("s")
    expr = sum(sympy.Rational(x.numerator, x.denominator) * s**k for k, x in enumerate(c)) ** -3
    assert (ps(c) ** -3).c == sympy_coeffs(expr, s, 5)


def test_non_unit_has_no_inverse():
    with pytest.raises(SeriesError):
        ps((0, 1, 2)).inverse()


def test_valuation_and_shift():
    a = ps((0, 0, 3, 1))
    assert a.valuation() == 2
    assert ps((1, 2, 3)).shift(2).c == (0, 0, 1)
    assert ps((0, 0)).valuation() is None


@settings(max_examples=60, deadline=None)
@given(units)
def test_unit_times_inverse_is_one(c):
    a = ps(c)
    assert (a * a.inverse()).c == PowerSeries.const(1, 6).c


@settings(max_examples=60, deadline=None)
@given(series, series, series)
def test_product_is_associative_and_distributive(a, b, c):
    a, b, c = ps(a), ps(b), ps(c)
    assert ((a * b) * c).c == (a * (b * c)).c
    assert (a * (b + c)).c == (a * b + a * c).c


def test_puiseux_arithmetic():
    t = Puiseux.of({Fraction(1, 2): 1}, 100)
    one = Puiseux.of({0: 1}, 100)
    x = one + t  # 1 + t^(1/2)
    y = x * x
    assert dict(y.terms) == {0: 1, Fraction(1, 2): 2, 1: 1}
    inv = x.inverse()
    assert inv.bound == 100
    # (1 + u)^-1 = 1 - u + u^2 - ...
    assert dict(inv.terms)[Fraction(3, 2)] == -1
    prod = x * inv
    assert prod.terms == ((0, 1),)


def test_puiseux_inverse_of_monomial_keeps_bound_finite():
    m = Puiseux(((Fraction(2), Fraction(3)),), Fraction(10))
    inv = m.inverse()
    assert inv.terms == ((Fraction(-2), Fraction(1, 3)),)
    assert inv.bound == 6


def test_puiseux_zero_cannot_be_inverted():
    with pytest.raises(SeriesError):
        Puiseux((), Fraction(3)).inverse()


@settings(max_examples=40, deadline=None)
@given(units, series)
def test_puiseux_matches_power_series(a, b):
    pa, pb = ps(a), ps(b)
    qa = Puiseux.from_power_series(0, 2, pa)
    qb = Puiseux.from_power_series(0, 2, pb)
    assert (qa * qb).terms == Puiseux.from_power_series(0, 2, pa * pb).terms
    assert qa.inverse().terms == Puiseux.from_power_series(0, 2, pa.inverse()).terms


def test_puiseux_json_round_trip():
    x = Puiseux.of({Fraction(-1, 3): 2, Fraction(5, 2): Fraction(-7, 4)}, 6)
    assert Puiseux.from_json(x.to_json(), 6) == x


def test_evaluate_laurent():
    # t^1 * z0 * z1^-1 + 2 at z0 = t, z1 = 1 + t
    z0 = Puiseux.of({1: 1}, 20)
    z1 = Puiseux.of({0: 1, 1: 1}, 20)
    val = evaluate_laurent([((1, -1), 1), ((0, 0), 2)], [z0, z1], lambda m: 1 if m == (1, -1) else 0)
    # t^2 / (1 + t) = t^2 - t^3 + ...
    d = dict(val.terms)
    assert d[0] == 2 and d[2] == 1 and d[3] == -1 and d[4] == 1
