"""Exact rational vectors and matrices.

Vectors are tuples of :class:`fractions.Fraction`; matrices are tuples of
row vectors.  Everything here is exact, there is no floating point.
"""
from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence

Vec = tuple  # tuple[Fraction, ...]
Mat = tuple  # tuple[Vec, ...]


def Q(x) -> Fraction:
    """Coerce an int, Fraction or ``"a/b"`` string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot read {x!r} as an exact rational")


def vec(xs: Iterable) -> Vec:
    return tuple(Q(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(vec(r) for r in rows)


def fmt(x: Fraction) -> str | int:
    """JSON friendly form: ints stay ints, other rationals become ``"a/b"``."""
    x = Q(x)
    if x.denominator == 1:
        return int(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def fmt_vec(v: Sequence) -> list:
    return [fmt(x) for x in v]


def zero(n: int) -> Vec:
    return (Fraction(0),) * n


def unit(n: int, i: int) -> Vec:
    return tuple(Fraction(1 if k == i else 0) for k in range(n))


def add(u: Sequence, v: Sequence) -> Vec:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence, v: Sequence) -> Vec:
    return tuple(a - b for a, b in zip(u, v))


def scale(c, v: Sequence) -> Vec:
    c = Q(c)
    return tuple(c * a for a in v)


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def vsum(vs: Iterable[Sequence], n: int | None = None) -> Vec:
    vs = list(vs)
    if not vs:
        if n is None:
            raise ValueError("empty sum needs an explicit dimension")
        return zero(n)
    return reduce(add, vs)


def centroid(points: Sequence[Sequence]) -> Vec:
    if not points:
        raise ValueError("centroid of an empty set")
    k = Fraction(1, len(points))
    return scale(k, vsum(points))


def is_integral(v: Sequence) -> bool:
    return all(Q(a).denominator == 1 for a in v)


def transpose(m: Sequence[Sequence]) -> Mat:
    if not m:
        return ()
    return tuple(tuple(col) for col in zip(*m))


def matvec(m: Sequence[Sequence], v: Sequence) -> Vec:
    return tuple(dot(row, v) for row in m)


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Mat:
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def identity(n: int) -> Mat:
    return tuple(unit(n, i) for i in range(n))


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot columns)."""
    a = [[Q(x) for x in r] for r in rows]
    if not a:
        return [], []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[Vec]:
    """Basis of {x : rows . x = 0}."""
    if not rows:
        if ncols is None:
            raise ValueError("need ncols for an empty system")
        return [unit(ncols, i) for i in range(ncols)]
    ncols = len(rows[0])
    red, piv = rref(rows)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, piv):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def solve(a: Sequence[Sequence], b: Sequence) -> Vec | None:
    """One solution of a.x = b, or None if inconsistent."""
    if not a:
        return None if any(Q(x) != 0 for x in b) else ()
    n = len(a[0])
    aug = [list(r) + [Q(bi)] for r, bi in zip(a, b)]
    red, piv = rref(aug)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for row, p in zip(red, piv):
        x[p] = row[n]
    return tuple(x)


def det(m: Sequence[Sequence]) -> Fraction:
    a = [[Q(x) for x in r] for r in m]
    n = len(a)
    if n == 0:
        return Fraction(1)
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            d = -d
        d *= a[c][c]
        inv = 1 / a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return d


def inverse(m: Sequence[Sequence]) -> Mat:
    n = len(m)
    aug = [list(map(Q, r)) + list(unit(n, i)) for i, r in enumerate(m)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ValueError("matrix is singular")
    return tuple(tuple(row[n:]) for row in red)


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull (-1 for the empty set)."""
    if not points:
        return -1
    p0 = points[0]
    return rank([sub(p, p0) for p in points[1:]]) if len(points) > 1 else 0


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b) if a and b else 0


def primitive(v: Sequence) -> tuple[int, ...]:
    """The primitive integer vector on the ray through ``v``."""
    v = [Q(x) for x in v]
    if all(x == 0 for x in v):
        raise ValueError("the zero vector has no primitive generator")
    den = reduce(lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(x) for x in ints), 0)
    return tuple(x // g for x in ints)


def int_vec(v: Sequence) -> tuple[int, ...]:
    if not is_integral(v):
        raise ValueError(f"{fmt_vec(v)} is not a lattice vector")
    return tuple(int(Q(x)) for x in v)


def lex_key(v: Sequence) -> tuple:
    return tuple(Q(x) for x in v)
