"""A small exact linear-programming solver (two-phase simplex, Bland's rule).

Sized for the desk-scale feasibility questions asked elsewhere in the
package: tens of variables, at most a few hundred constraints.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import Q, Vec

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    x: Vec | None = None
    value: Fraction | None = None


def _pivot(t: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    inv = 1 / t[r][c]
    row = [x * inv if x else x for x in t[r]]
    t[r] = row
    nz = [(j, b) for j, b in enumerate(row) if b]
    for i in range(len(t)):
        if i != r:
            f = t[i][c]
            if f != 0:
                ti = list(t[i])
                for j, b in nz:
                    ti[j] -= f * b
                t[i] = ti
    basis[r] = c


def _simplex(t: list[list[Fraction]], basis: list[int], ncols: int, allowed: int) -> str:
    """Maximize the objective stored in the last row (as reduced costs).

    The last row holds -c; columns >= ``allowed`` may not enter.
    """
    m = len(t) - 1
    while True:
        obj = t[m]
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return OPTIMAL
        best = None
        leave = None
        for i in range(m):
            a = t[i][enter]
            if a > 0:
                ratio = t[i][ncols] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        _pivot(t, basis, leave, enter)


def maximize(
    c: Sequence,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    nvars: int | None = None,
) -> LPResult:
    """Maximize c.x subject to a_ub.x <= b_ub and a_eq.x = b_eq, x free."""
    c = [Q(x) for x in c]
    n = nvars if nvars is not None else len(c)
    if len(c) < n:
        c = c + [Fraction(0)] * (n - len(c))
    rows: list[tuple[list[Fraction], Fraction, bool]] = []
    for a, b in zip(a_ub, b_ub):
        rows.append(([Q(x) for x in a], Q(b), False))
    for a, b in zip(a_eq, b_eq):
        rows.append(([Q(x) for x in a], Q(b), True))
    m = len(rows)
    nslack = sum(1 for r in rows if not r[2])
    # columns: u (n), w (n), slacks, artificials (m)
    nx = 2 * n
    ncols_base = nx + nslack
    ncols = ncols_base + m
    t: list[list[Fraction]] = []
    basis: list[int] = []
    si = 0
    for k, (a, b, is_eq) in enumerate(rows):
        row = [Fraction(0)] * (ncols + 1)
        for j in range(n):
            row[j] = a[j]
            row[n + j] = -a[j]
        if not is_eq:
            row[nx + si] = Fraction(1)
            si += 1
        row[ncols] = b
        if b < 0:
            row = [-x for x in row]
        row[ncols_base + k] = Fraction(1)
        t.append(row)
        basis.append(ncols_base + k)
    # phase 1: maximize -(sum of artificials)
    obj = [Fraction(0)] * (ncols + 1)
    for k in range(m):
        obj[ncols_base + k] = Fraction(1)
    for i in range(m):
        obj = [a - b for a, b in zip(obj, t[i])]
    t.append(obj)
    _simplex(t, basis, ncols, ncols)
    if t[m][ncols] != 0:
        return LPResult(INFEASIBLE)
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= ncols_base:
            j = next((j for j in range(ncols_base) if t[i][j] != 0), None)
            if j is not None:
                _pivot(t, basis, i, j)
    # phase 2 objective
    obj = [Fraction(0)] * (ncols + 1)
    for j in range(n):
        obj[j] = -c[j]
        obj[n + j] = c[j]
    for i in range(m):
        cb = obj[basis[i]]
        if cb != 0:
            obj = [a - cb * b for a, b in zip(obj, t[i])]
    t[m] = obj
    status = _simplex(t, basis, ncols, ncols_base)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    val = [Fraction(0)] * ncols
    for i in range(m):
        val[basis[i]] = t[i][ncols]
    x = tuple(val[j] - val[n + j] for j in range(n))
    return LPResult(OPTIMAL, x, t[m][ncols])


def feasible_point(
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    nvars: int | None = None,
) -> Vec | None:
    if nvars is None:
        nvars = len((list(a_ub) + list(a_eq))[0])
    res = maximize([0] * nvars, a_ub, b_ub, a_eq, b_eq, nvars=nvars)
    return res.x if res.status == OPTIMAL else None


def strictly_feasible(
    strict: Sequence[tuple[Sequence, object]],
    weak: Sequence[tuple[Sequence, object]] = (),
    eq: Sequence[tuple[Sequence, object]] = (),
    nvars: int | None = None,
) -> Vec | None:
    """A point with a.x < b on ``strict``, a.x <= b on ``weak``, a.x = b on ``eq``.

    Solved exactly by maximizing a common slack s (capped at 1); the strict
    system is feasible iff the optimum is positive.  Returns a witness or None.
    """
    allrows = list(strict) + list(weak) + list(eq)
    if nvars is None:
        if not allrows:
            raise ValueError("empty system needs nvars")
        nvars = len(allrows[0][0])
    n = nvars + 1
    a_ub, b_ub = [], []
    for a, b in strict:
        a_ub.append(list(a) + [1])
        b_ub.append(b)
    for a, b in weak:
        a_ub.append(list(a) + [0])
        b_ub.append(b)
    a_ub.append([0] * nvars + [1])
    b_ub.append(1)
    a_eq = [list(a) + [0] for a, _ in eq]
    b_eq = [b for _, b in eq]
    res = maximize([0] * nvars + [1], a_ub, b_ub, a_eq, b_eq, nvars=n)
    if res.status != OPTIMAL or res.value <= 0:
        return None
    return res.x[:nvars]
