"""Integer lattice helpers: saturation, quotient maps, unimodularity."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_decomp

from .rational import Q, Vec, identity, int_vec, primitive, rank

__all__ = [
    "primitive",
    "smith",
    "quotient_projection",
    "extends_to_basis",
    "saturation_basis",
    "lattice_coordinates",
    "simplex_lattice_volume",
]


def smith(rows: Sequence[Sequence[int]]):
    """Smith decomposition S = U A V of an integer matrix (rows x cols).

    Returns (diagonal entries, U, V) as nested int tuples.
    """
    a = Matrix([list(r) for r in rows])
    s, u, v = smith_normal_decomp(a)
    diag = [int(s[i, i]) for i in range(min(s.shape))]
    to_t = lambda m: tuple(tuple(int(x) for x in m.row(i)) for i in range(m.rows))
    return diag, to_t(u), to_t(v)


def quotient_projection(vectors: Sequence[Sequence], n: int | None = None) -> tuple[tuple[int, ...], ...]:
    """Integer matrix of N -> N / sat(span S), surjective onto Z^(n - rank S).

    ``n`` is the ambient rank; needed only when ``vectors`` is empty.
    """
    vectors = [int_vec(v) for v in vectors]
    if n is None:
        if not vectors:
            raise ValueError("ambient rank required for an empty set")
        n = len(vectors[0])
    nonzero = [v for v in vectors if any(v)]
    if not nonzero:
        return tuple(tuple(int(x) for x in row) for row in identity(n))
    diag, _, v = smith(nonzero)
    rho = sum(1 for x in diag if x != 0)
    # x -> (x^T V)[rho:], i.e. the rows are the trailing columns of V
    return tuple(tuple(v[r][c] for r in range(n)) for c in range(rho, n))


def extends_to_basis(vectors: Sequence[Sequence]) -> bool:
    """True iff the integer vectors are part of a Z-basis of the ambient lattice."""
    vs = [int_vec(v) for v in vectors]
    if not vs:
        return True
    if rank(vs) < len(vs):
        return False
    diag, _, _ = smith(vs)
    return all(abs(x) == 1 for x in diag)


def saturation_basis(vectors: Sequence[Sequence], n: int | None = None) -> list[tuple[int, ...]]:
    """A Z-basis of sat(span_Z S) = span_R S intersected with Z^n."""
    vs = [int_vec(v) for v in vectors if any(Q(x) != 0 for x in v)]
    if not vs:
        return []
    n = len(vs[0])
    diag, _, v = smith(vs)
    rho = sum(1 for x in diag if x != 0)
    # columns 0..rho-1 of V^{-T} span the saturation
    vinv = Matrix([list(r) for r in v]).inv()
    return [tuple(int(vinv[c, r]) for r in range(n)) for c in range(rho)]


def lattice_coordinates(basis: Sequence[Sequence], x: Sequence) -> Vec | None:
    """Coordinates of x in the given basis (rational), or None if outside the span."""
    from .rational import solve, transpose

    if not basis:
        return () if all(Q(c) == 0 for c in x) else None
    return solve(transpose(basis), x)


def simplex_lattice_volume(vertices: Sequence[Sequence]) -> Fraction:
    """Normalized volume of a lattice simplex relative to its own affine lattice.

    The affine lattice is Z^n intersected with the direction space of the
    simplex; the result is |det| of the edge vectors written in a basis of it.
    A unimodular simplex has volume 1.
    """
    from .rational import det, sub

    p0 = vertices[0]
    edges = [int_vec(sub(p, p0)) for p in vertices[1:]]
    if not edges:
        return Fraction(1)
    basis = saturation_basis(edges)
    if len(basis) != len(edges):
        return Fraction(0)
    coords = [lattice_coordinates(basis, e) for e in edges]
    return abs(det(coords))
