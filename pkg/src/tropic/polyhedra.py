"""Exact convex polytopes, polyhedra and rational cones.

Conversions between vertex and inequality descriptions use the double
description method on homogenized cones.  Faces are stored as frozensets of
vertex indices and deduplicated through facet incidence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import ceil, floor
from typing import Iterable, Sequence

from .lattice import extends_to_basis
from .rational import (
    Q,
    Vec,
    add,
    affine_rank,
    centroid,
    dot,
    fmt_vec,
    is_integral,
    nullspace,
    primitive,
    rank,
    rref,
    scale,
    sub,
    unit,
    vec,
)


class GeometryError(ValueError):
    """Raised for inputs violating a geometric precondition."""


# ---------------------------------------------------------------------------
# double description


def _normalize_ray(v: Sequence[Fraction]) -> Vec:
    if all(x == 0 for x in v):
        return tuple(v)
    return tuple(Fraction(x) for x in primitive(v))


def cone_generators(
    ineqs: Sequence[Sequence], dim: int, eqs: Sequence[Sequence] = ()
) -> tuple[list[Vec], list[Vec]]:
    """Extreme rays and a lineality basis of {x : a.x >= 0 (ineqs), a.x = 0 (eqs)}."""
    cons: list[Vec] = []
    for a in eqs:
        a = vec(a)
        cons.append(a)
        cons.append(tuple(-x for x in a))
    cons.extend(vec(a) for a in ineqs)
    lin: list[Vec] = [unit(dim, i) for i in range(dim)]
    rays: list[Vec] = []
    zs: list[frozenset] = []
    for idx, a in enumerate(cons):
        if all(x == 0 for x in a):
            zs = [z | {idx} for z in zs]
            continue
        pick = next((k for k, l in enumerate(lin) if dot(a, l) != 0), None)
        if pick is not None:
            l0 = lin.pop(pick)
            s0 = dot(a, l0)
            if s0 < 0:
                l0 = tuple(-x for x in l0)
                s0 = -s0
            lin = [sub(l, scale(dot(a, l) / s0, l0)) for l in lin]
            rays = [_normalize_ray(sub(r, scale(dot(a, r) / s0, l0))) for r in rays]
            zs = [z | {idx} for z in zs]
            rays.append(_normalize_ray(l0))
            zs.append(frozenset(range(idx)))
            continue
        vals = [dot(a, r) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zer = [k for k, v in enumerate(vals) if v == 0]
        new_rays = [rays[k] for k in pos] + [rays[k] for k in zer]
        new_zs = [zs[k] for k in pos] + [zs[k] | {idx} for k in zer]
        for p in pos:
            for n in neg:
                common = zs[p] & zs[n]
                if any(k != p and k != n and common <= zs[k] for k in range(len(rays))):
                    continue
                r = sub(scale(vals[p], rays[n]), scale(vals[n], rays[p]))
                new_rays.append(_normalize_ray(r))
                new_zs.append(common | {idx})
        rays, zs = new_rays, new_zs
    lin = [_normalize_ray(l) for l in lin]
    return rays, lin


# ---------------------------------------------------------------------------
# polyhedra given by inequalities


@dataclass(frozen=True)
class Polyhedron:
    """{x : a.x >= b for (a, b) in ineqs, a.x = b for (a, b) in eqs}."""

    dim: int
    ineqs: tuple = ()
    eqs: tuple = ()

    @cached_property
    def generators(self) -> tuple[list[Vec], list[Vec], list[Vec]]:
        """(points, rays, lineality) with points the minimal faces' representatives."""
        n = self.dim
        hin = [tuple(a) + (-Q(b),) for a, b in self.ineqs]
        hin.append(unit(n + 1, n))
        heq = [tuple(a) + (-Q(b),) for a, b in self.eqs]
        rays, lin = cone_generators(hin, n + 1, heq)
        pts, rec = [], []
        for r in rays:
            if r[n] > 0:
                pts.append(tuple(x / r[n] for x in r[:n]))
            else:
                rec.append(tuple(r[:n]))
        lins = [tuple(l[:n]) for l in lin]
        return sorted(pts), sorted(rec), lins

    def is_empty(self) -> bool:
        return not self.generators[0]

    def contains(self, x: Sequence) -> bool:
        return all(dot(a, x) >= Q(b) for a, b in self.ineqs) and all(
            dot(a, x) == Q(b) for a, b in self.eqs
        )

    def relint_point(self) -> Vec:
        pts, rays, _ = self.generators
        if not pts:
            raise GeometryError("empty polyhedron has no interior point")
        p = centroid(pts)
        for r in rays:
            p = add(p, r)
        return p

    def is_bounded(self) -> bool:
        _, rays, lin = self.generators
        return not rays and not lin

    def affine_dimension(self) -> int:
        pts, rays, lin = self.generators
        if not pts:
            return -1
        p0 = pts[0]
        dirs = [sub(p, p0) for p in pts[1:]] + list(rays) + list(lin)
        return rank(dirs) if dirs else 0


# ---------------------------------------------------------------------------
# polytopes


def _affine_frame(points: Sequence[Vec]):
    """Base point, pivot columns and equations of the affine hull."""
    p0 = points[0]
    diffs = [sub(p, p0) for p in points[1:]]
    n = len(p0)
    if diffs:
        red, piv = rref(diffs)
    else:
        red, piv = [], []
    eqs = nullspace(red, n) if red else [unit(n, i) for i in range(n)]
    return p0, red, piv, eqs


@dataclass(frozen=True, eq=False)
class Polytope:
    """A rational polytope with both descriptions.

    ``facets`` are pairs (normal, rhs) meaning normal.x >= rhs; ``equations``
    pin down the affine hull when the polytope is not full dimensional.
    """

    vertices: tuple
    facets: tuple
    equations: tuple
    lattice: str = "N"

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])

    @cached_property
    def dim(self) -> int:
        return affine_rank(list(self.vertices))

    def __eq__(self, other) -> bool:
        return isinstance(other, Polytope) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Polytope(dim={self.dim}, vertices={[fmt_vec(v) for v in self.vertices]})"

    def contains(self, x: Sequence) -> bool:
        x = vec(x)
        return all(dot(a, x) >= b for a, b in self.facets) and all(
            dot(a, x) == b for a, b in self.equations
        )

    def in_relint(self, x: Sequence) -> bool:
        x = vec(x)
        return all(dot(a, x) > b for a, b in self.facets) and all(
            dot(a, x) == b for a, b in self.equations
        )

    def min_pairing(self, u: Sequence) -> Fraction:
        return min(dot(u, v) for v in self.vertices)

    def check(self) -> None:
        """V/H cross-check: vertices satisfy everything, facets are supported."""
        for v in self.vertices:
            if not self.contains(v):
                raise GeometryError(f"vertex {fmt_vec(v)} violates the H-description")
        for a, b in self.facets:
            tight = [v for v in self.vertices if dot(a, v) == b]
            if affine_rank(tight) != self.dim - 1:
                raise GeometryError(f"inequality {fmt_vec(a)} >= {b} is not a facet")

    # -- faces --------------------------------------------------------------

    @cached_property
    def facet_incidence(self) -> tuple[frozenset, ...]:
        return tuple(
            frozenset(i for i, v in enumerate(self.vertices) if dot(a, v) == b)
            for a, b in self.facets
        )

    @cached_property
    def faces(self) -> tuple[frozenset, ...]:
        """All nonempty faces as vertex-index sets, sorted by (dim, indices)."""
        full = frozenset(range(len(self.vertices)))
        found = {full}
        frontier = set(self.facet_incidence)
        while frontier:
            found |= frontier
            nxt = set()
            for f in frontier:
                for g in self.facet_incidence:
                    h = f & g
                    if h and h not in found:
                        nxt.add(h)
            frontier = nxt
        return tuple(sorted(found, key=lambda f: (self.face_dim(f), sorted(f))))

    def face_dim(self, face: Iterable[int]) -> int:
        return affine_rank([self.vertices[i] for i in face])

    def face_vertices(self, face: Iterable[int]) -> list[Vec]:
        return [self.vertices[i] for i in sorted(face)]

    def face_polytope(self, face: Iterable[int]) -> "Polytope":
        return hull(self.face_vertices(face), lattice=self.lattice)

    @cached_property
    def f_vector(self) -> tuple[int, ...]:
        counts = [0] * (self.dim + 1)
        for f in self.faces:
            counts[self.face_dim(f)] += 1
        return tuple(counts[:-1]) if self.dim > 0 else (1,)

    def proper_faces(self) -> list[frozenset]:
        full = frozenset(range(len(self.vertices)))
        return [f for f in self.faces if f != full]

    def is_face(self, points: Iterable[Sequence]) -> bool:
        idx = set()
        for p in points:
            p = vec(p)
            if p not in self.vertices:
                return False
            idx.add(self.vertices.index(p))
        return frozenset(idx) in set(self.faces)

    # -- lattice data -------------------------------------------------------

    def is_lattice(self) -> bool:
        return all(is_integral(v) for v in self.vertices)

    def lattice_points(self) -> list[Vec]:
        lo = [floor(min(v[k] for v in self.vertices)) for k in range(self.ambient_dim)]
        hi = [ceil(max(v[k] for v in self.vertices)) for k in range(self.ambient_dim)]
        out = []
        for p in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            x = tuple(Fraction(c) for c in p)
            if self.contains(x):
                out.append(x)
        return out

    def relint_sample(self) -> Vec:
        return centroid(list(self.vertices))

    def interior_lattice_points(self) -> list[Vec]:
        return [p for p in self.lattice_points() if self.in_relint(p)]

    def is_reflexive(self) -> bool:
        if self.dim != self.ambient_dim or not self.is_lattice():
            return False
        if not self.in_relint(tuple(Fraction(0) for _ in range(self.ambient_dim))):
            return False
        return polar_dual(self).is_lattice()

    def translate(self, t: Sequence) -> "Polytope":
        return hull([add(v, t) for v in self.vertices], lattice=self.lattice)

    def to_json(self) -> dict:
        return {
            "lattice": self.lattice,
            "rank": self.ambient_dim,
            "vertices": [fmt_vec(v) for v in self.vertices],
        }

    @staticmethod
    def from_json(obj: dict) -> "Polytope":
        p = hull(obj["vertices"], lattice=obj.get("lattice", "N"))
        if p.ambient_dim != obj.get("rank", p.ambient_dim):
            raise GeometryError("rank does not match the vertex coordinates")
        return p


def hull(points: Iterable[Sequence], lattice: str = "N") -> Polytope:
    """Convex hull with facets, via double description on the dual cone."""
    pts = sorted(set(vec(p) for p in points))
    if not pts:
        raise GeometryError("hull of an empty point set")
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise GeometryError("points of different dimensions")
    p0, red, piv, eqs = _affine_frame(pts)
    equations = tuple(sorted((tuple(Fraction(x) for x in primitive(e)),) for e in eqs))
    equations = tuple((e[0], dot(e[0], p0)) for e in equations)
    k = len(piv)
    if k == 0:
        return Polytope((p0,), (), equations, lattice)
    ys = [tuple(sub(p, p0)[c] for c in piv) for p in pts]
    rays, lin = cone_generators([y + (Fraction(1),) for y in ys], k + 1)
    if lin:
        raise GeometryError("degenerate affine frame")
    facets = []
    for r in rays:
        a, beta = r[:k], r[k]
        if all(x == 0 for x in a):
            continue
        normal = [Fraction(0)] * n
        for ai, c in zip(a, piv):
            normal[c] = ai
        rhs = -beta + dot(normal, p0)
        # scale to a primitive integer normal
        prim = primitive(normal)
        ratio = next(Fraction(p) / q for p, q in zip(prim, normal) if q != 0)
        facets.append((tuple(Fraction(x) for x in prim), rhs * ratio))
    facets.sort()
    verts = []
    for i, y in enumerate(ys):
        tight = [r[:k] for r in rays if dot(r[:k], y) + r[k] == 0]
        if rank(tight) == k if tight else k == 0:
            verts.append(pts[i])
    return Polytope(tuple(sorted(verts)), tuple(facets), equations, lattice)


def from_inequalities(ineqs, eqs=(), dim: int | None = None, lattice: str = "N") -> Polytope:
    ineqs = [(vec(a), Q(b)) for a, b in ineqs]
    eqs = [(vec(a), Q(b)) for a, b in eqs]
    if dim is None:
        dim = len((ineqs + eqs)[0][0])
    poly = Polyhedron(dim, tuple(ineqs), tuple(eqs))
    pts, rays, lin = poly.generators
    if rays or lin:
        raise GeometryError("inequalities describe an unbounded polyhedron")
    if not pts:
        raise GeometryError("inequalities describe the empty set")
    return hull(pts, lattice=lattice)


def polar_dual(p: Polytope) -> Polytope:
    """{y : <x, y> >= -1 for all x in P}; requires 0 in the interior of P."""
    if p.dim != p.ambient_dim:
        raise GeometryError("polar dual needs a full-dimensional polytope")
    verts = []
    for a, b in p.facets:
        if b >= 0:
            raise GeometryError(
                f"origin is not interior: inequality {fmt_vec(a)} . x >= {b} fails strictly at 0"
            )
        verts.append(scale(Fraction(-1) / b, a))
    other = "M" if p.lattice == "N" else "N"
    return hull(verts, lattice=other)


def minkowski_sum(p: Polytope, q: Polytope) -> Polytope:
    if p.lattice != q.lattice:
        raise GeometryError(f"lattice tags differ: {p.lattice} vs {q.lattice}")
    if p.ambient_dim != q.ambient_dim:
        raise GeometryError("ambient dimensions differ")
    return hull([add(u, v) for u in p.vertices for v in q.vertices], lattice=p.lattice)


def minkowski_sum_all(polys: Sequence[Polytope]) -> Polytope:
    out = polys[0]
    for q in polys[1:]:
        out = minkowski_sum(out, q)
    return out


def point(p: Sequence, lattice: str = "N") -> Polytope:
    return hull([p], lattice=lattice)


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True, eq=False)
class RatCone:
    """A rational polyhedral cone given by primitive generators."""

    generators: tuple
    ambient_dim: int

    @staticmethod
    def of(gens: Iterable[Sequence], dim: int | None = None) -> "RatCone":
        gens = [vec(g) for g in gens]
        if dim is None:
            if not gens:
                raise GeometryError("dimension required for the zero cone")
            dim = len(gens[0])
        prim = sorted({tuple(Fraction(x) for x in primitive(g)) for g in gens if any(g)})
        return RatCone(tuple(prim), dim)

    def __eq__(self, other) -> bool:
        return isinstance(other, RatCone) and set(self.rays) == set(other.rays)

    def __hash__(self) -> int:
        return hash(frozenset(self.rays))

    @cached_property
    def _h(self):
        n = self.ambient_dim
        if not self.generators:
            return [], [unit(n, i) for i in range(n)]
        rays, lin = cone_generators([g for g in self.generators], n)
        return rays, lin

    @property
    def inequalities(self) -> list[Vec]:
        """Normals a with a.x >= 0 on the cone (facets of the cone)."""
        return self._h[0]

    @property
    def equations(self) -> list[Vec]:
        """Normals a with a.x = 0 on the cone (orthogonal of its span)."""
        return self._h[1]

    @cached_property
    def rays(self) -> tuple:
        """Extreme rays among the generators (all generators if not pointed)."""
        if not self.generators:
            return ()
        if self.equations and rank(list(self.equations)) + rank(list(self.generators)) != self.ambient_dim:
            return self.generators
        n = self.ambient_dim
        keep = []
        for g in self.generators:
            tight = [a for a in self.inequalities if dot(a, g) == 0] + list(self.equations)
            if rank(tight) == n - 1:
                keep.append(g)
        if not keep:
            return self.generators
        return tuple(sorted(keep))

    @property
    def dim(self) -> int:
        return rank(list(self.generators)) if self.generators else 0

    def is_pointed(self) -> bool:
        from .lp import strictly_feasible

        if not self.generators:
            return True
        n = self.ambient_dim
        # pointed iff some linear form is positive on all generators
        return strictly_feasible([(tuple(-x for x in g), 0) for g in self.generators], nvars=n) is not None

    def is_simplicial(self) -> bool:
        return rank(list(self.rays)) == len(self.rays)

    def is_unimodular(self) -> bool:
        return self.is_simplicial() and extends_to_basis(self.rays)

    def contains(self, x: Sequence) -> bool:
        x = vec(x)
        return all(dot(a, x) >= 0 for a in self.inequalities) and all(
            dot(a, x) == 0 for a in self.equations
        )

    def in_relint(self, x: Sequence) -> bool:
        x = vec(x)
        if not all(dot(a, x) == 0 for a in self.equations):
            return False
        faces = [a for a in self.inequalities]
        return all(dot(a, x) > 0 for a in faces)

    @cached_property
    def _faces(self) -> tuple:
        out = {self}
        ineqs = self.inequalities
        rays = self.rays
        for k in range(1, len(ineqs) + 1):
            for combo in itertools.combinations(ineqs, k):
                sub_rays = [r for r in rays if all(dot(a, r) == 0 for a in combo)]
                out.add(RatCone(tuple(sorted(sub_rays)), self.ambient_dim))
        out.add(RatCone((), self.ambient_dim))
        return tuple(sorted(out, key=lambda c: (c.dim, c.rays)))

    def faces(self) -> list["RatCone"]:
        """All faces, including {0} and the cone itself."""
        return list(self._faces)

    def is_face_of(self, other: "RatCone") -> bool:
        mine = set(self.rays)
        if not mine <= set(other.rays):
            return False
        tight = [a for a in other.inequalities if all(dot(a, r) == 0 for r in mine)]
        face_rays = {r for r in other.rays if all(dot(a, r) == 0 for a in tight)}
        return face_rays == mine

    def relint_sample(self) -> Vec:
        if not self.rays:
            return tuple(Fraction(0) for _ in range(self.ambient_dim))
        s = self.rays[0]
        for r in self.rays[1:]:
            s = add(s, r)
        return s


def _in_cone(x: Sequence, gens: Sequence[Sequence]) -> bool:
    from .lp import feasible_point

    k = len(gens)
    n = len(x)
    a_eq = [[g[i] for g in gens] for i in range(n)]
    a_ub = [[-1 if j == i else 0 for j in range(k)] for i in range(k)]
    return feasible_point(a_ub, [0] * k, a_eq, list(x), nvars=k) is not None


def cone_contains_cone(big: RatCone, small: RatCone) -> bool:
    return all(big.contains(r) for r in small.rays)


def polyhedron_hull(points: Iterable[Sequence], rays: Iterable[Sequence] = ()) -> Polyhedron:
    """conv(points) + cone(rays) as an inequality description."""
    pts = [vec(p) for p in points]
    rs = [vec(r) for r in rays]
    if not pts:
        raise GeometryError("polyhedron needs at least one point")
    n = len(pts[0])
    cons = [p + (Fraction(1),) for p in pts] + [r + (Fraction(0),) for r in rs]
    gens, lin = cone_generators(cons, n + 1)
    ineqs = []
    for g in gens:
        a, beta = g[:n], g[n]
        if all(x == 0 for x in a):
            continue
        ineqs.append((a, -beta))
    eqs = [(l[:n], -l[n]) for l in lin]
    return Polyhedron(n, tuple(sorted(ineqs)), tuple(eqs))


def polyhedron_sum(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    pp, pr, pl = p.generators
    qp, qr, ql = q.generators
    rays = list(pr) + list(qr) + list(pl) + list(ql) + [tuple(-x for x in l) for l in pl + ql]
    return polyhedron_hull([add(a, b) for a in pp for b in qp], rays)
