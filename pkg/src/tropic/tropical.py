"""Tropical toric varieties, tropical polynomials and complete intersections.

Points of a tropical toric variety are pairs (orbit cone, lift): the orbit
O_C is N_R / span(C) and ``lift`` is any representative in N_R.  Orbit
closures of a tropical hypersurface are computed from the restricted
polynomial whose terms minimize the pairing with the relative interior of C.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .checks import Report
from .fans import Fan, PLFunction
from .lattice import quotient_projection
from .lp import feasible_point
from .polyhedra import GeometryError, Polyhedron, Polytope, RatCone, hull
from .rational import Q, Vec, affine_rank, centroid, dot, fmt, fmt_vec, matvec, sub, vec


class StableIntersectionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TropPoint:
    cone: RatCone
    lift: Vec

    @staticmethod
    def finite(x: Sequence) -> "TropPoint":
        x = vec(x)
        return TropPoint(RatCone((), len(x)), x)

    @cached_property
    def coords(self) -> tuple:
        proj = quotient_projection(self.cone.rays, len(self.lift))
        return matvec(proj, self.lift)

    def __eq__(self, other) -> bool:
        return isinstance(other, TropPoint) and self.cone == other.cone and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.cone, self.coords))

    def __repr__(self) -> str:
        return f"TropPoint(cone={[fmt_vec(r) for r in self.cone.rays]}, lift={fmt_vec(self.lift)})"

    def to_json(self) -> dict:
        return {"orbit": [fmt_vec(r) for r in self.cone.rays], "lift": fmt_vec(self.lift)}


def pi_C(p: TropPoint, c: RatCone) -> TropPoint:
    """The projection X_C(T) -> O_C(T); the orbit cone of p must be a face of C."""
    if not p.cone.is_face_of(c):
        raise GeometryError("orbit of the point is not a face of the target cone")
    return TropPoint(c, p.lift)


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class TropPolynomial:
    """min over terms of coeff + <m, n>."""

    terms: tuple  # ((m, coeff), ...)

    @staticmethod
    def of(terms: Iterable[tuple]) -> "TropPolynomial":
        ts = {}
        for m, c in terms:
            m = vec(m)
            if m in ts:
                raise ValueError(f"repeated exponent {fmt_vec(m)}")
            ts[m] = Q(c)
        return TropPolynomial(tuple(sorted(ts.items())))

    @property
    def rank(self) -> int:
        return len(self.terms[0][0])

    def __call__(self, n: Sequence) -> Fraction:
        return min(c + dot(m, n) for m, c in self.terms)

    def attaining(self, n: Sequence) -> tuple:
        vals = [(c + dot(m, n), m) for m, c in self.terms]
        best = min(v for v, _ in vals)
        return tuple(m for v, m in vals if v == best)

    def restrict(self, c: RatCone) -> "TropPolynomial":
        """Terms minimizing <m, x> for x in the relative interior of c."""
        if not c.rays:
            return self
        x = c.relint_sample()
        best = min(dot(m, x) for m, _ in self.terms)
        return TropPolynomial(tuple((m, k) for m, k in self.terms if dot(m, x) == best))

    def to_json(self) -> dict:
        return {"terms": [[fmt_vec(m), fmt(c)] for m, c in self.terms]}


def nef_polynomials(delta_parts: Sequence[Polytope], h: PLFunction) -> list[TropPolynomial]:
    """f_i(n) = min over lattice points m of the i-th part of h(m) + <m, n>."""
    return [TropPolynomial.of((m, h(m)) for m in p.lattice_points()) for p in delta_parts]


# ---------------------------------------------------------------------------
# corner loci


@dataclass(frozen=True, eq=False)
class TropPiece:
    """A closed polyhedral piece living in the orbit of ``cone``."""

    cone: RatCone
    polyhedron: Polyhedron
    attaining: tuple  # one tuple of exponents per hypersurface

    @cached_property
    def relint_point(self) -> Vec:
        return self.polyhedron.relint_point()

    @cached_property
    def dim(self) -> int:
        """Dimension inside the orbit."""
        return self.polyhedron.affine_dimension() - self.cone.dim

    def contains(self, p: TropPoint) -> bool:
        return p.cone == self.cone and self.polyhedron.contains(p.lift)

    def to_json(self) -> dict:
        return {
            "orbit": [fmt_vec(r) for r in self.cone.rays],
            "inequalities": [[fmt_vec(a), fmt(b)] for a, b in self.polyhedron.ineqs],
            "equalities": [[fmt_vec(a), fmt(b)] for a, b in self.polyhedron.eqs],
            "attaining": [[fmt_vec(m) for m in a] for a in self.attaining],
        }


@dataclass
class TropComplex:
    pieces: list

    def __len__(self) -> int:
        return len(self.pieces)

    def contains(self, p: TropPoint) -> bool:
        return any(q.contains(p) for q in self.pieces)

    def in_orbit(self, c: RatCone) -> list[TropPiece]:
        return [q for q in self.pieces if q.cone == c]

    def to_json(self) -> dict:
        return {"pieces": [q.to_json() for q in self.pieces]}


def lower_faces(f: TropPolynomial) -> list[tuple]:
    """Faces (as exponent tuples) of the regular subdivision induced by the coefficients."""
    pts = [m + (c,) for m, c in f.terms]
    n = f.rank
    lifted = hull(pts)
    out = set()
    if lifted.dim < 1:
        return []
    # lower facets: inner normals with positive last coordinate
    lower = []
    for (a, b), inc in zip(lifted.facets, lifted.facet_incidence):
        if a[-1] > 0:
            lower.append(inc)
    if lifted.dim < n + 1:
        # not full dimensional: the whole hull may itself be lower
        for e, rhs in lifted.equations:
            if e[-1] != 0:
                lower.append(frozenset(range(len(lifted.vertices))))
                break
    faces = set(lifted.faces)
    for face in faces:
        if any(face <= L for L in lower):
            vs = lifted.face_vertices(face)
            fp = hull(vs)
            on = tuple(sorted(m for m, c in f.terms if fp.contains(m + (c,))))
            if len(on) >= 2:
                out.add(on)
    return sorted(out, key=lambda t: (len(t), t))


def piece_polyhedron(f: TropPolynomial, attaining: Sequence[Vec], base: Polyhedron | None = None) -> Polyhedron:
    """{n : every term in ``attaining`` achieves the minimum of f}."""
    coeff = dict(f.terms)
    a0 = attaining[0]
    c0 = coeff[a0]
    eqs = [(sub(a, a0), c0 - coeff[a]) for a in attaining[1:]]
    ineqs = [(sub(m, a0), c0 - coeff[m]) for m, _ in f.terms if m not in attaining]
    if base is not None:
        ineqs = list(base.ineqs) + ineqs
        eqs = list(base.eqs) + eqs
    return Polyhedron(f.rank, tuple(ineqs), tuple(eqs))


def corner_locus(f: TropPolynomial, cone: RatCone | None = None) -> TropComplex:
    """Corner locus of f (restricted to the orbit of ``cone`` when given)."""
    if cone is None:
        cone = RatCone((), f.rank)
    g = f.restrict(cone)
    if len(g.terms) < 2:
        if cone.dim == 0:
            raise GeometryError("a single-term polynomial has empty corner locus")
        return TropComplex([])
    pieces = []
    for face in lower_faces(g):
        poly = piece_polyhedron(g, face)
        if poly.is_empty():
            continue
        pieces.append(TropPiece(cone, poly, (face,)))
    return TropComplex(pieces)


# ---------------------------------------------------------------------------
# stable intersection


def _edges(points: Sequence[Vec]) -> list[tuple[Vec, Vec]]:
    p = hull(points)
    if p.dim == 1:
        return [tuple(p.vertices)]
    return [tuple(p.face_vertices(f)) for f in p.faces if p.face_dim(f) == 1]


def _random_vec(rng: random.Random, n: int) -> Vec:
    return tuple(Fraction(rng.randint(-997, 997), rng.randint(1, 97)) for _ in range(n))


def _jet_feasible(attaining: Sequence[Sequence[Vec]], shifts: Sequence[Vec]) -> bool:
    """Is there x with x - v_i in the codimension-one skeleton of the local fan of A_i?"""
    n = len(shifts[0])
    choices = [_edges(a) for a in attaining]
    for combo in itertools.product(*choices):
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for (a, b), pts, v in zip(combo, attaining, shifts):
            # <a - b, x - v> = 0 and <c - a, x - v> >= 0 for all c
            d = sub(a, b)
            a_eq.append(d)
            b_eq.append(dot(d, v))
            for c in pts:
                if c == a or c == b:
                    continue
                e = sub(c, a)
                a_ub.append(tuple(-x for x in e))
                b_ub.append(-dot(e, v))
        if feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=n) is not None:
            return True
    return False


def stable_local(attaining: Sequence[Sequence[Vec]], seed: int = 0, attempts: int = 4) -> bool:
    """Stable-intersection test at a point with the given attaining sets.

    Two independent generic displacements must give the same answer; on a
    disagreement fresh draws are taken, up to ``attempts`` times.
    """
    if any(len(a) < 2 for a in attaining):
        return False
    if len(attaining) == 1:
        return True
    n = len(attaining[0][0])
    rng = random.Random(seed)
    for _ in range(attempts):
        r1 = _jet_feasible(attaining, [_random_vec(rng, n) for _ in attaining])
        r2 = _jet_feasible(attaining, [_random_vec(rng, n) for _ in attaining])
        if r1 == r2:
            return r1
    raise StableIntersectionError("displacement draws keep disagreeing")


def stable_by_dimension(attaining: Sequence[Sequence[Vec]]) -> bool:
    """Independent criterion: dim(sum_{i in I} conv A_i) >= |I| for all nonempty I."""
    r = len(attaining)
    for k in range(1, r + 1):
        for idx in itertools.combinations(range(r), k):
            pts = [tuple(sum(col) for col in zip(*choice)) for choice in itertools.product(*(attaining[i] for i in idx))]
            if affine_rank(pts) < k:
                return False
    return True


def stable_intersection(hs: Sequence[TropComplex], polys: Sequence[TropPolynomial], seed: int = 0) -> TropComplex:
    """Stable intersection of corner loci living in the same orbit."""
    if len(hs) == 1:
        return hs[0]
    pieces = {}
    for combo in itertools.product(*(h.pieces for h in hs)):
        cone = combo[0].cone
        if any(q.cone != cone for q in combo):
            raise GeometryError("pieces from different orbits")
        n = cone.ambient_dim
        ineqs = tuple(x for q in combo for x in q.polyhedron.ineqs)
        eqs = tuple(x for q in combo for x in q.polyhedron.eqs)
        poly = Polyhedron(n, ineqs, eqs)
        if poly.is_empty():
            continue
        p = poly.relint_point()
        att = tuple(g.restrict(cone).attaining(p) for g in polys)
        if att in pieces:
            continue
        if stable_local(att, seed):
            full = Polyhedron(n, tuple(x for g, a in zip(polys, att) for x in piece_polyhedron(g.restrict(cone), a).ineqs),
                              tuple(x for g, a in zip(polys, att) for x in piece_polyhedron(g.restrict(cone), a).eqs))
            pieces[att] = TropPiece(cone, full, att)
    return TropComplex([pieces[k] for k in sorted(pieces)])


# ---------------------------------------------------------------------------
# the complete intersection inside the tropical toric variety


@dataclass(eq=False)
class TropicalCI:
    """X(f_1, ..., f_r): closure of the stable intersection in X_{Sigma'}(T)."""

    polys: list
    fan: Fan
    seed: int = 0

    @property
    def rank(self) -> int:
        return self.fan.rank

    def attaining(self, p: TropPoint) -> tuple:
        return tuple(f.restrict(p.cone).attaining(p.lift) for f in self.polys)

    def contains(self, p: TropPoint) -> bool:
        if p.cone not in set(self.fan.cones):
            raise GeometryError("orbit cone is not in the fan")
        return stable_local(self.attaining(p), self.seed)

    def contains_point(self, x: Sequence) -> bool:
        return self.contains(TropPoint.finite(x))

    def orbit_complex(self, cone: RatCone) -> TropComplex:
        hs = [corner_locus(f, cone) for f in self.polys]
        if any(not h.pieces for h in hs):
            return TropComplex([])
        return stable_intersection(hs, self.polys, self.seed)

    @cached_property
    def complex(self) -> TropComplex:
        """All pieces, in every orbit of the fan."""
        pieces = []
        for c in self.fan.cones:
            pieces.extend(self.orbit_complex(c).pieces)
        return TropComplex(pieces)

    def finite_complex(self) -> TropComplex:
        return self.orbit_complex(RatCone((), self.rank))


def closure_in_toric(polys: Sequence[TropPolynomial], fan: Fan, seed: int = 0) -> TropComplex:
    return TropicalCI(list(polys), fan, seed).complex


def recession_meets(piece: TropPiece, c: RatCone) -> bool:
    """Does the recession cone of the piece meet the relative interior of c?"""
    _, rays, lin = piece.polyhedron.generators
    gens = list(rays) + list(lin) + [tuple(-x for x in l) for l in lin]
    if not c.rays:
        return True
    if not gens:
        return False
    n = c.ambient_dim
    k, m = len(gens), len(c.rays)
    # sum lam_g g = sum mu_r r, lam >= 0, mu >= 1 (relative interior, scaled)
    a_eq = [[g[i] for g in gens] + [-r[i] for r in c.rays] for i in range(n)]
    b_eq = [0] * n
    a_ub = [[-1 if j == t else 0 for j in range(k + m)] for t in range(k)]
    a_ub += [[-1 if j == k + t else 0 for j in range(k + m)] for t in range(m)]
    b_ub = [0] * k + [-1] * m
    return feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=k + m) is not None


# ---------------------------------------------------------------------------
# cone_T thickenings


@dataclass(frozen=True)
class ConeTSum:
    """base + cone_T(S) with base a polyhedron in N_R and S lattice vectors."""

    base: Polyhedron
    gens: tuple

    def contains(self, p: TropPoint) -> bool:
        inf = [g for g in self.gens if p.cone.contains(g)]
        if inf:
            if RatCone.of(inf, self.base.dim) != p.cone:
                return False
        elif p.cone.rays:
            return False
        fin = [g for g in self.gens if g not in inf]
        n = self.base.dim
        # lift = b + sum lam_g g + sum nu_h h (h spans the orbit cone), b in base
        k1, k2 = len(fin), len(inf)
        nv = n + k1 + k2
        a_eq = [
            [-1 if j == i else 0 for j in range(n)] + [g[i] for g in fin] + [h[i] for h in inf]
            for i in range(n)
        ]
        b_eq = [-p.lift[i] for i in range(n)]
        a_ub, b_ub = [], []
        for a, b in self.base.ineqs:
            a_ub.append([-x for x in a] + [0] * (k1 + k2))
            b_ub.append(-Q(b))
        for a, b in self.base.eqs:
            a_eq.append(list(a) + [0] * (k1 + k2))
            b_eq.append(Q(b))
        for t in range(k1):
            a_ub.append([0] * n + [-1 if j == t else 0 for j in range(k1)] + [0] * k2)
            b_ub.append(0)
        return feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=nv) is not None


def coneT_sum(base: Polyhedron, gens: Iterable[Sequence]) -> ConeTSum:
    return ConeTSum(base, tuple(vec(g) for g in gens))


def membership(p: TropPoint, X: TropicalCI) -> bool:
    return X.contains(p)


def verify_B_in_trop(B, X: TropicalCI) -> Report:
    """Every anchor and every cell centroid of B lies in trop(X)."""
    checked = 0
    for c in B.cells:
        for label, x in (("anchor", B.anchors[c.index]), ("centroid", centroid(c.vertices))):
            if not X.contains_point(x):
                return Report("B_in_tropX", False, checked, {"cell": c.index, label: fmt_vec(x)})
            checked += 1
    return Report("B_in_tropX", True, checked)
