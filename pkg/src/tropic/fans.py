"""Rational polyhedral fans and piecewise linear functions on them."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .polyhedra import (
    GeometryError,
    Polyhedron,
    Polytope,
    RatCone,
    cone_contains_cone,
    hull,
    polyhedron_hull,
    polyhedron_sum,
)
from .rational import Q, Vec, add, dot, fmt, fmt_vec, solve, sub, vec


def dual_tag(tag: str) -> str:
    return "M" if tag == "N" else "N"


@dataclass(frozen=True, eq=False)
class Fan:
    """A fan stored through its maximal cones; all faces are derived."""

    maximal: tuple
    rank: int
    lattice: str = "N"

    @staticmethod
    def from_cones(cones: Iterable[RatCone], rank: int, lattice: str = "N") -> "Fan":
        cones = list(dict.fromkeys(cones))
        keep = []
        for c in cones:
            if not any(c != d and c.is_face_of(d) for d in cones):
                keep.append(c)
        keep.sort(key=lambda c: (-c.dim, c.rays))
        return Fan(tuple(keep), rank, lattice)

    @staticmethod
    def from_rays(rays: Sequence[Sequence], cones: Sequence[Sequence[int]], rank: int | None = None, lattice: str = "N") -> "Fan":
        rays = [vec(r) for r in rays]
        if rank is None:
            rank = len(rays[0])
        return Fan.from_cones([RatCone.of([rays[i] for i in c], rank) for c in cones], rank, lattice)

    def __eq__(self, other) -> bool:
        return isinstance(other, Fan) and set(self.cones) == set(other.cones)

    def __hash__(self) -> int:
        return hash(frozenset(self.maximal))

    @cached_property
    def cones(self) -> tuple:
        out = set()
        for c in self.maximal:
            out.update(c.faces())
        if not out:
            out.add(RatCone((), self.rank))
        return tuple(sorted(out, key=lambda c: (c.dim, c.rays)))

    @cached_property
    def rays(self) -> tuple:
        return tuple(sorted({r for c in self.maximal for r in c.rays}))

    def cones_of_dim(self, k: int) -> list[RatCone]:
        return [c for c in self.cones if c.dim == k]

    def cone_of(self, x: Sequence) -> RatCone:
        """The unique cone containing x in its relative interior."""
        x = vec(x)
        for c in self.cones:
            if c.in_relint(x):
                return c
        raise GeometryError(f"{fmt_vec(x)} is outside the support of the fan")

    def maximal_containing(self, x: Sequence) -> RatCone:
        x = vec(x)
        for c in self.maximal:
            if c.contains(x):
                return c
        raise GeometryError(f"{fmt_vec(x)} is outside the support of the fan")

    def is_complete(self) -> bool:
        if any(c.dim != self.rank for c in self.maximal):
            return False
        walls: dict[RatCone, int] = {}
        for c in self.maximal:
            for f in c.faces():
                if f.dim == self.rank - 1:
                    walls[f] = walls.get(f, 0) + 1
        return all(v == 2 for v in walls.values())

    def check(self) -> None:
        """Pairwise intersections of maximal cones must be common faces."""
        for i, a in enumerate(self.maximal):
            fa = set(a.faces())
            for b in self.maximal[i + 1:]:
                common = fa & set(b.faces())
                top = max(common, key=lambda c: c.dim)
                if not _intersection_is(a, b, top):
                    raise GeometryError(
                        f"cones {[fmt_vec(r) for r in a.rays]} and {[fmt_vec(r) for r in b.rays]} meet badly"
                    )

    def walls(self) -> list[tuple[RatCone, RatCone, RatCone]]:
        """(wall, cone1, cone2) for codimension-one faces shared by two maximal cones."""
        owners: dict[RatCone, list[RatCone]] = {}
        for c in self.maximal:
            for f in c.faces():
                if f.dim == c.dim - 1:
                    owners.setdefault(f, []).append(c)
        return [(w, cs[0], cs[1]) for w, cs in sorted(owners.items(), key=lambda t: t[0].rays) if len(cs) == 2]

    def to_json(self) -> dict:
        rays = list(self.rays)
        return {
            "rank": self.rank,
            "lattice": self.lattice,
            "rays": [fmt_vec(r) for r in rays],
            "cones": [sorted(rays.index(r) for r in c.rays) for c in self.maximal],
        }

    @staticmethod
    def from_json(obj: dict) -> "Fan":
        return Fan.from_rays(obj["rays"], obj["cones"], obj["rank"], obj.get("lattice", "N"))


def _intersection_is(a: RatCone, b: RatCone, face: RatCone) -> bool:
    """Check a cap b == face exactly, via the H-descriptions."""
    n = a.ambient_dim
    ineqs = list(a.inequalities) + list(b.inequalities)
    eqs = list(a.equations) + list(b.equations)
    poly = Polyhedron(n, tuple((g, 0) for g in ineqs), tuple((g, 0) for g in eqs))
    _, rays, lin = poly.generators
    if lin:
        return False
    return RatCone.of(rays, n) == face if rays else face.dim == 0


# ---------------------------------------------------------------------------


def normal_fan(p: Polytope) -> Fan:
    """Inner normal fan: one maximal cone per vertex."""
    if p.dim != p.ambient_dim:
        raise GeometryError("normal fan needs a full-dimensional polytope")
    cones = []
    for v in p.vertices:
        normals = [a for a, b in p.facets if dot(a, v) == b]
        cones.append(RatCone.of(normals, p.ambient_dim))
    return Fan.from_cones(cones, p.ambient_dim, dual_tag(p.lattice))


def normal_fan_of_polyhedron(p: Polyhedron, lattice: str = "N") -> Fan:
    """Normal fan of a full-dimensional (possibly unbounded) polyhedron."""
    pts, _, lin = p.generators
    if lin:
        raise GeometryError("polyhedron has lineality")
    cones = []
    for v in pts:
        normals = [a for a, b in p.ineqs if dot(a, v) == Q(b)]
        cones.append(RatCone.of(normals, p.dim))
    return Fan.from_cones(cones, p.dim, lattice)


def fan_polytope(f: Fan) -> Polytope:
    return hull(f.rays, lattice=f.lattice)


def is_unimodular(f: Fan) -> bool:
    return all(c.is_unimodular() for c in f.maximal)


def is_refinement(fine: Fan, coarse: Fan) -> bool:
    """Every cone of ``fine`` lies in a cone of ``coarse`` and the supports agree."""
    for c in fine.maximal:
        if not any(cone_contains_cone(d, c) for d in coarse.maximal):
            return False
    for d in coarse.maximal:
        inside = [c for c in fine.maximal if c.dim == d.dim and cone_contains_cone(d, c)]
        if not inside:
            return False
        # interior walls of the pieces inside d must be shared by two pieces
        count: dict[RatCone, int] = {}
        for c in inside:
            for w in c.faces():
                if w.dim == d.dim - 1:
                    count[w] = count.get(w, 0) + 1
        for w, k in count.items():
            on_boundary = any(
                all(dot(a, r) == 0 for r in w.rays) for a in d.inequalities
            )
            if not on_boundary and k != 2:
                return False
            if on_boundary and k != 1:
                return False
    return True


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PLFunction:
    """Piecewise linear function: one dual functional per maximal cone."""

    fan: Fan
    functionals: tuple

    def __call__(self, x: Sequence) -> Fraction:
        x = vec(x)
        for c, l in zip(self.fan.maximal, self.functionals):
            if c.contains(x):
                return dot(l, x)
        raise GeometryError(f"{fmt_vec(x)} is outside the support")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PLFunction):
            return False
        return self.fan == other.fan and all(self(r) == other(r) for r in self.fan.rays)

    def __hash__(self) -> int:
        return hash(self.fan)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        if self.fan != other.fan:
            raise GeometryError("sum of PL functions on different fans")
        idx = {c: l for c, l in zip(other.fan.maximal, other.functionals)}
        return PLFunction(self.fan, tuple(add(l, idx[c]) for c, l in zip(self.fan.maximal, self.functionals)))

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        if self.fan != other.fan:
            raise GeometryError("difference of PL functions on different fans")
        idx = {c: l for c, l in zip(other.fan.maximal, other.functionals)}
        return PLFunction(self.fan, tuple(sub(l, idx[c]) for c, l in zip(self.fan.maximal, self.functionals)))

    @staticmethod
    def from_ray_values(fan: Fan, values: dict | Sequence) -> "PLFunction":
        if not isinstance(values, dict):
            values = dict(zip(fan.rays, values))
        values = {vec(k): Q(v) for k, v in values.items()}
        out = []
        for c in fan.maximal:
            rays = list(c.rays)
            if c.dim != fan.rank:
                raise GeometryError("PL functions need full-dimensional maximal cones")
            l = solve(rays, [values[r] for r in rays])
            if l is None:
                raise GeometryError(f"ray values are not linear on cone {[fmt_vec(r) for r in rays]}")
            out.append(l)
        return PLFunction(fan, tuple(out))

    @staticmethod
    def zero(fan: Fan) -> "PLFunction":
        return PLFunction(fan, tuple(tuple(Fraction(0) for _ in range(fan.rank)) for _ in fan.maximal))

    def ray_values(self) -> dict:
        return {r: self(r) for r in self.fan.rays}

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for l in self.functionals for x in l)

    def is_convex(self) -> bool:
        for c, l in zip(self.fan.maximal, self.functionals):
            for r in c.rays:
                v = dot(l, r)
                if any(dot(k, r) > v for k in self.functionals):
                    return False
        return True

    def is_strictly_convex(self) -> bool:
        if not self.is_convex():
            return False
        idx = dict(zip(self.fan.maximal, self.functionals))
        return all(idx[a] != idx[b] for _, a, b in self.fan.walls())

    def restrict_to(self, fine: Fan) -> "PLFunction":
        """The same function on a refinement."""
        out = []
        for c in fine.maximal:
            k = next(i for i, d in enumerate(self.fan.maximal) if cone_contains_cone(d, c))
            out.append(self.functionals[k])
        return PLFunction(fine, tuple(out))

    def to_json(self) -> dict:
        return {
            "fan": self.fan.to_json(),
            "ray_values": [fmt(self(r)) for r in self.fan.rays],
        }

    @staticmethod
    def from_json(obj: dict) -> "PLFunction":
        fan = Fan.from_json(obj["fan"])
        return PLFunction.from_ray_values(fan, [Q(x) for x in obj["ray_values"]])


def support_function(p: Polytope, fan: Fan | None = None) -> PLFunction:
    """h(n) = -min_{m in P} <m, n>, stored on ``fan`` (default: normal fan)."""
    if fan is None:
        if p.dim != p.ambient_dim:
            # lower-dimensional polytopes still have a support function; use the
            # normal fan of a full-dimensional thickening is not canonical, so refuse
            raise GeometryError("pass a fan for lower-dimensional polytopes")
        fan = normal_fan(p)
    out = []
    for c in fan.maximal:
        x = c.relint_sample()
        best = min(dot(v, x) for v in p.vertices)
        argmin = [v for v in p.vertices if dot(v, x) == best]
        v = argmin[0]
        if not all(dot(v, r) == min(dot(w, r) for w in p.vertices) for r in c.rays):
            raise GeometryError("fan does not refine the normal fan of the polytope")
        out.append(tuple(-a for a in v))
    return PLFunction(fan, tuple(out))


def newton_polytope(h: PLFunction) -> Polytope:
    """{n : <m, n> >= -h(m) for all m}; h must be convex."""
    if not h.is_convex():
        raise GeometryError("Newton polytope of a non-convex function")
    return hull([tuple(-a for a in l) for l in h.functionals], lattice=dual_tag(h.fan.lattice))


# ---------------------------------------------------------------------------
# the fan over the Cayley-type polyhedron


def _face_pairs(dstar: Polytope, nab: Polytope) -> list[tuple[frozenset, frozenset]]:
    """Pairs (F1, F2) with F1 + F2 a proper face of dstar + nab (vertex indices)."""
    total = hull([add(a, b) for a in dstar.vertices for b in nab.vertices], lattice=dstar.lattice)
    pairs = set()
    full = frozenset(range(len(total.vertices)))
    for face in total.faces:
        if face == full:
            continue
        u = None
        for (a, b), inc in zip(total.facets, total.facet_incidence):
            if face <= inc:
                u = a if u is None else add(u, a)
        f1 = _argmin_face(dstar, u)
        f2 = _argmin_face(nab, u)
        pairs.add((f1, f2))
    return sorted(pairs, key=lambda t: (sorted(t[0]), sorted(t[1])))


def _argmin_face(p: Polytope, u: Sequence) -> frozenset:
    best = min(dot(u, v) for v in p.vertices)
    return frozenset(i for i, v in enumerate(p.vertices) if dot(u, v) == best)


def lift(v: Sequence, s) -> Vec:
    return tuple(vec(v)) + (Q(s),)


def sigma_tilde_families(dstar: Polytope, nab: Polytope) -> dict[int, list[RatCone]]:
    """The three cone families of the fan in N + R, keyed 1, 2, 3."""
    if dstar.dim != dstar.ambient_dim or not dstar.in_relint(tuple(Fraction(0) for _ in range(dstar.ambient_dim))):
        raise GeometryError("the first polytope must be full dimensional with 0 in its interior")
    if nab.ambient_dim != dstar.ambient_dim:
        raise GeometryError("polytopes of different rank")
    n = dstar.ambient_dim + 1
    fam1, fam2, fam3 = set(), set(), set()
    full = frozenset(range(len(dstar.vertices)))
    for f in dstar.faces:
        if f != full:
            fam1.add(RatCone.of([lift(v, 0) for v in dstar.face_vertices(f)], n))
    for f in nab.faces:
        fam3.add(RatCone.of([lift(v, 1) for v in nab.face_vertices(f)], n))
    for f1, f2 in _face_pairs(dstar, nab):
        gens = [lift(v, 0) for v in dstar.face_vertices(f1)] + [lift(v, 1) for v in nab.face_vertices(f2)]
        fam2.add(RatCone.of(gens, n))
    key = lambda c: (c.dim, c.rays)
    return {1: sorted(fam1, key=key), 2: sorted(fam2, key=key), 3: sorted(fam3, key=key)}


def build_sigma_tilde(dstar: Polytope, nab: Polytope) -> Fan:
    fams = sigma_tilde_families(dstar, nab)
    cones = fams[1] + fams[2] + fams[3]
    return Fan.from_cones(cones, dstar.ambient_dim + 1, "N")


def cayley_polyhedron(parts: Sequence[Polytope], hprime: PLFunction) -> Polyhedron:
    """Sum over i of {(m, l) : m in part_i, l >= h'(m)}."""
    out = None
    for p in parts:
        ineqs = [(lift(a, 0), b) for a, b in p.facets]
        for l in hprime.functionals:
            ineqs.append((tuple(-x for x in l) + (Fraction(1),), Fraction(0)))
        eqs = [(lift(a, 0), b) for a, b in p.equations]
        piece = Polyhedron(p.ambient_dim + 1, tuple(ineqs), tuple(eqs))
        pts, rays, _ = piece.generators
        piece = polyhedron_hull(pts, rays)
        out = piece if out is None else polyhedron_sum(out, piece)
    return out


# ---------------------------------------------------------------------------
# conditions on subdivisions


@dataclass
class ConditionReport:
    clauses: dict

    @property
    def ok(self) -> bool:
        return all(v["pass"] for v in self.clauses.values())

    def to_json(self) -> dict:
        return {"pass": self.ok, "clauses": self.clauses}


def horizontal_part(c: RatCone) -> RatCone:
    n = c.ambient_dim
    return RatCone.of([r[:-1] for r in c.rays if r[-1] == 0], n - 1)


def check_conditions(st_prime: Fan, st: Fan, sigma_prime: Fan, nabla_hp: Polytope) -> ConditionReport:
    if not is_refinement(st_prime, st):
        raise GeometryError("the subdivision does not refine the fan it should subdivide")
    clauses = {}
    horiz = {horizontal_part(c) for c in st_prime.cones}
    target = set(sigma_prime.cones)
    bad = sorted(horiz ^ target, key=lambda c: (c.dim, c.rays))
    clauses["restriction"] = {
        "pass": not bad,
        "witness": [fmt_vec(r) for r in bad[0].rays] if bad else None,
    }
    witness = None
    for r in st_prime.rays:
        if r[-1] == 0:
            continue
        if r[-1] != 1 or not nabla_hp.contains(r[:-1]):
            witness = fmt_vec(r)
            break
    clauses["vertical_rays"] = {"pass": witness is None, "witness": witness}
    witness = None
    for c in st_prime.maximal:
        if not c.is_unimodular():
            witness = [fmt_vec(r) for r in c.rays]
            break
    clauses["unimodular"] = {"pass": witness is None, "witness": witness}
    return ConditionReport(clauses)
