"""Shuffles, grid walks and staircase triangulations of products of simplices."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial, prod
from typing import Sequence

from .lattice import simplex_lattice_volume
from .lp import strictly_feasible
from .polyhedra import GeometryError
from .rational import Vec, affine_rank, det, fmt_vec, primitive, sub, vec, vsum


def multinomial(degree: Sequence[int]) -> int:
    return factorial(sum(degree)) // prod(factorial(p) for p in degree)


@dataclass(frozen=True)
class Shuffle:
    """A partition of {1, ..., pbar} into blocks S_0, ..., S_r of sizes p_i."""

    blocks: tuple  # tuple of sorted tuples

    def __post_init__(self):
        flat = sorted(x for b in self.blocks for x in b)
        if flat != list(range(1, len(flat) + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{len(flat)}")

    @property
    def degree(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    @property
    def r(self) -> int:
        return len(self.blocks) - 1

    @property
    def pbar(self) -> int:
        return sum(self.degree)

    @cached_property
    def moves(self) -> tuple:
        """i(l) for l = 1..pbar+1; the final move is the appended +e_0."""
        who = {x: i for i, b in enumerate(self.blocks) for x in b}
        return tuple(who[l] for l in range(1, self.pbar + 1)) + (0,)

    def i(self, l: int) -> int:
        if not 1 <= l <= self.pbar + 1:
            raise IndexError(f"move {l} out of range 1..{self.pbar + 1}")
        return self.moves[l - 1]

    @cached_property
    def walk(self) -> tuple:
        """Grid points (j_0(l), ..., j_r(l)) for l = 0..pbar+1."""
        pt = [0] * len(self.blocks)
        out = [tuple(pt)]
        for mv in self.moves:
            pt[mv] += 1
            out.append(tuple(pt))
        return tuple(out)

    def j(self, i: int, l: int) -> int:
        return self.walk[l][i]

    @staticmethod
    def from_walk(walk: Sequence[Sequence[int]], final_move: bool = True) -> "Shuffle":
        """Inverse of ``walk``; with ``final_move`` the last step must be the appended +e_0."""
        walk = [tuple(p) for p in walk]
        if final_move:
            if len(walk) < 2 or [b - a for a, b in zip(walk[-2], walk[-1])] != [1] + [0] * (len(walk[0]) - 1):
                raise ValueError("the walk does not end with the final move +e_0")
            walk = walk[:-1]
        r1 = len(walk[0])
        if any(walk[0]):
            raise ValueError("walks start at the origin")
        blocks = [[] for _ in range(r1)]
        for l in range(1, len(walk)):
            diff = [b - a for a, b in zip(walk[l - 1], walk[l])]
            if sorted(diff) != [0] * (r1 - 1) + [1]:
                raise ValueError(f"step {l} is not a unit move")
            blocks[diff.index(1)].append(l)
        return Shuffle(tuple(tuple(b) for b in blocks))

    def to_json(self) -> dict:
        return {"degree": list(self.degree), "blocks": [list(b) for b in self.blocks]}

    @staticmethod
    def from_json(obj: dict) -> "Shuffle":
        s = Shuffle(tuple(tuple(b) for b in obj["blocks"]))
        if list(s.degree) != list(obj.get("degree", s.degree)):
            raise ValueError("degree does not match the blocks")
        return s


def enumerate_shuffles(degree: Sequence[int]) -> list[Shuffle]:
    degree = tuple(degree)
    if any(p < 0 for p in degree):
        raise ValueError(f"negative degree {degree}")
    if not degree:
        raise ValueError("empty degree")
    pbar = sum(degree)
    out = []

    def rec(i: int, avail: tuple, acc: list) -> None:
        if i == len(degree) - 1:
            out.append(Shuffle(tuple(acc) + (avail,)))
            return
        for blk in itertools.combinations(avail, degree[i]):
            rest = tuple(x for x in avail if x not in blk)
            rec(i + 1, rest, acc + [blk])

    rec(0, tuple(range(1, pbar + 1)), [])
    return out


# ---------------------------------------------------------------------------
# products of simplices
#
# The standard simplex |Lambda(P_i)| with vertices x_{i,0} < ... < x_{i,p_i} is
# realized unimodularly as conv(0, e_1, ..., e_{p_i}); a product is realized in
# the concatenated coordinates.


def simplex_vertex(p: int, k: int) -> Vec:
    return tuple(Fraction(1 if j == k - 1 else 0) for j in range(p))


def product_point(degree: Sequence[int], grid: Sequence[int]) -> Vec:
    return tuple(x for p, k in zip(degree, grid) for x in simplex_vertex(p, k))


@dataclass(frozen=True)
class EtaMap:
    """eta_S: the affine map from Delta^pbar sending e_j to the grid point after j moves."""

    shuffle: Shuffle

    @cached_property
    def images(self) -> tuple:
        s = self.shuffle
        return tuple(s.walk[j] for j in range(s.pbar + 1))

    def vertex_image(self, j: int, i: int) -> int:
        """k with y_{i,k} <= j < y_{i,k+1}."""
        ys = (0,) + self.shuffle.blocks[i] + (self.shuffle.pbar + 1,)
        return next(k for k in range(len(ys) - 1) if ys[k] <= j < ys[k + 1])

    def __call__(self, t: Sequence) -> Vec:
        t = vec(t)
        deg = self.shuffle.degree
        return vsum([tuple(c * x for x in product_point(deg, g)) for c, g in zip(t, self.images)], sum(deg))

    @property
    def simplex(self) -> list[Vec]:
        return [product_point(self.shuffle.degree, g) for g in self.images]


def eta_map(s: Shuffle) -> EtaMap:
    return EtaMap(s)


@dataclass
class SimplicialComplex:
    vertices: list  # coordinates
    simplices: list  # tuples of vertex indices, maximal simplices

    @classmethod
    def from_point_simplices(cls, simplices: Sequence[Sequence[Vec]]) -> "SimplicialComplex":
        index: dict[Vec, int] = {}
        out = []
        for s in simplices:
            out.append(tuple(sorted(index.setdefault(vec(p), len(index)) for p in s)))
        verts = sorted(index, key=index.get)
        return cls(verts, out)

    def points(self, s: Sequence[int]) -> list[Vec]:
        return [self.vertices[k] for k in s]

    @property
    def dim(self) -> int:
        return max(len(s) for s in self.simplices) - 1

    def faces(self, k: int) -> set:
        out = set()
        for s in self.simplices:
            out.update(itertools.combinations(s, k + 1))
        return out

    def to_json(self) -> dict:
        return {"vertices": [fmt_vec(v) for v in self.vertices], "simplices": [list(s) for s in self.simplices]}

    @classmethod
    def from_json(cls, obj: dict) -> "SimplicialComplex":
        return cls([vec(v) for v in obj["vertices"]], [tuple(s) for s in obj["simplices"]])

    @cached_property
    def f_vector(self) -> tuple:
        return tuple(len(self.faces(k)) for k in range(self.dim + 1))


def product_triangulation(degree: Sequence[int]) -> SimplicialComplex:
    return SimplicialComplex.from_point_simplices([eta_map(s).simplex for s in enumerate_shuffles(degree)])


def open_simplices_meet(p: Sequence[Vec], q: Sequence[Vec]) -> bool:
    """Exact LP: do the relative interiors of conv(p) and conv(q) intersect?"""
    k, l = len(p), len(q)
    n = len(p[0])
    nv = k + l
    eq = [([x[i] for x in p] + [-x[i] for x in q], 0) for i in range(n)]
    eq.append(([1] * k + [0] * l, 1))
    eq.append(([0] * k + [1] * l, 1))
    strict = [([-1 if j == t else 0 for j in range(nv)], 0) for t in range(nv)]
    return strictly_feasible(strict, [], eq, nvars=nv) is not None


def _facet_normals(pts: Sequence[Vec]) -> list[tuple]:
    """(a, c) per facet with a.x <= c on the far side; integral when the points are."""
    out = []
    for drop in range(len(pts)):
        a, base = _facet_side([x for j, x in enumerate(pts) if j != drop], pts[drop])
        a = primitive(a)
        out.append((a, -sum(x * y for x, y in zip(a, base))))
    return out


def _facet_separated(p: Sequence[Vec], q: Sequence[Vec], np_=None, nq=None) -> bool:
    """A facet hyperplane of one full-dimensional simplex weakly separates the other."""
    np_ = _facet_normals(p) if np_ is None else np_
    nq = _facet_normals(q) if nq is None else nq
    for normals, other in ((np_, q), (nq, p)):
        for a, c in normals:
            if all(sum(x * y for x, y in zip(a, pt)) <= -c for pt in other):
                return True
    return False


def _normalized_volume(pts: Sequence[Vec]) -> Fraction:
    base = pts[0]
    return abs(det([sub(p, base) for p in pts[1:]])) if len(pts) > 1 else Fraction(1)


def _facet_side(facet_pts: Sequence[Vec], apex: Vec) -> tuple:
    """Normal of the hyperplane through the facet, signed to be positive on the apex."""
    from .rational import nullspace

    base = facet_pts[0]
    rows = [sub(p, base) for p in facet_pts[1:]]
    nrm = nullspace(rows, len(base))
    if len(nrm) != 1:
        raise GeometryError("degenerate facet")
    a = nrm[0]
    val = sum(x * (y - z) for x, y, z in zip(a, apex, base))
    if val == 0:
        raise GeometryError("apex lies on the facet hyperplane")
    if val < 0:
        a = tuple(-x for x in a)
    return a, base


def verify_pa_iso(degree: Sequence[int], lp_limit: int = 120) -> dict:
    """Check that the eta_S images triangulate the product of simplices.

    Each simplex is full-dimensional (rank), unimodular, and the volumes add up to
    the multinomial coefficient.  Interior facets are shared by exactly two
    simplices lying on opposite sides and every other facet lies on the
    boundary, so the covering degree is constant; with the volume sum this
    forces a triangulation.  For up to ``lp_limit`` simplices the disjointness
    of interiors is also checked pairwise by exact LP.
    """
    degree = tuple(degree)
    n = sum(degree)
    shuffles = enumerate_shuffles(degree)
    simplices = [eta_map(s).simplex for s in shuffles]
    report = {"degree": list(degree), "simplices": len(simplices), "pass": False}
    total = Fraction(0)
    for s, pts in zip(shuffles, simplices):
        if affine_rank(pts) != n:
            report["witness"] = {"rank_deficient": s.to_json()}
            return report
        total += _normalized_volume(pts)
    report["volume"] = int(total)
    if total != multinomial(degree):
        report["witness"] = {"volume_sum": str(total)}
        return report
    # facet pairing
    facets: dict[frozenset, list] = {}
    for k, pts in enumerate(simplices):
        for drop in range(len(pts)):
            f = frozenset(p for j, p in enumerate(pts) if j != drop)
            facets.setdefault(f, []).append((k, pts[drop]))
    for f, owners in facets.items():
        fp = sorted(f)
        if len(owners) > 2:
            report["witness"] = {"facet_overused": [fmt_vec(p) for p in fp]}
            return report
        on_boundary = _on_product_boundary(degree, fp)
        if len(owners) == 1 and not on_boundary:
            report["witness"] = {"dangling_facet": [fmt_vec(p) for p in fp]}
            return report
        if len(owners) == 2:
            if on_boundary:
                report["witness"] = {"boundary_facet_shared": [fmt_vec(p) for p in fp]}
                return report
            a, base = _facet_side(fp, owners[0][1])
            v2 = sum(x * (y - z) for x, y, z in zip(a, owners[1][1], base))
            if v2 >= 0:
                report["witness"] = {"same_side": [fmt_vec(p) for p in fp]}
                return report
    if len(simplices) <= lp_limit:
        normals = [_facet_normals(pts) for pts in simplices]
        ints = [[tuple(int(x) for x in pt) for pt in pts] for pts in simplices]
        for a, b in itertools.combinations(range(len(simplices)), 2):
            if _facet_separated(ints[a], ints[b], normals[a], normals[b]):
                continue
            if open_simplices_meet(simplices[a], simplices[b]):
                report["witness"] = {"overlap": [shuffles[a].to_json(), shuffles[b].to_json()]}
                return report
        report["pairwise_lp"] = True
    report["pass"] = True
    return report


def _on_product_boundary(degree: Sequence[int], pts: Sequence[Vec]) -> bool:
    """Do all points lie on one facet of the product of simplices?"""
    off = 0
    for p in degree:
        block = [pt[off: off + p] for pt in pts]
        if p > 0:
            for j in range(p):
                if all(b[j] == 0 for b in block):
                    return True
            if all(sum(b) == 1 for b in block):
                return True
        off += p
    return False


# ---------------------------------------------------------------------------
# the triangulation of B


def cell_factors(B, cell, orders: Sequence[Sequence[Vec]]) -> list[list[Vec]]:
    """Vertex lists of nu, beta*_1(mu), ..., each sorted by the given order."""
    factors = [cell.nu] + list(cell.betas)
    out = []
    for f, order in zip(factors, orders):
        rank_of = {vec(p): k for k, p in enumerate(order)}
        verts = list(f.vertices)
        missing = [v for v in verts if v not in rank_of]
        if missing:
            raise GeometryError(f"{fmt_vec(missing[0])} is not covered by the order")
        if affine_rank(verts) != len(verts) - 1:
            raise GeometryError(f"cell {cell.index} factor is not a simplex")
        out.append(sorted(verts, key=rank_of.get))
    return out


def cell_triangulation(B, cell, orders) -> list[tuple]:
    factors = cell_factors(B, cell, orders)
    degree = tuple(len(f) - 1 for f in factors)
    out = []
    for s in enumerate_shuffles(degree):
        pts = []
        for l in range(s.pbar + 1):
            pts.append(vsum([f[s.j(i, l)] for i, f in enumerate(factors)], B.rank))
        out.append(tuple(pts))
    return out


@dataclass
class BTriangulation:
    complex: SimplicialComplex
    per_cell: dict  # cell index -> list of point simplices
    expected: int

    def to_json(self) -> dict:
        return {"top_simplices": len(self.complex.simplices), "expected": self.expected, **self.complex.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "BTriangulation":
        # per-cell lists are not exported; the complex carries all simplices
        cx = SimplicialComplex.from_json(obj)
        if obj["top_simplices"] != len(cx.simplices):
            raise ValueError("top_simplices does not match the simplex list")
        return BTriangulation(cx, {}, obj["expected"])


def triangulate_B(B, orders: Sequence[Sequence[Vec]]) -> BTriangulation:
    per_cell = {}
    expected = 0
    for c in B.maximal_cells:
        per_cell[c.index] = cell_triangulation(B, c, orders)
        expected += multinomial([len(f) - 1 for f in cell_factors(B, c, orders)])
    allsimp = [s for c in B.maximal_cells for s in per_cell[c.index]]
    return BTriangulation(SimplicialComplex.from_point_simplices(allsimp), per_cell, expected)


def verify_triangulation(B, tri: BTriangulation) -> dict:
    """Counts, unimodularity and agreement on shared faces of maximal cells."""
    rep = {"top_simplices": len(tri.complex.simplices), "expected": tri.expected, "pass": False}
    if rep["top_simplices"] != tri.expected:
        return rep
    for s in tri.complex.simplices:
        pts = tri.complex.points(s)
        if affine_rank(pts) != len(pts) - 1 or simplex_lattice_volume(pts) != 1:
            rep["witness"] = {"not_unimodular": [fmt_vec(p) for p in pts]}
            return rep
    cells = B.maximal_cells
    for a, b in itertools.combinations(cells, 2):
        common = [c for c in B.faces_of[a.index] if c in B.faces_of[b.index]]
        if not common:
            continue
        face = max((B.cells[c] for c in common), key=lambda c: c.dim)
        fa = _restrict(tri.per_cell[a.index], face)
        fb = _restrict(tri.per_cell[b.index], face)
        if fa != fb:
            rep["witness"] = {"incompatible": [a.index, b.index, face.index]}
            return rep
    # cell-internal pairwise disjointness by exact LP
    for c in cells:
        simp = tri.per_cell[c.index]
        for s1, s2 in itertools.combinations(simp, 2):
            if open_simplices_meet(list(s1), list(s2)):
                rep["witness"] = {"overlap": [[fmt_vec(p) for p in s1], [fmt_vec(p) for p in s2]]}
                return rep
    rep["pass"] = True
    return rep


def _restrict(simplices, face) -> set:
    """dim(face)-dimensional faces of the simplices lying in ``face``."""
    k = face.dim + 1
    out = set()
    for s in simplices:
        inside = [p for p in s if face.polytope.contains(p)]
        for sub_ in itertools.combinations(sorted(inside), k):
            if affine_rank(list(sub_)) == k - 1:
                out.add(sub_)
    return out
