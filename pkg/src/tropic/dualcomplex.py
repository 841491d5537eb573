"""The dual intersection complex B, its barycentric subdivision and charts."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .fans import Fan, PLFunction, newton_polytope
from .lattice import lattice_coordinates, quotient_projection, saturation_basis
from .nef import NefPartition
from .polyhedra import GeometryError, Polyhedron, Polytope, RatCone, hull, minkowski_sum_all
from .rational import (
    Vec,
    add,
    affine_rank,
    centroid,
    fmt_vec,
    matvec,
    sub,
    vec,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Cell:
    """A cell beta_bar(mu) + nu together with its witness data."""

    index: int
    polytope: Polytope
    mu: Polytope
    nu: Polytope
    betas: tuple  # beta*_i(mu) for i = 1..r
    cone: RatCone  # the relevant cone in the subdivided fan

    @property
    def dim(self) -> int:
        return self.polytope.dim

    @property
    def vertices(self) -> tuple:
        return self.polytope.vertices

    @cached_property
    def c_tau(self) -> RatCone:
        """cone(mu) in the fan on N."""
        return RatCone.of(self.mu.vertices, self.polytope.ambient_dim)

    @property
    def generators(self) -> tuple:
        """Vertices of mu, i.e. the union of the beta*_i(mu) vertices."""
        return self.mu.vertices


@dataclass(frozen=True)
class AffineChart:
    """x -> lattice coordinates of x - base in a basis of the tangent lattice."""

    base: Vec
    basis: tuple

    def __call__(self, x: Sequence) -> Vec:
        c = lattice_coordinates(self.basis, sub(vec(x), self.base))
        if c is None:
            raise GeometryError(f"{fmt_vec(x)} is off the affine span of the chart")
        return c


@dataclass(eq=False)
class DualComplex:
    nef: NefPartition
    sigma_prime: Fan
    st_prime: Fan
    h_check: PLFunction
    nabla_h: Polytope
    nabla_hp: Polytope
    cells: list
    anchors: list
    warnings: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.nef.rank

    @cached_property
    def d(self) -> int:
        return max(c.dim for c in self.cells)

    def cells_of_dim(self, k: int) -> list[Cell]:
        return [c for c in self.cells if c.dim == k]

    @cached_property
    def vertices(self) -> list[Cell]:
        return self.cells_of_dim(0)

    @cached_property
    def maximal_cells(self) -> list[Cell]:
        return self.cells_of_dim(self.d)

    @cached_property
    def f_vector(self) -> tuple:
        return tuple(len(self.cells_of_dim(k)) for k in range(self.d + 1))

    def vertex_point(self, c: Cell) -> Vec:
        return c.vertices[0]

    # -- face poset -----------------------------------------------------------

    @cached_property
    def faces_of(self) -> dict[int, list[int]]:
        """cell index -> indices of its faces (itself included)."""
        out = {}
        for c in self.cells:
            vs = set(c.vertices)
            out[c.index] = [
                e.index for e in self.cells if set(e.vertices) <= vs and c.polytope.is_face(e.vertices)
            ]
        return out

    def is_face(self, a: int, b: int) -> bool:
        return a in self.faces_of[b]

    @cached_property
    def cofaces_of(self) -> dict[int, list[int]]:
        out = {c.index: [] for c in self.cells}
        for b, fs in self.faces_of.items():
            for a in fs:
                out[a].append(b)
        return out

    @cached_property
    def chains(self) -> list[tuple]:
        """All strictly increasing chains tau_0 < ... < tau_l (cell indices)."""
        out = []

        def grow(ch):
            out.append(tuple(ch))
            for b in self.cofaces_of[ch[-1]]:
                if b != ch[-1]:
                    grow(ch + [b])

        for c in self.cells:
            grow([c.index])
        out.sort(key=lambda ch: (len(ch), ch))
        return out

    def chain_points(self, ch: Sequence[int]) -> list[Vec]:
        return [self.anchors[i] for i in ch]

    @cached_property
    def gamma(self) -> list[tuple]:
        """Chains spanning the discriminant locus."""
        return [
            ch
            for ch in self.chains
            if self.cells[ch[0]].dim >= 1 and self.cells[ch[-1]].dim <= self.d - 1
        ]

    def in_gamma(self, x: Sequence) -> bool:
        x = vec(x)
        ch = self.locate(x)
        return ch in set(self.gamma)

    def chains_from(self, i: int) -> list[tuple]:
        return [ch for ch in self.chains if ch[0] == i]

    def open_star_chains(self, i: int) -> list[tuple]:
        """Chains whose open simplices make up the open star of a_tau."""
        return [ch for ch in self.chains if i in ch]

    def barycentric(self, ch: Sequence[int], x: Sequence) -> Vec | None:
        """Barycentric coordinates of x in the chain simplex, or None."""
        from .rational import solve

        pts = self.chain_points(ch)
        rows = [[p[k] for p in pts] for k in range(self.rank)] + [[Fraction(1)] * len(pts)]
        sol = solve(rows, list(x) + [Fraction(1)])
        return sol

    def locate(self, x: Sequence) -> tuple | None:
        """The chain whose open simplex contains x."""
        x = vec(x)
        for ch in self.chains:
            b = self.barycentric(ch, x)
            if b is not None and all(t > 0 for t in b):
                return ch
        return None

    def in_B(self, x: Sequence) -> bool:
        x = vec(x)
        return any(c.polytope.contains(x) for c in self.maximal_cells) or any(
            c.polytope.contains(x) for c in self.cells
        )

    def cell_containing(self, x: Sequence) -> Cell | None:
        """The cell with x in its relative interior."""
        x = vec(x)
        for c in self.cells:
            if c.polytope.in_relint(x):
                return c
        return None

    # -- charts ---------------------------------------------------------------

    def psi_v(self, v: Cell) -> tuple:
        if v.dim != 0:
            raise GeometryError("psi_v is defined for vertices only")
        pts = [b.vertices[0] for b in v.betas]
        return quotient_projection(pts, self.rank)

    def psi_sigma(self, s: Cell) -> AffineChart:
        if s.dim != self.d:
            raise GeometryError("psi_sigma is defined for maximal cells only")
        base = s.vertices[0]
        basis = saturation_basis([sub(p, base) for p in s.vertices[1:]])
        return AffineChart(base, tuple(basis))

    def chart_transition(self, v: Cell, s: Cell) -> tuple:
        """Matrix of psi_v composed with the inverse of psi_sigma (linear part)."""
        if v.index not in self.faces_of[s.index]:
            raise GeometryError("vertex is not a face of the cell")
        chart = self.psi_sigma(s)
        pv = self.psi_v(v)
        cols = [matvec(pv, b) for b in chart.basis]
        return tuple(tuple(col[k] for col in cols) for k in range(len(pv)))

    # -- labels -----------------------------------------------------------------

    @cached_property
    def label_sets(self) -> list[list[Vec]]:
        nhp = self.nabla_hp
        if nhp.dim == nhp.ambient_dim:
            n0 = [p for p in nhp.lattice_points() if not nhp.in_relint(p)]
        else:
            n0 = nhp.lattice_points()
        out = [sorted(n0)]
        bp = self.nef.boundary_points
        for i in range(self.nef.r):
            out.append(sorted(p for p in bp if self.nef.phis[i](p) == 1))
        return out

    def label(self, v: Cell) -> tuple:
        return (v.nu.vertices[0],) + tuple(b.vertices[0] for b in v.betas)

    def default_orders(self, distinguished: Cell) -> list[list[Vec]]:
        """Lexicographic orders, re-rooted so the distinguished entries are greatest."""
        lab = self.label(distinguished)
        out = []
        for s, top in zip(self.label_sets, lab):
            rest = [p for p in s if p != top]
            out.append(rest + [top])
        return out

    def vertex_order(self, distinguished: Cell, orders: list | None = None) -> list[Cell]:
        """Vertices sorted increasingly by the lexicographic order on labels."""
        if distinguished.dim != 0:
            raise GeometryError("the distinguished cell must be a vertex")
        if orders is None:
            orders = self.default_orders(distinguished)
        orders = [[vec(p) for p in o] for o in orders]
        lab = self.label(distinguished)
        for o, top in zip(orders, lab):
            if o[-1] != top:
                raise GeometryError(f"order does not make {fmt_vec(top)} greatest")
        rank_of = [{p: k for k, p in enumerate(o)} for o in orders]
        key = lambda v: tuple(rk[p] for rk, p in zip(rank_of, self.label(v)))
        return sorted(self.vertices, key=key)

    # -- verification -----------------------------------------------------------

    def check_complex(self) -> None:
        for a, b in itertools.combinations(self.cells, 2):
            pa, pb = a.polytope, b.polytope
            ineqs = tuple(pa.facets) + tuple(pb.facets)
            eqs = tuple(pa.equations) + tuple(pb.equations)
            pts, _, _ = Polyhedron(self.rank, ineqs, eqs).generators
            if not pts:
                continue
            common = hull(pts)
            if not (pa.is_face(common.vertices) and pb.is_face(common.vertices)):
                raise GeometryError(f"cells {a.index} and {b.index} meet in a non-face")

    def check_boundary(self) -> None:
        for c in self.cells:
            for v in c.vertices:
                if not self.nabla_h.contains(v) or self.nabla_h.in_relint(v):
                    raise GeometryError(f"vertex {fmt_vec(v)} is not on the boundary of the Newton polytope")

    def check_direct_sums(self) -> None:
        for c in self.cells:
            dims = [c.nu.dim] + [b.dim for b in c.betas]
            if sum(dims) != c.dim:
                raise GeometryError(f"cell {c.index} tangent spaces do not form a direct sum")

    def check_anchors(self) -> None:
        for c in self.cells:
            if not c.polytope.in_relint(self.anchors[c.index]):
                raise GeometryError(f"anchor of cell {c.index} is not in its relative interior")

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "dim": self.d,
            "f_vector": list(self.f_vector),
            "cells": [
                {
                    "index": c.index,
                    "dim": c.dim,
                    "vertices": [fmt_vec(v) for v in c.vertices],
                    "mu": [fmt_vec(v) for v in c.mu.vertices],
                    "nu": [fmt_vec(v) for v in c.nu.vertices],
                    "faces": sorted(i for i in self.faces_of[c.index] if i != c.index),
                    "anchor": fmt_vec(self.anchors[c.index]),
                }
                for c in self.cells
            ],
            "gamma": [list(ch) for ch in self.gamma],
            "charts": {
                str(v.index): [list(r) for r in self.psi_v(v)] for v in self.vertices
            },
            "warnings": list(self.warnings),
        }


def relevant_cones(nef: NefPartition, st_prime: Fan) -> list[tuple[RatCone, Polytope, Polytope, tuple]]:
    """(cone, mu, nu, betas) for every relevant cone of the subdivided fan."""
    out = []
    for c in st_prime.cones:
        hor = [r[:-1] for r in c.rays if r[-1] == 0]
        ver = [r[:-1] for r in c.rays if r[-1] != 0]
        if not hor or not ver:
            continue
        if any(r[-1] != 1 for r in c.rays if r[-1] != 0):
            raise GeometryError(f"vertical ray of {fmt_vec(c.rays[0])} is not at height one")
        mu = hull(hor, lattice="N")
        nu = hull(ver, lattice="N")
        betas = tuple(nef.beta_star(mu, i) for i in range(nef.r))
        if any(b is None for b in betas):
            continue
        out.append((c, mu, nu, betas))
    return out


def build_dual_complex(
    nef: NefPartition,
    sigma_prime: Fan,
    st_prime: Fan,
    h_check: PLFunction,
    anchors: dict | None = None,
    check: bool = True,
) -> DualComplex:
    if not h_check.is_strictly_convex():
        raise GeometryError("h_check is not strictly convex on its fan")
    phi_check = sum(nef.phi_checks[1:], nef.phi_checks[0]) if nef.r > 1 else nef.phi_checks[0]
    phi_on = phi_check.restrict_to(h_check.fan)
    hprime = h_check - phi_on
    if not hprime.is_convex():
        raise GeometryError("h_check - phi_check is not convex")
    nabla_h = newton_polytope(h_check)
    nabla_hp = newton_polytope(hprime)
    found: dict[tuple, list] = {}
    for c, mu, nu, betas in relevant_cones(nef, st_prime):
        poly = hull([add(a, b) for a in minkowski_sum_all(list(betas)).vertices for b in nu.vertices])
        found.setdefault(poly.vertices, []).append((c, mu, nu, betas, poly))
    warnings = []
    rows = []
    for key in sorted(found, key=lambda k: (affine_rank(list(k)), k)):
        witnesses = found[key]
        if len(witnesses) > 1:
            msg = f"{len(witnesses)} relevant cones realize the cell {[fmt_vec(v) for v in key]}; merged"
            log.warning(msg)
            warnings.append(msg)
        witnesses.sort(key=lambda w: (w[0].dim, w[0].rays))
        rows.append(witnesses[0])
    cells = [
        Cell(i, poly, mu, nu, betas, c) for i, (c, mu, nu, betas, poly) in enumerate(rows)
    ]
    anchor_list = [centroid(list(c.vertices)) for c in cells]
    for k, a in (anchors or {}).items():
        anchor_list[int(k)] = vec(a)
    dc = DualComplex(nef, sigma_prime, st_prime, h_check, nabla_h, nabla_hp, cells, anchor_list, warnings)
    if dc.d < 2:
        raise GeometryError("the complex must have dimension at least two")
    if check:
        dc.check_anchors()
        dc.check_boundary()
        dc.check_direct_sums()
        dc.check_complex()
    return dc
