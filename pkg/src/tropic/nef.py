"""Nef partitions of reflexive polytopes and the induced dual data."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .fans import Fan, normal_fan, support_function
from .polyhedra import GeometryError, Polytope, hull, minkowski_sum_all, polar_dual
from .rational import Vec, fmt_vec, zero


class NefError(GeometryError):
    pass


@dataclass(eq=False)
class NefPartition:
    delta: Polytope
    parts: list
    sigma: Fan
    phis: list
    nablas: list
    nabla: Polytope
    sigma_check: Fan
    phi_checks: list

    @property
    def r(self) -> int:
        return len(self.parts)

    @property
    def rank(self) -> int:
        return self.delta.ambient_dim

    @property
    def d(self) -> int:
        return self.rank - self.r

    @cached_property
    def dstar(self) -> Polytope:
        return polar_dual(self.delta)

    @cached_property
    def nabla_star(self) -> Polytope:
        return polar_dual(self.nabla)

    def phi(self, n: Sequence) -> Fraction:
        return sum((p(n) for p in self.phis), Fraction(0))

    def phi_check(self, m: Sequence) -> Fraction:
        return sum((p(m) for p in self.phi_checks), Fraction(0))

    @cached_property
    def boundary_points(self) -> list[Vec]:
        """Lattice points of the boundary of the polar polytope."""
        return [p for p in self.dstar.lattice_points() if not self.dstar.in_relint(p)]

    def part_index(self, n: Sequence) -> int:
        """The unique i (0-based) with phi_i(n) = 1 for a boundary lattice point n."""
        hits = [i for i, p in enumerate(self.phis) if p(n) == 1]
        if len(hits) != 1:
            raise NefError(f"{fmt_vec(n)} does not lie in exactly one nabla_i")
        return hits[0]

    # -- the beta operations ------------------------------------------------

    def beta_star(self, mu: Polytope, i: int) -> Polytope | None:
        """{n in mu : phi_i(n) = 1}; ``i`` is 0-based.  None when empty."""
        self._check_on_boundary(mu, self.dstar, self.phi, "polar polytope")
        keep = [v for v in mu.vertices if self.phis[i](v) == 1]
        return hull(keep, lattice="N") if keep else None

    def beta_bar(self, mu: Polytope) -> Polytope | None:
        parts = [self.beta_star(mu, i) for i in range(self.r)]
        if any(p is None for p in parts):
            return None
        return minkowski_sum_all(parts)

    def beta_check_star(self, eta: Polytope, i: int) -> Polytope | None:
        self._check_on_boundary(eta, self.nabla_star, self.phi_check, "dual of nabla")
        keep = [v for v in eta.vertices if self.phi_checks[i](v) == 1]
        return hull(keep, lattice="M") if keep else None

    def beta(self, eta: Polytope) -> Polytope | None:
        parts = [self.beta_check_star(eta, i) for i in range(self.r)]
        if any(p is None for p in parts):
            return None
        return minkowski_sum_all(parts)

    @staticmethod
    def _check_on_boundary(p: Polytope, ambient: Polytope, phi, name: str) -> None:
        for v in p.vertices:
            if not ambient.contains(v) or phi(v) != 1:
                raise NefError(f"{fmt_vec(v)} is not on the boundary of the {name}")


def validate_nef_partition(delta: Polytope, parts: Sequence[Polytope]) -> NefPartition:
    parts = list(parts)
    if not parts:
        raise NefError("a nef partition needs at least one part")
    if not delta.is_reflexive():
        raise NefError("the polytope is not reflexive")
    for p in parts:
        if not p.is_lattice():
            raise NefError(f"part {p!r} is not a lattice polytope")
        if not p.contains(zero(delta.ambient_dim)):
            raise NefError(f"part {p!r} does not contain the origin")
    total = minkowski_sum_all(parts)
    if total.vertices != delta.vertices:
        raise NefError("the parts do not sum to the polytope")
    sigma = normal_fan(delta)
    phis = [support_function(p, sigma) for p in parts]
    nablas = []
    for i, ph in enumerate(phis):
        for e in sigma.rays:
            if ph(e) not in (0, 1):
                raise NefError(f"phi_{i + 1}({fmt_vec(e)}) = {ph(e)} is not 0 or 1")
        gens = [e for e in sigma.rays if ph(e) == 1]
        nablas.append(hull([zero(delta.ambient_dim)] + gens, lattice="N"))
    nabla = minkowski_sum_all(nablas)
    if not nabla.is_reflexive():
        raise NefError("the sum of the nabla_i is not reflexive")
    sigma_check = normal_fan(nabla)
    phi_checks = [support_function(nb, sigma_check) for nb in nablas]
    return NefPartition(delta, parts, sigma, phis, nablas, nabla, sigma_check, phi_checks)
