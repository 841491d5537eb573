"""The tropical contraction delta: trop(X) -> B and its verifier batteries.

On the piece V_{tau', tau} the contraction is projection to the orbit of
C_{tau'} followed by the unique section back onto the open chain simplices
starting at tau'.  A point p = (orbit C', lift y) is in that piece exactly
when y = x + sum_g lam_g g modulo span(C') with x in an open chain simplex
starting at tau', g running over the generators of C_{tau'} outside C' and
lam_g >= 0.  The generators are part of a lattice basis, so the
decomposition is unique; we solve for it directly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .checks import Report
from .dualcomplex import Cell, DualComplex
from .lattice import quotient_projection, saturation_basis, lattice_coordinates
from .lp import strictly_feasible
from .polyhedra import RatCone
from .rational import (
    Vec,
    add,
    affine_rank,
    centroid,
    det,
    dot,
    fmt_vec,
    matvec,
    rank,
    scale,
    solve,
    sub,
    vec,
    vsum,
)
from .tropical import TropicalCI, TropPoint


class ContractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Representation:
    tau_prime: int
    chain: tuple
    x: Vec
    bary: Vec
    lam: tuple  # coefficients of the generators outside the orbit cone


class ContractionAtlas:
    def __init__(self, B: DualComplex, X: TropicalCI, check: bool = True):
        self.B = B
        self.X = X
        self.n = B.rank
        self._reps: dict[TropPoint, list] = {}
        self._located: dict[Vec, tuple | None] = {}
        if check:
            self.check_injectivity()

    def generators(self, tau: int) -> tuple:
        return self.B.cells[tau].generators

    def c_tau(self, tau: int) -> RatCone:
        return self.B.cells[tau].c_tau

    # -- charts ---------------------------------------------------------------

    def check_injectivity(self) -> None:
        """pi_{C_tau'} is injective on the union of open chain simplices from tau'."""
        for c in self.B.cells:
            chains = self.B.chains_from(c.index)
            proj = quotient_projection(list(c.generators), self.n)
            images = {}
            for ch in chains:
                pts = [matvec(proj, a) for a in self.B.chain_points(ch)]
                if affine_rank(pts) != len(pts) - 1:
                    raise ContractionError(f"projection collapses the chain simplex {ch}")
                images[ch] = pts
            for ch1, ch2 in itertools.combinations(chains, 2):
                if _open_simplices_meet(images[ch1], images[ch2]):
                    raise ContractionError(f"projection from cell {c.index} is not injective on {ch1}, {ch2}")

    def section(self, tau: int, y: Sequence) -> Vec | None:
        """t_{tau'}: the unique point of W_{tau'} over pi(y), or None."""
        p = TropPoint(self.c_tau(tau), vec(y))
        for r in self._solve_in_chart(p, tau):
            return r.x
        return None

    def _solve_in_chart(self, p: TropPoint, tau: int) -> list[Representation]:
        c = self.B.cells[tau]
        if not p.cone.is_face_of(c.c_tau):
            return []
        proj = quotient_projection(list(p.cone.rays), self.n)
        free = [g for g in c.generators if not p.cone.contains(g)]
        y = matvec(proj, p.lift)
        out = []
        for ch in self.B.chains_from(tau):
            anchors = self.B.chain_points(ch)
            cols = [matvec(proj, a) for a in anchors] + [matvec(proj, g) for g in free]
            k = len(cols)
            rows = [[col[i] for col in cols] for i in range(len(y))]
            rows.append([Fraction(1)] * len(anchors) + [Fraction(0)] * len(free))
            rhs = list(y) + [Fraction(1)]
            sol = solve(rows, rhs)
            if sol is None:
                continue
            if rank(rows) != k:
                raise ContractionError(f"non-unique decomposition in chart of cell {tau}")
            alpha, lam = sol[: len(anchors)], sol[len(anchors):]
            if all(a > 0 for a in alpha) and all(l >= 0 for l in lam):
                x = vsum([scale(a, q) for a, q in zip(alpha, anchors)])
                out.append(Representation(tau, ch, x, alpha, lam))
        return out

    def representations(self, p: TropPoint) -> list[Representation]:
        if p not in self._reps:
            out = []
            for c in self.B.cells:
                out.extend(self._solve_in_chart(p, c.index))
            self._reps[p] = out
        return self._reps[p]

    def locate(self, x: Sequence) -> tuple | None:
        x = vec(x)
        if x not in self._located:
            self._located[x] = self.B.locate(x)
        return self._located[x]

    def delta(self, p: TropPoint | Sequence, check_membership: bool = True) -> Vec:
        if not isinstance(p, TropPoint):
            p = TropPoint.finite(p)
        if check_membership and not self.X.contains(p):
            raise ContractionError(f"{p!r} is not in trop(X)")
        reps = self.representations(p)
        if not reps:
            raise ContractionError(f"{p!r} lies in no chart of the atlas")
        xs = {r.x for r in reps}
        if len(xs) != 1:
            raise ContractionError(f"chart evaluations disagree at {p!r}: {[fmt_vec(x) for x in xs]}")
        return reps[0].x

    def chart_of(self, p: TropPoint) -> Representation:
        reps = self.representations(p)
        if not reps:
            raise ContractionError(f"{p!r} lies in no chart of the atlas")
        return reps[0]

    def in_X_tau(self, p: TropPoint, tau: int) -> bool:
        return any(tau in r.chain for r in self.representations(p))

    def in_U_tau(self, x: Sequence, tau: int) -> bool:
        ch = self.locate(x)
        return ch is not None and tau in ch

    # -- sampling ---------------------------------------------------------------

    @cached_property
    def samples(self) -> list[TropPoint]:
        return sample_points(self)


def _open_simplices_meet(p: Sequence[Vec], q: Sequence[Vec]) -> bool:
    """Do the relative interiors of conv(p) and conv(q) intersect?"""
    k, l = len(p), len(q)
    n = len(p[0])
    nv = k + l
    eq = []
    for i in range(n):
        eq.append(([x[i] for x in p] + [-x[i] for x in q], 0))
    eq.append(([1] * k + [0] * l, 1))
    eq.append(([0] * k + [1] * l, 1))
    strict = [([-1 if j == t else 0 for j in range(nv)], 0) for t in range(nv)]
    return strictly_feasible(strict, [], eq, nvars=nv) is not None


# ---------------------------------------------------------------------------
# sampling


def _interior_points(pts: Sequence[Vec]) -> list[Vec]:
    """Centroid plus points pulled toward each vertex, all in the open simplex."""
    c = centroid(list(pts))
    out = [c]
    if len(pts) > 1:
        for v in pts:
            out.append(add(scale(Fraction(1, 2), c), scale(Fraction(1, 2), v)))
    return out


def sample_points(atlas: ContractionAtlas, density: int = 1) -> list[TropPoint]:
    """Deterministic rational samples of trop(X), certified by membership."""
    B, X = atlas.B, atlas.X
    lams = [Fraction(1, 3), Fraction(2)] if density <= 1 else [Fraction(1, 3), Fraction(1), Fraction(2), Fraction(7)]
    found: dict[TropPoint, None] = {}

    def add_point(p: TropPoint) -> None:
        if p not in found and X.contains(p):
            found[p] = None

    for ch in B.chains:
        gens = B.cells[ch[0]].generators
        for x in _interior_points(B.chain_points(ch)):
            add_point(TropPoint.finite(x))
            for g in gens:
                for lam in lams:
                    add_point(TropPoint.finite(add(x, scale(lam, g))))
            if len(gens) > 1:
                add_point(TropPoint.finite(add(x, vsum(gens))))
            # orbit strata: send a nonempty subset of the generators to infinity
            for k in range(1, len(gens) + 1):
                for sub_ in itertools.combinations(gens, k):
                    cone = RatCone.of(sub_, B.rank)
                    if cone not in set(X.fan.cones):
                        continue
                    rest = [g for g in gens if g not in sub_]
                    add_point(TropPoint(cone, x))
                    for g in rest:
                        add_point(TropPoint(cone, add(x, scale(lams[0], g))))
    for piece in X.complex.pieces:
        pts, rays, lin = piece.polyhedron.generators
        base = piece.relint_point
        add_point(TropPoint(piece.cone, base))
        for v in pts:
            add_point(TropPoint(piece.cone, add(scale(Fraction(1, 2), base), scale(Fraction(1, 2), v))))
        for r in list(rays):
            for lam in lams:
                add_point(TropPoint(piece.cone, add(base, scale(lam, r))))
    return list(found)


# ---------------------------------------------------------------------------
# verifier batteries


def verify_laws(atlas: ContractionAtlas, samples: Sequence[TropPoint] | None = None) -> Report:
    """Retraction, idempotence and chart independence."""
    B = atlas.B
    samples = atlas.samples if samples is None else samples
    checked = 0
    for c in B.cells:
        for x in [B.anchors[c.index], centroid(list(c.vertices))]:
            if atlas.delta(x) != x:
                return Report("contraction_laws", False, checked, {"retraction": fmt_vec(x)})
            checked += 1
    for p in samples:
        try:
            x = atlas.delta(p, check_membership=False)
        except ContractionError as exc:
            return Report("contraction_laws", False, checked, {"point": p.to_json(), "error": str(exc)})
        if atlas.delta(x, check_membership=False) != x:
            return Report("contraction_laws", False, checked, {"idempotence": p.to_json()})
        if not B.in_B(x):
            return Report("contraction_laws", False, checked, {"outside_B": p.to_json()})
        checked += 1
    return Report("contraction_laws", True, checked)


def verify_preimage(atlas: ContractionAtlas, tau: int, samples: Sequence[TropPoint] | None = None) -> Report:
    """delta^{-1}(U_tau) = X_tau on every sample, exactly."""
    samples = atlas.samples if samples is None else samples
    checked = 0
    for p in samples:
        x = atlas.delta(p, check_membership=False)
        a = atlas.in_U_tau(x, tau)
        b = atlas.in_X_tau(p, tau)
        if a != b:
            return Report(f"preimage[{tau}]", False, checked, {"point": p.to_json(), "in_U": a, "in_X_tau": b})
        checked += 1
    return Report(f"preimage[{tau}]", True, checked)


def attaining_nonzero(atlas: ContractionAtlas, sigma: Cell) -> list[Vec]:
    """For each i, the unique nonzero exponent attaining f_i at the centroid of sigma."""
    c = centroid(list(sigma.vertices))
    out = []
    for f in atlas.X.polys:
        att = f.attaining(c)
        nz = [m for m in att if any(m)]
        if len(att) != 2 or len(nz) != 1:
            raise ContractionError(f"unexpected attaining set at the centroid of cell {sigma.index}")
        out.append(nz[0])
    return out


@dataclass(frozen=True)
class ThickeningCase:
    """One LP of the sigma-cone battery, with the data for the closed form."""

    stratum: tuple
    i: int
    competitor: Vec
    g: tuple  # values at the vertices of sigma
    h: tuple  # pairings with the thickening directions
    part: tuple  # flags: direction belongs to beta*_i
    free: tuple  # flags: direction not sent to infinity
    feasible: bool


def sigma_cone_cases(atlas: ContractionAtlas, sigma: Cell, gens: Sequence[Vec]) -> list[ThickeningCase]:
    """LP battery certifying (rint sigma + cone_T(gens)) cap X = rint sigma."""
    X = atlas.X
    n = atlas.n
    ms = attaining_nonzero(atlas, sigma)
    gens = [vec(g) for g in gens]
    part_of = {g: atlas.B.nef.part_index(g) for g in gens}
    verts = list(sigma.vertices)
    cases = []
    for k in range(0, len(gens) + 1):
        for inf in itertools.combinations(gens, k):
            cone = RatCone.of(inf, n) if inf else RatCone((), n)
            if inf and cone not in set(X.fan.cones):
                continue
            free = [g for g in gens if g not in inf]
            if inf:
                choices = [next(i for i in range(len(ms)) if any(part_of[g] == i for g in inf))]
            else:
                choices = list(range(len(ms)))
            for i in choices:
                f = X.polys[i].restrict(cone)
                coeff = dict(f.terms)
                mi = ms[i]
                if mi not in coeff:
                    raise ContractionError(f"exponent {fmt_vec(mi)} missing from the restricted polynomial")
                for c, hc in f.terms:
                    if c == mi:
                        continue
                    g_vals = tuple(hc + dot(c, v) - coeff[mi] - dot(mi, v) for v in verts)
                    h_vals = tuple(dot(sub(c, mi), s) for s in free)
                    part = tuple(part_of[s] == i for s in free)
                    feas = _thickening_lp(g_vals, h_vals, part, need_positive=not inf)
                    cases.append(ThickeningCase(tuple(inf), i, c, g_vals, h_vals, part, tuple(True for _ in free), feas))
    return cases


def _thickening_lp(g: Sequence, h: Sequence, part: Sequence[bool], need_positive: bool) -> bool:
    """alpha > 0, sum alpha = 1, lam >= 0, [sum_{part} lam > 0], sum alpha g + sum lam h <= 0."""
    k, l = len(g), len(h)
    nv = k + l
    strict = [([-1 if j == t else 0 for j in range(nv)], 0) for t in range(k)]
    if need_positive:
        if not any(part):
            return False
        strict.append(([0] * k + [-1 if p else 0 for p in part], 0))
    weak = [([0] * k + [-1 if j == t else 0 for j in range(l)], 0) for t in range(l)]
    weak.append((list(g) + list(h), 0))
    eq = [([1] * k + [0] * l, 1)]
    return strictly_feasible(strict, weak, eq, nvars=nv) is not None


def thickening_closed_form(case: ThickeningCase) -> bool:
    """Feasibility of the same system, decided without LP."""
    g, h, part = case.g, case.h, case.part
    need_positive = not case.stratum
    if need_positive and not any(part):
        return False
    if any(x < 0 for x in h) or min(g) < 0:
        return True
    if all(x == 0 for x in g):
        if not need_positive:
            return True
        return any(x == 0 and p for x, p in zip(h, part))
    return False


def verify_sigma_cone(atlas: ContractionAtlas, sigma: Cell, v: Cell | None = None) -> Report:
    gens = v.generators if v is not None else sigma.generators
    name = f"sigma_cone[{sigma.index}" + (f",{v.index}]" if v is not None else "]")
    cases = sigma_cone_cases(atlas, sigma, gens)
    for c in cases:
        if c.feasible:
            return Report(name, False, len(cases), {"stratum": [fmt_vec(s) for s in c.stratum], "i": c.i, "competitor": fmt_vec(c.competitor)})
    return Report(name, True, len(cases))


# ---------------------------------------------------------------------------
# integral affine structure


def _affine_basis(points: Sequence[Vec]) -> list[int]:
    """Indices of a maximal affinely independent subset (greedy)."""
    keep = [0]
    for i in range(1, len(points)):
        trial = [points[j] for j in keep] + [points[i]]
        if affine_rank(trial) == len(trial) - 1:
            keep.append(i)
    return keep


def _check_affine(samples: list[tuple[Vec, Vec]]) -> tuple[bool, object]:
    """Interpolate on an affine basis, test the rest and integrality of the linear part."""
    pts = [s for s, _ in samples]
    vals = [v for _, v in samples]
    basis = _affine_basis(pts)
    q0, f0 = pts[basis[0]], vals[basis[0]]
    dirs = [sub(pts[j], q0) for j in basis[1:]]
    dvals = [sub(vals[j], f0) for j in basis[1:]]

    def predict(q):
        if not dirs:
            return f0
        cf = lattice_coordinates(dirs, sub(q, q0))
        if cf is None:
            return None
        return add(f0, vsum([scale(c, d) for c, d in zip(cf, dvals)], len(f0)))

    for q, v in samples:
        if predict(q) != v:
            return False, fmt_vec(q)
    if dirs:
        for b in saturation_basis([tuple(int(x * _den(d)) for x in d) for d in dirs]):
            cf = lattice_coordinates(dirs, b)
            img = vsum([scale(c, d) for c, d in zip(cf, dvals)], len(f0))
            if any(x.denominator != 1 for x in img):
                return False, {"non_integral_direction": list(b)}
    return True, None


def _den(v: Sequence) -> int:
    from math import lcm

    out = 1
    for x in v:
        out = lcm(out, Fraction(x).denominator)
    return out


def verify_affine_compat(atlas: ContractionAtlas, samples: Sequence[TropPoint] | None = None) -> Report:
    """psi_v o delta is integral affine on each piece region of delta^{-1}(W_v minus Gamma)."""
    B = atlas.B
    samples = atlas.samples if samples is None else samples
    pieces = atlas.X.complex.pieces
    checked = 0
    regions: dict[tuple, list] = {}
    gamma = set(B.gamma)
    for p in samples:
        rep = atlas.chart_of(p)
        v = rep.chain[0]
        if B.cells[v].dim != 0 or rep.chain in gamma:
            continue
        psi = B.psi_v(B.cells[v])
        img = matvec(psi, rep.x)
        for k, q in enumerate(pieces):
            if q.contains(p):
                proj = quotient_projection(list(p.cone.rays), atlas.n)
                regions.setdefault((v, k, rep.chain), []).append((matvec(proj, p.lift), img))
    for key, pts in sorted(regions.items()):
        ok, wit = _check_affine(pts)
        checked += len(pts)
        if not ok:
            return Report("affine_compat", False, checked, {"vertex": key[0], "piece": key[1], "witness": wit})
    # chart transitions psi_v vs psi_sigma across every vertex of every maximal cell
    for s in B.maximal_cells:
        for v in B.vertices:
            if v.index not in B.faces_of[s.index]:
                continue
            m = B.chart_transition(v, s)
            if any(x.denominator != 1 for row in m for x in row) or abs(det(m)) != 1:
                return Report("affine_compat", False, checked, {"transition": [v.index, s.index]})
            checked += 1
    return Report("affine_compat", True, checked, details={"regions": len(regions)})


def build_atlas(B: DualComplex, X: TropicalCI) -> ContractionAtlas:
    return ContractionAtlas(B, X)


def delta_eval(atlas: ContractionAtlas, p: TropPoint | Sequence) -> Vec:
    return atlas.delta(p)
