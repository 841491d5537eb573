"""Blow-up charts as monomial maps, divisorial points, series K-points and the
commutation check between the contraction and the retraction formula.
"""
from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm, prod
from typing import Sequence

import sympy

from .checks import Report
from .contraction import ContractionAtlas
from .dualcomplex import Cell, DualComplex
from .polyhedra import GeometryError, hull
from .rational import Q, Vec, det, dot, fmt, fmt_vec, inverse, primitive, sub, transpose, vec, vsum
from .series import PowerSeries, Puiseux, SeriesError, evaluate_laurent
from .shuffles import Shuffle, enumerate_shuffles
from .tropical import TropPoint

INF = float("inf")


class ChartError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# chart bases


@dataclass(frozen=True)
class ChartBasis:
    """The basis n_{i,j} of N + Z attached to a maximal relevant cone, with its dual basis."""

    cell: Cell
    n: tuple  # n[i][j]
    m: tuple  # m[i][j]

    @property
    def k(self) -> tuple:
        return tuple(len(row) - 1 for row in self.n)

    @property
    def r(self) -> int:
        return len(self.n) - 1

    @property
    def d(self) -> int:
        return sum(self.k)

    @cached_property
    def vars(self) -> tuple:
        return tuple((i, j) for i, row in enumerate(self.n) for j in range(len(row)))

    @cached_property
    def position(self) -> dict:
        return {a: p for p, a in enumerate(self.vars)}

    def n_of(self, a) -> Vec:
        return self.n[a[0]][a[1]]

    def m_of(self, a) -> Vec:
        return self.m[a[0]][a[1]]

    def check(self) -> None:
        for a in self.vars:
            for b in self.vars:
                if dot(self.m_of(a), self.n_of(b)) != (1 if a == b else 0):
                    raise ChartError(f"dual bases fail at {a}, {b}")
        rank = len(self.vars) - 1
        if self.d != rank - self.r:
            raise ChartError("the k_i do not add up to d")
        t = vsum([self.m[0][j] for j in range(len(self.m[0]))])
        if t != tuple(Fraction(1 if c == rank else 0) for c in range(rank + 1)):
            raise ChartError("the m_{0,j} do not multiply to t")


def chart_basis(cell: Cell, orders: Sequence[Sequence], rank: int) -> ChartBasis:
    """n_{0,j}: rays of cone(nu x 1); n_{i,j}: lattice points of beta*_i(mu) x 0; both in the given orders."""
    if len(orders) != len(cell.betas) + 1:
        raise ChartError("one order per label set is required")
    ranks = [{vec(p): q for q, p in enumerate(o)} for o in orders]
    rows = []
    pts0 = sorted(cell.nu.vertices, key=lambda p: ranks[0][p])
    rows.append(tuple(tuple(p) + (Fraction(1),) for p in pts0))
    for i, b in enumerate(cell.betas):
        pts = sorted(b.lattice_points(), key=lambda p: ranks[i + 1][p])
        rows.append(tuple(tuple(p) + (Fraction(0),) for p in pts))
    flat = [v for row in rows for v in row]
    if len(flat) != rank + 1:
        raise ChartError(f"cell {cell.index} does not give {rank + 1} basis vectors")
    if abs(det(flat)) != 1:
        raise ChartError(f"cone of cell {cell.index} is not unimodular")
    dual = transpose(inverse(flat))
    mrows, pos = [], 0
    for row in rows:
        mrows.append(tuple(tuple(dual[pos + j]) for j in range(len(row))))
        pos += len(row)
    out = ChartBasis(cell, tuple(rows), tuple(mrows))
    out.check()
    return out


# ---------------------------------------------------------------------------
# walk data of a shuffle inside a chart


class ShuffleChart:
    """Index data I(l), I'(l), lbar, l_i, L^{i,j}_l of a shuffle in a chart."""

    def __init__(self, basis: ChartBasis, s: Shuffle):
        k = basis.k
        p = s.degree
        if len(p) != len(k) or p[0] != k[0] or any(pi > ki for pi, ki in zip(p, k)):
            raise ChartError(f"shuffle of degree {p} does not fit the chart {k}")
        self.basis = basis
        self.s = s
        self.k = k
        self.first_kind = tuple(p) == tuple(k)

    def i(self, l: int) -> int:
        return self.s.i(l)

    def j(self, i: int, l: int) -> int:
        return self.s.j(i, l)

    def I(self, l: int) -> set:
        return {0} | {i for i in range(1, len(self.k)) if self.j(i, l) < self.k[i]}

    def I_prime(self, l: int) -> set:
        return self.I(l) - {self.i(l + 1)}

    @cached_property
    def lbar(self) -> int:
        if self.first_kind:
            return next(l for l in range(1, self.s.pbar + 2) if self.I(l) == {0})
        return self.s.pbar + 1

    def l_i(self, i: int):
        if self.s.degree[i] != self.k[i]:
            return INF
        # l = 0 only happens for an empty block (k_i = 0)
        return next(l for l in range(0, self.s.pbar + 2) if self.j(i, l) == self.k[i])

    def L(self, i: int, j: int, l: int) -> list[int]:
        top = l if i == 0 else min(l, self.l_i(i))
        return [q for q in range(1, l + 1) if q <= top and self.i(q) != i and self.j(i, q - 1) == j]

    def exceptional(self, l: int) -> tuple:
        """The variable (i(l), j_{i(l)}(l-1)) cutting out the l-th divisor."""
        return (self.i(l), self.j(self.i(l), l - 1))

    def m_l(self, l: int) -> Vec:
        b = self.basis
        if l == 1:
            return b.m[self.i(1)][0]
        il, ip = self.i(l), self.i(l - 1)
        plus = vsum([b.m[il][q] for q in range(self.j(il, l - 1) + 1)], len(b.m[0][0]))
        minus = vsum([b.m[ip][q] for q in range(self.j(ip, l - 1))], len(b.m[0][0]))
        return sub(plus, minus)

    def n_l(self, l: int) -> Vec:
        b = self.basis
        return vsum([b.n[i][self.j(i, l - 1)] for i in range(len(self.k))])


def shuffles_first_kind(basis: ChartBasis) -> list[Shuffle]:
    return enumerate_shuffles(basis.k)


def shuffles_second_kind(basis: ChartBasis) -> list[Shuffle]:
    k = basis.k
    out = []
    for tail in itertools.product(*[range(ki + 1) for ki in k[1:]]):
        if tuple(tail) == tuple(k[1:]):
            continue
        out.extend(enumerate_shuffles((k[0],) + tuple(tail)))
    return out


# ---------------------------------------------------------------------------
# monomial maps


@dataclass(frozen=True)
class MonomialMap:
    """z_src^a -> prod_b z_dst^b ^ rows[a][b]; composition is substitution."""

    vars: tuple
    rows: tuple  # integer matrix, one row per source variable

    @staticmethod
    def identity(vars_: tuple) -> "MonomialMap":
        n = len(vars_)
        return MonomialMap(vars_, tuple(tuple(1 if a == b else 0 for b in range(n)) for a in range(n)))

    def then(self, other: "MonomialMap") -> "MonomialMap":
        """Substitute ``other`` into the target variables of ``self``."""
        n = len(self.vars)
        rows = tuple(
            tuple(sum(self.rows[a][c] * other.rows[c][b] for c in range(n)) for b in range(n)) for a in range(n)
        )
        return MonomialMap(self.vars, rows)

    def inverse(self) -> "MonomialMap":
        inv = inverse(self.rows)
        if any(x.denominator != 1 for row in inv for x in row):
            raise ChartError("monomial map is not invertible over Z")
        return MonomialMap(self.vars, tuple(tuple(int(x) for x in row) for row in inv))

    def row(self, a) -> tuple:
        return self.rows[self.vars.index(a)]

    def to_json(self) -> dict:
        return {str(a): list(r) for a, r in zip(self.vars, self.rows)}


def blowup_map(basis: ChartBasis, s: Shuffle, l: int) -> MonomialMap:
    """pi_l: z_{l-1}^{i,j} -> z_l^{i,j} * z_l^{exc} when i in I'(l-1) and j = j_i(l-1)."""
    sc = ShuffleChart(basis, s)
    if not 1 <= l <= sc.lbar:
        raise IndexError(f"l = {l} out of range 1..{sc.lbar}")
    vars_ = basis.vars
    pos = basis.position
    exc = pos[sc.exceptional(l)]
    ip = sc.I_prime(l - 1)
    rows = []
    for a, (i, j) in enumerate(vars_):
        row = [0] * len(vars_)
        row[a] = 1
        if i in ip and j == sc.j(i, l - 1):
            row[exc] += 1
        rows.append(tuple(row))
    return MonomialMap(vars_, tuple(rows))


def iterated_map(basis: ChartBasis, s: Shuffle, l: int) -> MonomialMap:
    out = MonomialMap.identity(basis.vars)
    for q in range(1, l + 1):
        out = out.then(blowup_map(basis, s, q))
    return out


def composed_map(basis: ChartBasis, s: Shuffle, l: int) -> MonomialMap:
    """Closed form z_0^{i,j} -> z_l^{i,j} * prod_{l' in L^{i,j}_l} z_l^{exc(l')}."""
    sc = ShuffleChart(basis, s)
    if not 1 <= l <= sc.lbar:
        raise IndexError(f"l = {l} out of range 1..{sc.lbar}")
    pos = basis.position
    rows = []
    for a, (i, j) in enumerate(basis.vars):
        row = [0] * len(basis.vars)
        row[a] += 1
        for q in sc.L(i, j, l):
            row[pos[sc.exceptional(q)]] += 1
        rows.append(tuple(row))
    return MonomialMap(basis.vars, tuple(rows))


def verify_composed(basis: ChartBasis, s: Shuffle) -> Report:
    sc = ShuffleChart(basis, s)
    for l in range(1, sc.lbar + 1):
        if composed_map(basis, s, l) != iterated_map(basis, s, l):
            return Report("composed_map", False, l, {"shuffle": s.to_json(), "l": l})
    return Report("composed_map", True, sc.lbar)


def _closed_form_xs(sc: ShuffleChart, a: tuple) -> tuple:
    """Exponents over z_0 of z_S^{i,j} from the closed form."""
    basis = sc.basis
    pos = basis.position
    i, j = a
    out = [0] * len(basis.vars)
    special = {(q, sc.k[q]) for q in range(1, len(sc.k))} | {(sc.i(1), 0)}
    if a in special:
        out[pos[a]] = 1
        return tuple(out)
    d = basis.d
    lij = max(q for q in range(1, d + 1) if sc.j(i, q) == j)
    for q in range(j + 1):
        out[pos[(i, q)]] += 1
    il = sc.i(lij)
    for q in range(sc.j(il, lij)):
        out[pos[(il, q)]] -= 1
    return tuple(out)


def verify_xsx0_zsl(basis: ChartBasis, s: Shuffle) -> Report:
    """z_S in terms of z_0 (closed form), z_S^{exc(l)} = z^{m_l}, and the t-factorization."""
    sc = ShuffleChart(basis, s)
    if not sc.first_kind:
        raise ChartError("the closed forms hold for shuffles of the chart degree")
    inv = iterated_map(basis, s, sc.lbar).inverse()
    checked = 0
    for a in basis.vars:
        if inv.row(a) != _closed_form_xs(sc, a):
            return Report("xsx0_zsl", False, checked, {"var": list(a), "shuffle": s.to_json()})
        checked += 1
    dim = len(basis.vars)
    for l in range(1, basis.d + 2):
        row = inv.row(sc.exceptional(l))
        m = vsum([tuple(c * x for x in basis.m_of(b)) for c, b in zip(row, basis.vars)], dim)
        if m != sc.m_l(l):
            return Report("xsx0_zsl", False, checked, {"m_l": l, "shuffle": s.to_json()})
        checked += 1
    # t = prod_j z_0^{0,j} pulls back to prod_l z_S^{exc(l)}
    fwd = composed_map(basis, s, sc.lbar)
    t_img = [0] * dim
    for j in range(len(basis.n[0])):
        t_img = [x + y for x, y in zip(t_img, fwd.row((0, j)))]
    want = [0] * dim
    for l in range(1, basis.d + 2):
        want[basis.position[sc.exceptional(l)]] += 1
    if t_img != want:
        return Report("xsx0_zsl", False, checked, {"t_factorization": s.to_json()})
    if vsum([sc.m_l(l) for l in range(1, basis.d + 2)]) != tuple(Fraction(1 if c == dim - 1 else 0) for c in range(dim)):
        return Report("xsx0_zsl", False, checked, {"sum_m_l": s.to_json()})
    return Report("xsx0_zsl", True, checked + 2)


def verify_mlnl(basis: ChartBasis, s: Shuffle) -> Report:
    """<m_l, n_l'> = delta, <m_l, n_{i,k_i}> = 0 and <m_{i,k_i}, n_l> = [l >= l_i + 1]."""
    sc = ShuffleChart(basis, s)
    d = basis.d
    checked = 0
    for l in range(1, d + 2):
        for q in range(1, d + 2):
            if dot(sc.m_l(l), sc.n_l(q)) != (1 if l == q else 0):
                return Report("mlnl", False, checked, {"l": l, "l'": q})
            checked += 1
        for i in range(1, basis.r + 1):
            if dot(sc.m_l(l), basis.n[i][-1]) != 0:
                return Report("mlnl", False, checked, {"l": l, "i": i})
            want = 1 if l >= sc.l_i(i) + 1 else 0
            if dot(basis.m[i][-1], sc.n_l(l)) != want:
                return Report("mlnl", False, checked, {"minl": [i, l]})
            checked += 2
    return Report("mlnl", True, checked)


def verify_covering(basis: ChartBasis) -> Report:
    """Every chart U_{S,l-1} extends in every direction i in I(l-1) inside S_{C,1} or S_{C,2}."""
    all_s = shuffles_first_kind(basis) + shuffles_second_kind(basis)
    prefixes: dict[tuple, set] = {}
    for s in all_s:
        for l in range(1, s.pbar + 2):
            prefixes.setdefault(s.moves[: l - 1], set()).add(s.moves[l - 1])
    checked = 0
    for s in all_s:
        sc = ShuffleChart(basis, s)
        for l in range(1, sc.lbar + 1):
            nxt = prefixes.get(s.moves[: l - 1], set())
            for i in sc.I(l - 1):
                if i not in nxt:
                    return Report("covering", False, checked, {"shuffle": s.to_json(), "l": l, "i": i})
                checked += 1
    return Report("covering", True, checked, details={"first_kind": len(shuffles_first_kind(basis)), "second_kind": len(all_s) - len(shuffles_first_kind(basis))})


# ---------------------------------------------------------------------------
# divisorial points


def divisorial_valuation(basis: ChartBasis, s: Shuffle, l: int) -> Vec:
    """The element of N + R given by m -> v_D(z^m) for D the l-th divisor of the chart.

    On U_S the divisor is cut out by z_S^{exc(l)}; the coordinates z_S^{i,k_i}
    carry the product of exceptional divisors l' >= l_i + 1 through the chart
    equations, and every other coordinate is a unit along D.
    """
    sc = ShuffleChart(basis, s)
    if not sc.first_kind:
        raise ChartError("divisorial points are read off charts of the chart degree")
    vs = {a: 0 for a in basis.vars}
    vs[sc.exceptional(l)] = 1
    for i in range(1, basis.r + 1):
        vs[(i, basis.k[i])] = 1 if l >= sc.l_i(i) + 1 else 0
    fwd = composed_map(basis, s, sc.lbar)
    out = None
    for b in basis.vars:
        val0 = sum(c * vs[a] for c, a in zip(fwd.row(b), basis.vars))
        term = tuple(val0 * x for x in basis.n_of(b))
        out = term if out is None else tuple(x + y for x, y in zip(out, term))
    return vec(out)


def divisorial_point(basis: ChartBasis, s: Shuffle, l: int) -> Vec:
    val = divisorial_valuation(basis, s, l)
    if val[-1] != 1:
        raise ChartError("the divisorial valuation is not normalized by v(t) = 1")
    return val[:-1]


@dataclass(frozen=True)
class ComponentLabel:
    """(nu_D, beta*_1(mu_D), ..., beta*_r(mu_D)) of a component of the special fiber, as points of N."""

    points: tuple

    @property
    def nu(self) -> Vec:
        return self.points[0]

    @property
    def betas(self) -> tuple:
        return self.points[1:]

    def position(self, orders: Sequence[Sequence]) -> tuple:
        """Rank of the label in the lexicographic order built from the given orders."""
        return tuple([vec(p) for p in o].index(x) for o, x in zip(orders, self.points))

    def to_json(self) -> dict:
        return {"nu": fmt_vec(self.nu), "betas": [fmt_vec(b) for b in self.betas]}


def component_label(basis: ChartBasis, s: Shuffle, l: int) -> ComponentLabel:
    """The component D_{S,l}: the basis vectors n_{i, j_i(l-1)} with the last coordinate dropped."""
    sc = ShuffleChart(basis, s)
    return ComponentLabel(tuple(basis.n[i][sc.j(i, l - 1)][:-1] for i in range(len(basis.k))))


def chart_components(basis: ChartBasis) -> dict:
    """ComponentLabel -> one (shuffle, l) of S_{C,1} on which the component appears."""
    out: dict = {}
    for s in shuffles_first_kind(basis):
        for l in range(1, basis.d + 2):
            out.setdefault(component_label(basis, s, l), (s, l))
    return out


def divisorial_trop(basis: ChartBasis, label: ComponentLabel) -> Vec:
    """trop of the divisorial point of D, read off a chart (S, l) on which D appears."""
    where = chart_components(basis).get(label)
    if where is None:
        raise ChartError(f"component {label.to_json()} does not meet the chart of cell {basis.cell.index}")
    return divisorial_point(basis, *where)


def label_point(label: ComponentLabel) -> Vec:
    """beta_bar(mu_D) + nu_D: the sum of the label points."""
    return vsum(label.points)


# ---------------------------------------------------------------------------
# series points


def _random_coeff(rng: random.Random) -> Fraction:
    return Fraction(rng.choice([-1, 1]) * rng.randint(1, 7), rng.randint(1, 3))


def _expand_roots(lead: Fraction, roots: Sequence[Fraction]) -> list[Fraction]:
    """Coefficients (constant first) of lead * prod (s - r)."""
    c = [lead]
    for r in roots:
        c = [-r * c[0]] + [c[j - 1] - r * c[j] for j in range(1, len(c))] + [c[-1]]
    return c


def _split_edge_polynomials(exps: Sequence[Vec], coeff: dict, rng: random.Random) -> None:
    """Overwrite the coefficients inside each edge of conv(exps) so that the edge
    polynomial c_b * prod (s - r_j) has distinct nonzero rational roots; the
    endpoint coefficients are kept."""
    if len(exps) < 3:
        return
    P = hull(exps)
    if P.dim < 1:
        return
    for face in P.faces:
        if P.face_dim(face) != 1:
            continue
        a, b = P.face_vertices(face)
        e = primitive(sub(b, a))
        steps = max(abs(x) for x in sub(b, a)) // max(abs(x) for x in e)
        if steps < 2:
            continue
        pts = [tuple(a[k] + j * e[k] for k in range(len(a))) for j in range(steps + 1)]
        if any(p not in coeff for p in pts):
            continue
        ca, cb = coeff[pts[0]], coeff[pts[-1]]
        while True:
            roots = [_random_coeff(rng) for _ in range(steps - 1)]
            last = (-1) ** steps * ca / (cb * prod(roots))
            roots.append(last)
            c = _expand_roots(cb, roots)
            if len(set(roots)) == steps and all(c):
                break
        for p, x in zip(pts[1:-1], c[1:-1]):
            coeff[p] = x


@dataclass(frozen=True)
class TorusSystem:
    """F_i(z) = sum_m c_{i,m} t^{h(m)} z^m with c_{i,0} = 1 and seeded coefficients."""

    terms: tuple  # per i: ((m, h(m), c), ...)

    @staticmethod
    def of(polys, seed: int, split_edges: bool = True) -> "TorusSystem":
        """Seeded coefficients; with ``split_edges`` every edge polynomial of every
        Newton polytope has simple nonzero rational roots, so K-points over the
        tropical pieces dual to those edges have rational leading coefficients."""
        rng = random.Random(seed)
        out = []
        for f in polys:
            coeff = {}
            for m, _ in f.terms:
                coeff[m] = Fraction(1) if not any(m) else _random_coeff(rng)
            if split_edges:
                _split_edge_polynomials([m for m, _ in f.terms], coeff, rng)
            out.append(tuple((m, h, coeff[m]) for m, h in f.terms))
        return TorusSystem(tuple(out))

    def residuals(self, coords: Sequence[Puiseux]) -> list[Puiseux]:
        out = []
        for row in self.terms:
            hs = {m: h for m, h, _ in row}
            out.append(evaluate_laurent([(m, c) for m, _, c in row], coords, lambda m: hs[m]))
        return out


@dataclass(frozen=True)
class SeriesPoint:
    coords: tuple  # Puiseux series z_k
    trunc: int
    residual_valuations: tuple
    attempts: int = 1

    @cached_property
    def trop(self) -> Vec:
        vals = [c.valuation() for c in self.coords]
        if any(v is None for v in vals):
            raise SeriesError("a coordinate vanishes to the known precision")
        return tuple(vals)

    def monomial_valuation(self, m: Sequence) -> Fraction:
        """v(z^m' t^k) for m = (m', k) in M + Z, from the coordinate valuations."""
        m = vec(m)
        return dot(m[:-1], self.trop) + m[-1]

    @staticmethod
    def from_json(obj: dict) -> "SeriesPoint":
        n = len(obj["coords"])
        coords = tuple(Puiseux.from_json(obj["coords"][f"z{k}"], Q(obj["exact_below"][f"z{k}"])) for k in range(n))
        res = tuple(None if v is None else Q(v) for v in obj["residual_valuations"])
        return SeriesPoint(coords, obj["trunc"], res, obj.get("attempts", 1))

    def certificate(self) -> list[dict]:
        """Per coordinate: valuation, nonzero leading coefficient, and the order up to which it is exact."""
        out = []
        for c in self.coords:
            v = c.valuation()
            if v is None or v >= self.trunc:
                raise SeriesError("coordinate valuation not below the truncation order")
            out.append({"valuation": v, "leading": c.leading(), "exact_below": c.bound})
        return out

    def to_json(self) -> dict:
        return {
            "trunc": self.trunc,
            "coords": {f"z{k}": c.to_json() for k, c in enumerate(self.coords)},
            "exact_below": {f"z{k}": fmt(c.bound) for k, c in enumerate(self.coords)},
            "trop": fmt_vec(self.trop),
            "residual_valuations": [fmt(v) if v is not None else None for v in self.residual_valuations],
            "attempts": self.attempts,
        }


class SingularJacobian(SeriesError):
    pass


def _segment_along(pts: Sequence[Vec], k: int) -> bool:
    """Are the points collinear along a primitive direction with k-th entry +-1?"""
    if len(pts) < 2:
        return False
    base = pts[0]
    e = primitive(sub(pts[1], base))
    if abs(e[k]) != 1:
        return False
    for p in pts[2:]:
        d = sub(p, base)
        t = d[k] / e[k]
        if any(x != t * y for x, y in zip(d, e)):
            return False
    return True


def _solvable_coordinates(att: Sequence[Sequence[Vec]], n: int) -> list[tuple] | None:
    """Coordinates k_i such that the i-th initial form is univariate in u_{k_i} with
    rational roots available (affine-linear, or supported on a segment along which
    the edge polynomial splits) and the other initial forms are monomial in it."""
    r = len(att)
    options = []
    for i in range(r):
        opts = []
        for k in range(n):
            vals = {m[k] for m in att[i]}
            linear = len(vals) == 2 and max(vals) - min(vals) == 1
            if not (linear or _segment_along(att[i], k)):
                continue
            if all(len({m[k] for m in att[q]}) == 1 for q in range(r) if q != i):
                opts.append(k)
        options.append(opts)
    for pick in itertools.product(*options):
        if len(set(pick)) == r:
            return list(pick)
    return None


def _simple_rational_roots(coeffs: Sequence[Fraction]) -> list[Fraction]:
    """Nonzero simple roots in Q of sum_j coeffs[j] s^j."""
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(coeffs)], x, domain="QQ")
    out = []
    for root, mult in poly.ground_roots().items():
        if mult == 1 and root != 0:
            out.append(Fraction(int(root.p), int(root.q)))
    return sorted(out)


class NoInitialSolution(SeriesError):
    pass


def random_draw(rng: random.Random, n: int) -> list[Fraction]:
    return [Fraction(rng.choice([-1, 1]) * rng.randint(1, 5), rng.randint(1, 4)) for _ in range(n)]


def _initial_solution(att, coeffs, n: int, u: list):
    """Solve the initial system for the coordinates k_i, given the others in ``u``.

    The drawn value u[k_i] only picks which rational root is used. Returns None for a
    degenerate draw (resample) and raises NoInitialSolution for a structural failure.
    """
    ks = _solvable_coordinates(att, n)
    if ks is None:
        raise NoInitialSolution("the initial system is not univariate in any coordinate choice")
    u = list(u)
    if any(u[c] == 0 for c in range(n) if c not in ks):
        return None
    for i, k in enumerate(ks):
        lo = min(m[k] for m in att[i])
        hi = max(m[k] for m in att[i])
        poly = [Fraction(0)] * (int(hi - lo) + 1)
        for m in att[i]:
            val = coeffs[i][m]
            for c in range(n):
                if c != k and c not in ks:
                    val *= u[c] ** int(m[c])
            poly[int(m[k] - lo)] += val
        if poly[0] == 0 or poly[-1] == 0:
            return None
        if len(poly) == 2:
            u[k] = -poly[0] / poly[1]
            continue
        roots = _simple_rational_roots(poly)
        if not roots:
            raise NoInitialSolution("the univariate initial form has no simple rational root")
        u[k] = roots[abs(u[k].numerator) % len(roots)]
    return ks, u


def _solve_series(jac: list[list[PowerSeries]], rhs: list[PowerSeries]) -> list[PowerSeries]:
    """Gaussian elimination over power series whose constant-term matrix is invertible."""
    r = len(rhs)
    a = [list(row) + [rhs[i]] for i, row in enumerate(jac)]
    for c in range(r):
        piv = next((i for i in range(c, r) if a[i][c].c[0] != 0), None)
        if piv is None:
            raise SingularJacobian("singular Jacobian at the initial solution")
        a[c], a[piv] = a[piv], a[c]
        inv = a[c][c].inverse()
        a[c] = [x * inv for x in a[c]]
        for i in range(r):
            if i != c and any(a[i][c].c):
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [a[i][r] for i in range(r)]


def _system_and_jacobian(groups, us, p: int):
    """Values and partial derivatives of G_i = sum_alpha P_alpha u^alpha modulo s^p."""
    r = len(us)
    pw: dict = {}

    def power(q, e):
        if (q, e) not in pw:
            pw[(q, e)] = us[q] ** e
        return pw[(q, e)]

    gs, jac = [], []
    for g in groups:
        val = PowerSeries.const(0, p)
        row = [PowerSeries.const(0, p) for _ in range(r)]
        for alpha, coef in g.items():
            coef = coef.truncate(p)
            mono = coef
            for q, e in enumerate(alpha):
                if e:
                    mono = mono * power(q, e)
            val = val + mono
            for q, e in enumerate(alpha):
                if e:
                    part = coef.scale(e)
                    for q2, e2 in enumerate(alpha):
                        ee = e2 - 1 if q2 == q else e2
                        if ee:
                            part = part * power(q2, ee)
                    row[q] = row[q] + part
        gs.append(val)
        jac.append(row)
    return gs, jac


def lift_point(system: TorusSystem, polys, w: Sequence, start: Sequence, trunc: int) -> SeriesPoint:
    """A K-point with tropicalization w: solve the initial system, then Newton in t^(1/D)."""
    w = vec(w)
    n = len(w)
    att, fvals = [], []
    for f in polys:
        att.append(f.attaining(w))
        fvals.append(f(w))
    coeffs = [{m: c for m, _, c in row} for row in system.terms]
    init = _initial_solution(att, coeffs, n, start)
    if init is None:
        raise SingularJacobian("degenerate initial coordinates")
    ks, u0 = init
    den = 1
    for i, row in enumerate(system.terms):
        for m, h, _ in row:
            den = lcm(den, (h + dot(m, w) - fvals[i]).denominator)
    for x in w:
        den = lcm(den, x.denominator)
    fmin = min(fvals)
    # G_i = 0 mod s^prec gives v(F_i) >= f_i(w) + prec/den >= trunc
    prec = max(math.ceil(den * (trunc - fmin)), 1) + 1
    # group G_i = sum_alpha P_{i,alpha}(s) u_K^alpha
    groups = []
    for i, row in enumerate(system.terms):
        g: dict = {}
        for m, h, c in row:
            e = (h + dot(m, w) - fvals[i]) * den
            if e >= prec:
                continue
            coef = c
            for k in range(n):
                if k not in ks:
                    coef *= u0[k] ** int(m[k])
            alpha = tuple(int(m[k]) for k in ks)
            g[alpha] = g.get(alpha, PowerSeries.const(0, prec)) + PowerSeries.monomial(coef, int(e), prec)
        groups.append(g)
    us = [PowerSeries.const(u0[k], 1) for k in ks]
    # quadratic convergence: double the working precision at each step
    p = 1
    while True:
        p = min(2 * p, prec)
        us = [u.truncate(p) for u in us]
        gs, jac = _system_and_jacobian(groups, us, p)
        if p == prec and all(v.valuation() is None for v in gs):
            break
        us = [a - b for a, b in zip(us, _solve_series(jac, gs))]
        if p == prec:
            gs, _ = _system_and_jacobian(groups, us, p)
            if any(v.valuation() is not None for v in gs):
                raise SeriesError("Newton iteration did not converge")
            break
    coords = []
    for k in range(n):
        if k in ks:
            ps = us[ks.index(k)]
            coords.append(Puiseux.from_power_series(w[k], den, ps))
        else:
            coords.append(Puiseux(((w[k], u0[k]),), Fraction(10**9)))
    res = system.residuals(coords)
    vals = []
    for f in res:
        if f.terms and f.terms[0][0] < trunc:
            raise SeriesError("residual has valuation below the truncation order")
        if f.bound < trunc:
            raise SeriesError("residual not known up to the truncation order")
        vals.append(f.valuation())
    pt = SeriesPoint(tuple(coords), trunc, tuple(vals))
    if pt.trop != w:
        raise SeriesError("the lifted point does not tropicalize to w")
    pt.certificate()
    return pt


def hensel_sample(
    system: TorusSystem,
    polys,
    w: Sequence,
    seed: int,
    trunc: int = 12,
    attempts: int = 6,
    draw=random_draw,
) -> SeriesPoint:
    """lift_point with resampling of the free initial coordinates; draw(rng, n) proposes them."""
    if trunc < 4:
        raise ValueError("truncation order must be at least 4")
    rng = random.Random(seed)
    last = None
    for a in range(1, attempts + 1):
        try:
            p = lift_point(system, polys, w, draw(rng, len(w)), trunc)
            return SeriesPoint(p.coords, p.trunc, p.residual_valuations, a)
        except SingularJacobian as exc:
            # a bad draw of the free coordinates; a structural failure is not retried
            last = exc
    raise SingularJacobian(f"no usable initial solution after {attempts} attempts: {last}")


# ---------------------------------------------------------------------------
# the commutation check


@dataclass
class ValuationLab:
    """Charts around the distinguished vertex v of B."""

    B: DualComplex
    vertex: Cell
    orders: list

    @cached_property
    def charts(self) -> list[ChartBasis]:
        out = []
        for s in self.B.maximal_cells:
            if self.vertex.index in self.B.faces_of[s.index]:
                out.append(chart_basis(s, self.orders, self.B.rank))
        return out

    @cached_property
    def all_charts(self) -> list[ChartBasis]:
        return [chart_basis(s, self.orders, self.B.rank) for s in self.B.maximal_cells]

    def retraction(self, p: SeriesPoint) -> tuple[Vec, list] | None:
        """sum_l v(z_S^{exc(l)}) (n_l - (0,1)) over every chart (C, S) whose region contains p."""
        found = []
        for basis in self.charts:
            val0 = {b: p.monomial_valuation(basis.m_of(b)) for b in basis.vars}
            for s in shuffles_first_kind(basis):
                sc = ShuffleChart(basis, s)
                inv = composed_map(basis, s, sc.lbar).inverse()

                def v_s(a):
                    return sum(c * val0[b] for c, b in zip(inv.row(a), basis.vars))

                d = basis.d
                rs = [v_s(sc.exceptional(l)) for l in range(1, d + 2)]
                if not (rs[-1] > 0 and all(x >= 0 for x in rs[:-1])):
                    continue
                if any(v_s((i, basis.k[i])) < 0 for i in range(1, basis.r + 1)):
                    continue
                if sum(rs) != 1:
                    raise ChartError("chart valuations do not add up to v(t) = 1")
                pt = vsum([tuple(x * c for c in sc.n_l(l)) for x, l in zip(rs, range(1, d + 2))])
                pt = sub(pt, tuple(Fraction(1 if c == len(pt) - 1 else 0) for c in range(len(pt))))
                found.append((pt[:-1], basis.cell.index, s.blocks, rs))
        if not found:
            return None
        return found[0][0], found


def candidate_points(
    atlas: ContractionAtlas,
    vertex: Cell,
    polys,
    rng: random.Random,
    count: int,
    dens: Sequence[int] = (2, 3, 4),
    radius: int = 1,
) -> list[Vec]:
    """Grid points w near v with delta(w) in the open star of v, w in trop(X) and a
    linear initial system, drawn without replacement in a seeded order."""
    v = atlas.B.vertex_point(vertex)
    n = len(v)
    out: list[Vec] = []
    seen = set()
    for den in dens:
        steps = range(-radius * den, radius * den + 1)
        grid = [tuple(a + Fraction(s, den) for a, s in zip(v, off)) for off in itertools.product(steps, repeat=n)]
        rng.shuffle(grid)
        for x in grid:
            if x in seen or lcm(*(q.denominator for q in x)) != den:
                continue
            seen.add(x)
            if not initial_system_solvable(polys, x) or not atlas.X.contains_point(x):
                continue
            if atlas.section(vertex.index, x) is None:
                continue
            out.append(x)
    rng.shuffle(out)
    return out[:count]


@dataclass
class SampleSet:
    points: list
    candidates: list
    failures: list

    @property
    def distinct_trop(self) -> int:
        return len({p.trop for p in self.points})

    def summary(self) -> dict:
        return {
            "samples": len(self.points),
            "distinct_trop": self.distinct_trop,
            "candidates": len(self.candidates),
            "failures": len(self.failures),
            "resampled": sum(1 for p in self.points if p.attempts > 1),
        }


def _lift_job(args):
    system, polys, w, seed, trunc = args
    try:
        return hensel_sample(system, polys, w, seed, trunc)
    except SeriesError as exc:
        return exc


def sample_series_points(
    atlas: ContractionAtlas,
    vertex: Cell,
    polys,
    system: TorusSystem,
    count: int,
    seed: int = 0,
    trunc: int = 12,
    workers: int = 1,
) -> SampleSet:
    """count K-points near v; tropical candidates are reused with fresh free coordinates.

    Every sample has its own seed, so the result does not depend on ``workers``.
    """
    rng = random.Random(seed)
    cands = candidate_points(atlas, vertex, polys, rng, 10**6)
    if not cands:
        raise SeriesError("no tropical candidates near the vertex")
    points, failures = [], []
    q = 0
    while len(points) < count and q < 4 * count:
        batch = range(q, q + count - len(points))
        jobs = [(system, polys, cands[k % len(cands)], seed * 100003 + k, trunc) for k in batch]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(_lift_job, jobs))
        else:
            results = [_lift_job(j) for j in jobs]
        for job, res in zip(jobs, results):
            if isinstance(res, SeriesError):
                failures.append((fmt_vec(job[2]), str(res)))
            else:
                points.append(res)
        q += len(jobs)
    return SampleSet(points, cands, failures)


def verify_commutation(
    lab: ValuationLab,
    atlas: ContractionAtlas,
    samples: Sequence[SeriesPoint],
) -> Report:
    """delta(trop p) = t_v(pi_{C_v}(trop p)) = retraction formula, exactly."""
    checked, skipped, outside = 0, 0, 0
    half = Fraction(lab_trunc(samples), 2)
    for p in samples:
        w = p.trop
        if not atlas.X.contains_point(w):
            return Report("commutation", False, checked, {"not_in_tropX": fmt_vec(w)})
        got = lab.retraction(p)
        if got is None:
            skipped += 1
            continue
        ret, charts = got
        used = [abs(x) for x in w] + [abs(x) for _, _, _, rs in charts for x in rs]
        if max(used) >= half:
            skipped += 1
            continue
        if any(c[0] != ret for c in charts):
            return Report("commutation", False, checked, {"charts_disagree": fmt_vec(w)})
        dw = atlas.delta(TropPoint.finite(w), check_membership=False)
        tv = atlas.section(lab.vertex.index, w)
        if tv is None:
            outside += 1
        if dw != ret or (tv is not None and tv != ret):
            return Report(
                "commutation",
                False,
                checked,
                {"trop": fmt_vec(w), "delta": fmt_vec(dw), "t_v": fmt_vec(tv) if tv else None, "retraction": fmt_vec(ret)},
            )
        checked += 1
    return Report("commutation", True, checked, details={"skipped": skipped, "outside_star": outside})


def lab_trunc(samples) -> int:
    return min((p.trunc for p in samples), default=12)


def initial_system_solvable(polys, w: Sequence) -> bool:
    """Whether lift_point can start at w (its initial system is linear in some coordinates)."""
    w = vec(w)
    return _solvable_coordinates([f.attaining(w) for f in polys], len(w)) is not None


# ---------------------------------------------------------------------------
# batteries


def verify_chart_identities(charts: Sequence[ChartBasis]) -> Report:
    """Closed-form vs iterated substitutions, the z_S identities, dualities and the covering rule."""
    checked = 0
    for basis in charts:
        for s in shuffles_first_kind(basis):
            for rep in (verify_composed(basis, s), verify_xsx0_zsl(basis, s), verify_mlnl(basis, s)):
                if not rep.passed:
                    return Report("chart_identities", False, checked, {"cell": basis.cell.index, rep.name: rep.witness})
                checked += rep.checked
        for s in shuffles_second_kind(basis):
            rep = verify_composed(basis, s)
            if not rep.passed:
                return Report("chart_identities", False, checked, {"cell": basis.cell.index, rep.name: rep.witness})
            checked += rep.checked
        rep = verify_covering(basis)
        if not rep.passed:
            return Report("chart_identities", False, checked, {"cell": basis.cell.index, "covering": rep.witness})
        checked += rep.checked
    return Report("chart_identities", True, checked, details={"charts": len(charts)})


def verify_divisorial(B: DualComplex, charts: Sequence[ChartBasis]) -> Report:
    """Every component read off every chart it meets tropicalizes to its vertex of B."""
    by_label = {ComponentLabel(B.label(v)): v for v in B.vertices}
    seen = set()
    checked = 0
    for basis in charts:
        for label, (s, l) in chart_components(basis).items():
            v = by_label.get(label)
            x = divisorial_point(basis, s, l)
            sc = ShuffleChart(basis, s)
            formula = sc.n_l(l)[:-1]
            if v is None or x != B.vertex_point(v) or x != formula or x != label_point(label):
                return Report(
                    "divisorial",
                    False,
                    checked,
                    {"cell": basis.cell.index, "label": label.to_json(), "point": fmt_vec(x)},
                )
            seen.add(v.index)
            checked += 1
    if len(seen) != len(B.vertices):
        missing = [v.index for v in B.vertices if v.index not in seen]
        return Report("divisorial", False, checked, {"components_not_reached": missing})
    return Report("divisorial", True, checked, details={"components": len(seen)})
