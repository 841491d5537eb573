import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from tropic.polyhedra import hull
from tropic.rational import primitive, sub, vec
from tropic.tropical import TropPoint
from tropic.valuation import (
    ChartError,
    ComponentLabel,
    MonomialMap,
    NoInitialSolution,
    SeriesPoint,
    ShuffleChart,
    SingularJacobian,
    TorusSystem,
    ValuationLab,
    _expand_roots,
    blowup_map,
    candidate_points,
    component_label,
    composed_map,
    divisorial_trop,
    hensel_sample,
    iterated_map,
    label_point,
    random_draw,
    sample_series_points,
    shuffles_first_kind,
    shuffles_second_kind,
    verify_chart_identities,
    verify_commutation,
    verify_divisorial,
)


@pytest.fixture(scope="module")
def lab(quartic):
    B = quartic.B
    v = quartic.distinguished_vertex
    return ValuationLab(B, v, B.default_orders(v))


@pytest.fixture(scope="module")
def system(quartic, quartic_X):
    return TorusSystem.of(quartic_X.polys, quartic.seed)


def truncated_value(row, coords, trunc):
    """F(z) below t^trunc by plain dictionary arithmetic, independent of the series module."""

    def mul(a, b, cut):
        out = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                if e1 + e2 < cut:
                    out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return out

    def inverse(z, rel):
        # z = c t^v (1 + y) with v(y) > 0; 1/z = c^-1 t^-v sum (-y)^k, kept below t^(rel - v)
        v = min(z)
        c = z[v]
        y = {e - v: x / c for e, x in z.items() if e != v and e - v < rel}
        out, term = {Fraction(0): Fraction(1)}, {Fraction(0): Fraction(1)}
        while True:
            term = {e: -x for e, x in mul(term, y, rel).items()}
            if not term:
                break
            for e, x in term.items():
                out[e] = out.get(e, 0) + x
        return {e - v: x / c for e, x in out.items()}

    total = {}
    for m, h, c in row:
        factors = []
        for k, e in enumerate(m):
            factors += [(k, e > 0)] * abs(int(e))
        vals = [min(coords[k]) if pos else -min(coords[k]) for k, pos in factors]
        # relative precision every factor needs for the product to be right below trunc
        rel = trunc - Fraction(h) - sum(vals)
        if rel <= 0:
            continue
        term, v_acc = {Fraction(h): Fraction(c)}, Fraction(h)
        for (k, pos), v in zip(factors, vals):
            base = {e: x for e, x in coords[k].items() if e - v < rel} if pos else inverse(coords[k], rel)
            v_acc += v
            term = mul(term, base, v_acc + rel)
        for e, x in term.items():
            total[e] = total.get(e, 0) + x
    return {e: x for e, x in total.items() if x and e < trunc}


def test_chart_bases_are_dual(lab):
    for basis in lab.all_charts:
        flat_n = [basis.n_of(a) for a in basis.vars]
        flat_m = [basis.m_of(a) for a in basis.vars]
        prod = sympy.Matrix(flat_m) * sympy.Matrix(flat_n).T
        assert prod == sympy.eye(len(flat_n))
        assert basis.d == 2 and sum(basis.k) == 2


def test_closed_form_matches_iterated_blowups(lab):
    for basis in lab.all_charts:
        for s in shuffles_first_kind(basis) + shuffles_second_kind(basis):
            sc = ShuffleChart(basis, s)
            for l in range(1, sc.lbar + 1):
                assert composed_map(basis, s, l) == iterated_map(basis, s, l)


def test_blowup_maps_are_unimodular(lab):
    basis = lab.charts[0]
    s = shuffles_first_kind(basis)[0]
    for l in range(1, ShuffleChart(basis, s).lbar + 1):
        pi = blowup_map(basis, s, l)
        assert pi.then(pi.inverse()) == MonomialMap.identity(basis.vars)


def test_non_unimodular_map_has_no_inverse():
    with pytest.raises(ChartError):
        MonomialMap(("a", "b"), ((1, 1), (1, -1))).inverse()


def test_chart_identities_on_quartic_and_k323(lab, k323):
    assert verify_chart_identities(lab.all_charts).passed
    B = k323.B
    v = k323.distinguished_vertex
    rep = verify_chart_identities(ValuationLab(B, v, B.default_orders(v)).all_charts)
    assert rep.passed


def test_permuted_orders_keep_the_identities(quartic):
    B = quartic.B
    for v in B.vertices:
        lab = ValuationLab(B, v, B.default_orders(v))
        assert verify_chart_identities(lab.all_charts).passed
        assert verify_divisorial(B, lab.all_charts).passed


def test_divisorial_points_are_the_vertices(quartic, lab):
    B = quartic.B
    rep = verify_divisorial(B, lab.all_charts)
    assert rep.passed and rep.details["components"] == 4
    for basis in lab.charts:
        for v in B.vertices:
            label = ComponentLabel(B.label(v))
            if v.index in B.faces_of[basis.cell.index]:
                assert divisorial_trop(basis, label) == B.vertex_point(v)
                assert label_point(label) == B.vertex_point(v)
            else:
                with pytest.raises(ChartError):
                    divisorial_trop(basis, label)


def test_component_labels_follow_the_walk(lab):
    basis = lab.charts[0]
    for s in shuffles_first_kind(basis):
        labels = [component_label(basis, s, l) for l in range(1, basis.d + 2)]
        assert len(set(labels)) == len(labels)


def test_split_edge_polynomials(quartic_X, system):
    (row,) = system.terms
    coeff = {m: c for m, _, c in row}
    P = hull(list(coeff))
    edges = 0
    x = sympy.Symbol("x")
    for f in P.faces:
        if P.face_dim(f) != 1:
            continue
        a, b = P.face_vertices(f)
        e = primitive(sub(b, a))
        pts = [tuple(a[k] + j * e[k] for k in range(3)) for j in range(5)]
        poly = sympy.Poly([sympy.Rational(str(coeff[p])) for p in reversed(pts)], x)
        roots = poly.ground_roots()
        assert sum(roots.values()) == 4 and all(m == 1 for m in roots.values())
        edges += 1
    assert edges == 6
    assert coeff[vec((0, 0, 0))] == 1


@settings(max_examples=50, deadline=None)
@given(st.fractions(-5, 5, max_denominator=5).filter(bool),
       st.lists(st.fractions(-5, 5, max_denominator=5), min_size=1, max_size=4))
def test_expand_roots(lead, roots):
    c = _expand_roots(lead, roots)
    assert c[-1] == lead
    for r in roots:
        assert sum(x * r**j for j, x in enumerate(c)) == 0


def test_hensel_sample_on_B(quartic, quartic_X, quartic_atlas, lab, system):
    B = quartic.B
    w = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    assert B.in_B(w)
    p = hensel_sample(system, quartic_X.polys, w, seed=3)
    assert p.trop == w
    assert all(v is None or v >= 12 for v in p.residual_valuations)
    ret, _ = lab.retraction(p)
    assert ret == w
    assert quartic_atlas.delta(TropPoint.finite(w)) == w


def test_hensel_sample_in_the_thickening(quartic, quartic_X, quartic_atlas, lab, system):
    B = quartic.B
    w = (Fraction(3, 2), Fraction(1, 4), Fraction(0))
    assert not B.in_B(w)
    p = hensel_sample(system, quartic_X.polys, w, seed=5)
    assert p.trop == w
    ret, _ = lab.retraction(p)
    assert ret == quartic_atlas.delta(TropPoint.finite(w))
    assert ret != w


def test_residuals_by_independent_evaluation(quartic_X, system):
    w = (Fraction(3, 2), Fraction(1, 4), Fraction(0))
    p = hensel_sample(system, quartic_X.polys, w, seed=5)
    coords = [{e: Fraction(int(c.numerator), int(c.denominator)) for e, c in z.terms} for z in p.coords]
    (row,) = system.terms
    assert truncated_value(row, coords, 12) == {}
    # and the check is not vacuous: a perturbed coordinate leaves a residual
    coords[0][min(coords[0])] += 1
    assert truncated_value(row, coords, 12) != {}


def test_degenerate_draw_is_resampled(quartic_X, system):
    w = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    calls = []

    def draw(rng, n):
        calls.append(n)
        if len(calls) == 1:
            return [Fraction(0)] * n
        return random_draw(rng, n)

    p = hensel_sample(system, quartic_X.polys, w, seed=3, draw=draw)
    assert p.attempts == 2
    with pytest.raises(SingularJacobian):
        hensel_sample(system, quartic_X.polys, w, seed=3, draw=lambda rng, n: [Fraction(0)] * n)


def test_nonlinear_initial_system_is_rejected(quartic_X, system):
    # the whole facet attains the minimum: a plane quartic initial form
    with pytest.raises(NoInitialSolution):
        hensel_sample(system, quartic_X.polys, (Fraction(3, 2), 0, 0), seed=1)


def test_truncation_order_must_be_sensible(quartic_X, system):
    with pytest.raises(ValueError):
        hensel_sample(system, quartic_X.polys, (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), seed=1, trunc=3)


def test_series_point_json_round_trip(quartic_X, system):
    p = hensel_sample(system, quartic_X.polys, (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), seed=2)
    back = SeriesPoint.from_json(p.to_json())
    assert back.coords == p.coords
    assert back.trop == p.trop
    assert back.to_json() == p.to_json()


def test_candidates_and_small_commutation(quartic, quartic_X, quartic_atlas, lab, system):
    v = quartic.distinguished_vertex
    cands = candidate_points(quartic_atlas, v, quartic_X.polys, random.Random(0), 10**6)
    assert any(not quartic.B.in_B(w) for w in cands)
    ss = sample_series_points(quartic_atlas, v, quartic_X.polys, system, 6, seed=11)
    assert len(ss.points) == 6 and not ss.failures
    rep = verify_commutation(lab, quartic_atlas, ss.points)
    assert rep.passed and rep.checked == 6


def test_sampling_is_deterministic(quartic, quartic_X, quartic_atlas, system):
    v = quartic.distinguished_vertex
    a = sample_series_points(quartic_atlas, v, quartic_X.polys, system, 3, seed=4)
    b = sample_series_points(quartic_atlas, v, quartic_X.polys, system, 3, seed=4)
    assert [p.to_json() for p in a.points] == [p.to_json() for p in b.points]
    # worker processes do not change the result
    c = sample_series_points(quartic_atlas, v, quartic_X.polys, system, 3, seed=4, workers=2)
    assert [p.to_json() for p in c.points] == [p.to_json() for p in a.points]

