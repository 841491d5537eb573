import itertools

from tropic.fans import (
    Fan,
    PLFunction,
    build_sigma_tilde,
    check_conditions,
    fan_polytope,
    is_refinement,
    is_unimodular,
    newton_polytope,
    normal_fan,
    support_function,
)
from tropic.nef import validate_nef_partition
from tropic.polyhedra import GeometryError, RatCone, hull, minkowski_sum, point
from tropic.rational import dot, vec

import pytest

QUARTIC = [(3, -1, -1), (-1, 3, -1), (-1, -1, 3), (-1, -1, -1)]
DSTAR = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, -1, -1)]


def brute_normal_cones(p):
    """Normal cone of each vertex: all u with min over p of <u,.> attained there (tested on a grid)."""
    grid = [u for u in itertools.product(range(-2, 3), repeat=p.ambient_dim) if any(u)]
    cones = {}
    for v in p.vertices:
        cones[v] = {u for u in grid if all(dot(u, v) <= dot(u, w) for w in p.vertices)}
    return cones


def test_normal_fan_of_quartic_is_p3():
    f = normal_fan(hull(QUARTIC, lattice="M"))
    assert set(f.rays) == {vec(r) for r in DSTAR}
    assert len(f.maximal) == 4
    assert f.is_complete()
    assert is_unimodular(f)


def test_normal_fan_agrees_with_brute_force():
    p = hull(QUARTIC, lattice="M")
    f = normal_fan(p)
    for v, grid_pts in brute_normal_cones(p).items():
        cone = next(c for c in f.maximal if all(dot(r, v) == p.min_pairing(r) for r in c.rays))
        assert {u for u in grid_pts} == {u for u in itertools.product(range(-2, 3), repeat=3) if any(u) and cone.contains(u)}


def test_normal_fan_of_square_is_quadrants():
    f = normal_fan(hull([(0, 0), (1, 0), (0, 1), (1, 1)]))
    assert len(f.maximal) == 4
    assert set(f.rays) == {vec(r) for r in [(1, 0), (0, 1), (-1, 0), (0, -1)]}


def test_normal_fan_of_dstar():
    f = normal_fan(hull(DSTAR))
    assert len(f.maximal) == 4
    # the rays are the primitive facet normals of the simplex, i.e. the vertices of -Delta/4 scaled
    assert set(f.rays) == {vec(r) for r in [(-1, -1, 3), (-1, 3, -1), (3, -1, -1), (-1, -1, -1)]}


def test_fan_polytope_of_p3_fan():
    f = normal_fan(hull(QUARTIC, lattice="M"))
    assert fan_polytope(f) == hull(DSTAR)


def test_support_function_values():
    p = hull(QUARTIC, lattice="M")
    f = normal_fan(p)
    phi = support_function(p, f)
    # sign convention: phi(n) = -min <m, n>
    assert all(phi(r) == 1 for r in f.rays)
    assert phi.is_strictly_convex()
    zero = support_function(point((0, 0, 0), lattice="M"), f)
    assert all(zero(r) == 0 for r in f.rays)


def test_support_function_is_additive():
    a = hull([(0, 0), (1, 0)], lattice="M")
    b = hull([(0, 0), (0, 1)], lattice="M")
    s = minkowski_sum(a, b)
    f = normal_fan(s)
    assert support_function(s, f) == support_function(a, f) + support_function(b, f)


def test_newton_polytope_inverts_support_function(quartic):
    nab = newton_polytope(quartic.phi_check)
    assert nab == hull(DSTAR)
    assert newton_polytope(PLFunction.zero(quartic.sigma_check_prime)) == point((0, 0, 0))
    assert quartic.nabla_hp == point((0, 0, 0))


def test_refinement():
    f = normal_fan(hull([(0, 0), (1, 0), (0, 1), (1, 1)]))
    fine = Fan.from_rays([(1, 0), (1, 1), (0, 1), (-1, 0), (0, -1)], [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], 2)
    assert is_refinement(fine, f)
    assert not is_refinement(f, fine)


def test_sigma_tilde_quartic(quartic):
    st = quartic.sigma_tilde
    assert st.rank == 4
    assert vec((0, 0, 0, 1)) in st.rays
    # horizontal cones are cones over faces of the simplex
    horiz = [c for c in st.cones if all(r[-1] == 0 for r in c.rays)]
    assert len(horiz) == 1 + 4 + 6 + 4
    # maximal cones: cone over a facet of the simplex plus the vertical ray
    ds = hull(DSTAR)
    up = vec((0, 0, 0, 1))
    expect = set()
    for f in ds.faces:
        if ds.face_dim(f) == 2:
            expect.add(RatCone.of([tuple(p) + (0,) for p in ds.face_vertices(f)] + [up]))
    assert set(st.maximal) == expect
    assert len(st.cones) == 2 * (1 + 4 + 6 + 4)


def test_sigma_tilde_rejects_degenerate():
    with pytest.raises((GeometryError, ValueError)):
        build_sigma_tilde(point((0, 0)), point((0, 0)))


def test_quartic_conditions_pass(quartic):
    assert quartic.conditions.ok


def _interval():
    d = hull([(-1,), (1,)], lattice="M")
    nef = validate_nef_partition(d, [d])
    return nef, build_sigma_tilde(nef.dstar, point((0,)))


def test_non_primitive_vertical_ray_is_reported():
    nef, st = _interval()
    bad = Fan.from_rays([(1, 0), (1, 2), (0, 1), (-1, 0)], [(0, 1), (1, 2), (2, 3)], 2)
    rep = check_conditions(bad, st, nef.sigma, point((0,)))
    assert not rep.ok
    assert not rep.clauses["vertical_rays"]["pass"]
    assert rep.clauses["vertical_rays"]["witness"] == [1, 2]


def test_non_unimodular_cone_is_reported():
    nef, _ = _interval()
    bad = Fan.from_rays([(1, 0), (1, 1), (-1, 1), (-1, 0)], [(0, 1), (1, 2), (2, 3)], 2)
    rep = check_conditions(bad, bad, nef.sigma, hull([(-1,), (1,)]))
    assert rep.clauses["vertical_rays"]["pass"]
    assert not rep.clauses["unimodular"]["pass"]
    assert sorted(rep.clauses["unimodular"]["witness"]) == [[-1, 1], [1, 1]]


def test_fan_json_round_trip():
    f = normal_fan(hull(QUARTIC, lattice="M"))
    assert Fan.from_json(f.to_json()) == f


def test_unimodular_cone_check():
    assert RatCone.of([(1, 0, 0), (0, 1, 0), (0, 0, 1)]).is_unimodular()
