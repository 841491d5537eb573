import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tropic.lattice import simplex_lattice_volume
from tropic.rational import solve
from tropic.shuffles import (
    Shuffle,
    SimplicialComplex,
    enumerate_shuffles,
    eta_map,
    multinomial,
    product_triangulation,
    triangulate_B,
    verify_pa_iso,
    verify_triangulation,
)


def brute_shuffles(degree):
    """Block assignments of 1..pbar with the right block sizes."""
    n = sum(degree)
    out = set()
    for labels in itertools.product(range(len(degree)), repeat=n):
        if all(labels.count(i) == p for i, p in enumerate(degree)):
            out.add(tuple(tuple(l + 1 for l in range(n) if labels[l] == i) for i in range(len(degree))))
    return out


def random_product_point(degree, rng):
    """A generic point of the product of standard simplices conv(0, e_1, ..., e_p)."""
    out = []
    for p in degree:
        w = [Fraction(rng.randint(1, 10**6)) for _ in range(p + 1)]
        s = sum(w)
        out.extend(x / s for x in w[1:])
    return tuple(out)


def containing_simplices(cx, x):
    hits = 0
    for s in cx.simplices:
        pts = cx.points(s)
        rows = [[p[i] for p in pts] for i in range(len(x))] + [[1] * len(pts)]
        lam = solve(rows, list(x) + [1])
        if lam is not None and all(t >= 0 for t in lam):
            hits += 1
    return hits


@pytest.mark.parametrize("degree,count", [((1, 1), 2), ((2, 1), 3), ((1, 1, 1), 6)])
def test_small_shuffle_counts(degree, count):
    got = enumerate_shuffles(degree)
    assert len(got) == count
    assert {s.blocks for s in got} == brute_shuffles(degree)


@pytest.mark.parametrize("degree", [(2, 2), (3, 1, 1), (1, 2, 1), (2, 0, 2)])
def test_counts_match_brute_force(degree):
    got = enumerate_shuffles(degree)
    assert len(got) == multinomial(degree)
    assert {s.blocks for s in got} == brute_shuffles(degree)


def test_walk_round_trip():
    for s in enumerate_shuffles((2, 1, 2)):
        assert Shuffle.from_walk(s.walk) == s
        assert Shuffle.from_walk(s.walk[:-1], final_move=False) == s
        assert s.walk[0] == (0, 0, 0)
        assert s.walk[-1] == (3, 1, 2)
        assert s.i(s.pbar + 1) == 0


def test_bad_walks_and_blocks():
    with pytest.raises(ValueError):
        Shuffle.from_walk([(0, 0), (1, 1)], final_move=False)
    with pytest.raises(ValueError):
        Shuffle.from_walk([(0, 0), (0, 1)])
    with pytest.raises(ValueError):
        Shuffle(((1, 3), (4,)))
    with pytest.raises(ValueError):
        enumerate_shuffles((1, -1))


def test_json_round_trip():
    s = enumerate_shuffles((2, 1))[1]
    assert Shuffle.from_json(s.to_json()) == s
    cx = product_triangulation((1, 2))
    back = SimplicialComplex.from_json(cx.to_json())
    assert back.simplices == cx.simplices and back.f_vector == cx.f_vector


def test_eta_of_single_block_is_identity():
    (s,) = enumerate_shuffles((3, 0, 0))
    eta = eta_map(s)
    x = (Fraction(1, 10), Fraction(2, 10), Fraction(3, 10), Fraction(4, 10))
    assert eta(x) == x[1:]


def test_eta_vertices_walk_the_grid():
    for s in enumerate_shuffles((2, 1)):
        eta = eta_map(s)
        for j in range(s.pbar + 1):
            for i in range(2):
                assert eta.vertex_image(j, i) == s.j(i, j)


@pytest.mark.parametrize("degree,count", [((1, 1), 2), ((2, 1), 3), ((2, 2), 6), ((1, 1, 1), 6)])
def test_product_triangulation_volumes(degree, count):
    cx = product_triangulation(degree)
    assert len(cx.simplices) == count
    assert all(simplex_lattice_volume(cx.points(s)) == 1 for s in cx.simplices)
    assert verify_pa_iso(degree)["pass"]


@pytest.mark.parametrize("degree", [(1, 1), (2, 1), (1, 1, 1), (2, 2)])
def test_generic_points_lie_in_one_simplex(degree):
    cx = product_triangulation(degree)
    rng = random.Random(7)
    for _ in range(15):
        assert containing_simplices(cx, random_product_point(degree, rng)) == 1


def test_B_triangulations(quartic, k323):
    for P in (quartic, k323):
        B = P.B
        tri = triangulate_B(B, B.default_orders(P.distinguished_vertex))
        rep = verify_triangulation(B, tri)
        assert rep["pass"], rep
        assert rep["top_simplices"] == tri.expected


def test_quartic_triangulation_is_B_itself(quartic):
    B = quartic.B
    tri = triangulate_B(B, B.default_orders(quartic.distinguished_vertex))
    assert tri.complex.f_vector == (4, 6, 4)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=4).filter(lambda d: 0 < sum(d) <= 6))
def test_enumeration_is_multinomial(degree):
    got = enumerate_shuffles(degree)
    assert len(got) == multinomial(degree)
    assert len({s.blocks for s in got}) == len(got)
    for s in got:
        assert s.degree == tuple(degree)
        assert Shuffle.from_walk(s.walk) == s
