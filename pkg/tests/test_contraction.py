from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tropic.contraction import (
    ContractionError,
    verify_affine_compat,
    verify_laws,
    verify_preimage,
    verify_sigma_cone,
)
from tropic.rational import add, scale, vec
from tropic.tropical import TropPoint


def vertex(B, p):
    return next(c for c in B.vertices if c.vertices[0] == vec(p))


def test_atlas_has_a_chart_per_cell(quartic, quartic_atlas):
    B = quartic.B
    assert len(B.cells) == 14
    for c in B.cells:
        assert B.chains_from(c.index)
        assert quartic_atlas.section(c.index, B.anchors[c.index]) == B.anchors[c.index]


def test_delta_is_identity_on_anchors_and_vertices(quartic, quartic_atlas):
    B = quartic.B
    for c in B.cells:
        assert quartic_atlas.delta(B.anchors[c.index]) == B.anchors[c.index]
    for v in B.vertices:
        assert quartic_atlas.delta(B.vertex_point(v)) == B.vertex_point(v)


def test_thickening_point_contracts_to_vertex(quartic, quartic_X, quartic_atlas):
    B = quartic.B
    v = vertex(B, (1, 0, 0))
    beta = quartic.nef.beta_star(B.cells[v.index].polytope, 0)
    for lam in (Fraction(1, 3), Fraction(1), Fraction(5, 2)):
        p = add(B.vertex_point(v), scale(lam, beta.vertices[0]))
        assert quartic_X.contains_point(p)
        assert quartic_atlas.delta(p) == B.vertex_point(v)


def test_delta_rejects_points_off_trop_X(quartic_atlas):
    with pytest.raises(ContractionError):
        quartic_atlas.delta((0, 0, 0))


def test_delta_is_identity_in_open_maximal_cells(quartic, quartic_atlas):
    B = quartic.B
    for s in B.maximal_cells:
        a = B.anchors[s.index]
        for v in s.vertices:
            x = add(scale(Fraction(3, 4), a), scale(Fraction(1, 4), v))
            assert quartic_atlas.delta(x) == x


def test_delta_is_idempotent_on_samples(quartic_atlas):
    for p in quartic_atlas.samples:
        x = quartic_atlas.delta(p)
        assert quartic_atlas.B.in_B(x)
        assert quartic_atlas.delta(x) == x


def test_laws(quartic_atlas):
    assert verify_laws(quartic_atlas).passed


def test_preimage_vertex_and_maximal(quartic, quartic_atlas):
    B = quartic.B
    v = vertex(B, (1, 0, 0))
    assert verify_preimage(quartic_atlas, v.index).passed
    for s in B.maximal_cells:
        assert verify_preimage(quartic_atlas, s.index).passed


def test_sigma_cone_for_all_pairs(quartic, quartic_atlas):
    B = quartic.B
    pairs = 0
    for s in B.maximal_cells:
        for v in B.vertices:
            if v.index in B.faces_of[s.index]:
                assert verify_sigma_cone(quartic_atlas, s, v).passed
                pairs += 1
    assert pairs == 12


def test_affine_compat(quartic_atlas):
    assert verify_affine_compat(quartic_atlas).passed


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.fractions(Fraction(1, 10), Fraction(9, 10)), st.fractions(Fraction(1, 10), Fraction(9, 10)))
def test_delta_fixes_points_of_maximal_cells(quartic, quartic_atlas, k, a, b):
    s = quartic.B.maximal_cells[k]
    p, q, r = s.vertices
    # a point in the open triangle
    w = (a * b, a * (1 - b), 1 - a)
    x = tuple(w[0] * p[i] + w[1] * q[i] + w[2] * r[i] for i in range(3))
    assert quartic_atlas.delta(TropPoint.finite(x)) == x
