import numpy as np
import pytest

from polydyn.errors import DegeneratePolygon
from polydyn.polygon import (
    TwistedPolygon,
    coords,
    is_closed,
    monodromy_product,
    normalize_chart,
    polygon_from_json,
    polygon_to_json,
    random_closed_polygon,
    random_mobius,
    reconstruct,
)
from polydyn.projgeom import INF, ONE, ZERO, Mobius, matrix_distance, mobius_from_triples, shared_fixed_points


def random_twisted(rng, n):
    P = random_closed_polygon(rng, n)
    return TwistedPolygon(n, P.vertices, random_mobius(rng))


def test_vertex_indexing_uses_monodromy():
    M = Mobius([[2, 5], [0, 1]])  # z -> 2z + 5
    P = TwistedPolygon.from_values([0, 1, 3], M)
    assert P.vertex(4).value == pytest.approx(5.0)
    assert P.vertex(0).value == pytest.approx(-1.0)
    assert P.vertex(7).value == pytest.approx(15.0)


def test_degenerate_window_rejected():
    with pytest.raises(DegeneratePolygon):
        TwistedPolygon.from_values([0, 0, 1, 2])
    with pytest.raises(DegeneratePolygon):
        TwistedPolygon.from_values([0, 1, 0, 2])


def test_coords_examples():
    assert np.allclose(coords(TwistedPolygon.from_values([1, INF, 0])), 1)
    c = coords(TwistedPolygon.from_values([1, 1j, -1, -1j]))
    assert np.allclose(c, 0.5)


def test_coords_projective_invariance(rng):
    for _ in range(20):
        P = random_twisted(rng, int(rng.integers(4, 12)))
        g = random_mobius(rng)
        assert np.allclose(coords(P.transform(g)), coords(P), rtol=1e-9, atol=0)


def test_normalize_chart(rng):
    P = reconstruct([0.5, 2 + 1j, -1.5, 0.7j])
    g, _ = normalize_chart(P)
    assert g.isclose(Mobius.identity())
    for _ in range(10):
        P = random_twisted(rng, 6)
        g, Q = normalize_chart(P)
        assert Q.vertex(0) == ONE and Q.vertex(1) == INF and Q.vertex(2) == ZERO
        assert np.allclose(coords(Q), coords(P), rtol=1e-9)
        back = Q.transform(g.inverse())
        assert back.distance(P) < 1e-10


def test_monodromy_product_examples(rng):
    A = monodromy_product([1, 1, 1]).matrix
    assert np.allclose(A, -np.eye(2))
    P = random_closed_polygon(rng, 7)
    assert matrix_distance(monodromy_product(coords(P)).matrix, np.eye(2)) < 1e-9
    for n in (3, 5, 12):
        P = random_twisted(rng, n)
        _, Q = normalize_chart(P)
        assert matrix_distance(monodromy_product(coords(P)).matrix, Q.monodromy.matrix) < 1e-8


def test_reconstruct(rng):
    T = reconstruct([1, 1, 1])
    assert T.vertices[0] == INF and T.vertices[1] == ZERO and T.vertices[2] == ONE
    assert is_closed(T)
    c = np.array([0.3 + 1j, -2, 1.5j, 0.8 - 0.1j, 2])
    Q = reconstruct(c)
    assert Q.vertex(3).value == pytest.approx(c[0])
    assert np.allclose(coords(Q), c, rtol=1e-8)
    P = random_twisted(rng, 6)
    R = reconstruct(coords(P))
    g = mobius_from_triples(P.vertices[:3], R.vertices[:3])
    assert P.transform(g).distance(R) < 1e-8
    assert is_closed(reconstruct(coords(random_closed_polygon(rng, 8))))


def test_is_closed_examples():
    P = TwistedPolygon.from_values([0, 1, 2j], Mobius(-2 * np.eye(2)))
    assert is_closed(P)
    assert not is_closed(TwistedPolygon.from_values([0, 1, 2j], Mobius([[2, 0], [0, 1]])))


def test_commuting_maps_share_fixed_points(rng):
    for _ in range(20):
        M = random_mobius(rng)
        A = M.matrix @ M.matrix + 0.7 * M.matrix + 2 * np.eye(2)  # a polynomial in M commutes with it
        assert shared_fixed_points(M, Mobius(A), tol=1e-8)


def test_json_roundtrip(rng):
    P = TwistedPolygon((5), (INF, 0, 1, 2j, -1 + 1j), random_mobius(rng))
    Q = polygon_from_json(polygon_to_json(P))
    assert Q.distance(P) == 0.0
    assert Q.monodromy.isclose(P.monodromy)
