"""Twisted polygons on the projective line and their cross-ratio coordinates.

Vertices are indexed from 1 as ``p_1 .. p_n`` (the stored window); any other
index is reached through the monodromy, ``p_{i+n} = M p_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegeneratePolygon, DegenerateReconstruction
from .projgeom import (
    INF,
    ONE,
    ZERO,
    Mobius,
    ProjPoint,
    as_point,
    chordal_distance,
    cross_ratio,
    matrix_distance,
    mobius_apply,
    mobius_from_triples,
    solve_cross_ratio,
)

WINDOW_TOL = 1e-12
CLOSED_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TwistedPolygon:
    n: int
    vertices: tuple
    monodromy: Mobius

    def __post_init__(self):
        verts = tuple(as_point(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if self.n < 3:
            raise ValueError("a polygon needs n >= 3")
        if len(verts) != self.n:
            raise ValueError(f"expected {self.n} vertices, got {len(verts)}")
        for i in range(1, self.n + 1):
            p = self.vertex(i)
            for k in (1, 2):
                if chordal_distance(p, self.vertex(i + k)) <= WINDOW_TOL:
                    raise DegeneratePolygon(f"p_{i} coincides with p_{i + k}")

    @classmethod
    def from_values(cls, values: Sequence, monodromy: Optional[Mobius] = None):
        verts = tuple(as_point(v) for v in values)
        return cls(len(verts), verts, monodromy or Mobius.identity())

    def vertex(self, i: int) -> ProjPoint:
        k, r = divmod(i - 1, self.n)
        p = self.vertices[r]
        if k == 0:
            return p
        step = self.monodromy if k > 0 else self.monodromy.inverse()
        for _ in range(abs(k)):
            p = mobius_apply(step, p)
        return p

    def values(self) -> np.ndarray:
        """Affine values of the window (``inf`` entries for infinity)."""
        return np.array([p.value for p in self.vertices])

    def transform(self, g: Mobius) -> "TwistedPolygon":
        """``g . P``: vertices moved by g, monodromy conjugated."""
        return TwistedPolygon(self.n, tuple(mobius_apply(g, p) for p in self.vertices),
                              self.monodromy.conjugate_by(g))

    def replace_vertex(self, i: int, p: ProjPoint) -> "TwistedPolygon":
        r = (i - 1) % self.n
        verts = list(self.vertices)
        verts[r] = p
        return TwistedPolygon(self.n, tuple(verts), self.monodromy)

    def is_closed(self, tol: float = CLOSED_TOL) -> bool:
        return is_closed(self, tol)

    def distance(self, other: "TwistedPolygon") -> float:
        """Largest vertexwise chordal distance between two windows."""
        return max(chordal_distance(p, q) for p, q in zip(self.vertices, other.vertices))

    def __repr__(self):
        vals = ", ".join(repr(p) for p in self.vertices)
        return f"TwistedPolygon(n={self.n}, [{vals}], {self.monodromy!r})"


def coords(P: TwistedPolygon) -> np.ndarray:
    """Cross-ratio coordinates ``c_i = [p_i, p_{i+1}, p_{i-1}, p_{i+2}]``, i = 1..n."""
    out = np.empty(P.n, dtype=complex)
    prev, cur, nxt = P.vertex(0), P.vertex(1), P.vertex(2)
    for i in range(1, P.n + 1):
        nxt2 = P.vertex(i + 2)
        out[i - 1] = cross_ratio(cur, nxt, prev, nxt2)
        prev, cur, nxt = cur, nxt, nxt2
    return out


def normalize_chart(P: TwistedPolygon):
    """Move P so that ``p_0 = 1, p_1 = inf, p_2 = 0``; returns ``(g, g.P)``."""
    g = mobius_from_triples((P.vertex(0), P.vertex(1), P.vertex(2)), (ONE, INF, ZERO))
    return g, P.transform(g)


def _step_matrix(c):
    return np.array([[0.0, c], [-1.0, 1.0]], dtype=complex)


def monodromy_product(c: Sequence[complex]) -> Mobius:
    """``A(c_1) ... A(c_n)`` with ``A(c) = [[0, c], [-1, 1]]``, not rescaled.

    This is the monodromy in the chart ``p_0 = 1, p_1 = inf, p_2 = 0``.
    """
    m = np.eye(2, dtype=complex)
    for ci in c:
        if ci == 0:
            raise ValueError("cross-ratio coordinates must be nonzero")
        m = m @ _step_matrix(ci)
    return Mobius(m)


def reconstruct(c: Sequence[complex], M_expected: Optional[Mobius] = None,
                tol: float = 1e-9) -> TwistedPolygon:
    """Polygon in the normalised chart whose cross-ratio coordinates are ``c``.

    Starting from ``p_0 = 1, p_1 = inf, p_2 = 0``, each ``p_{i+2}`` solves
    ``c_i = [p_i, p_{i+1}, p_{i-1}, p_{i+2}]``.  The monodromy is the matrix
    product of :func:`monodromy_product`.  If ``M_expected`` is given the
    result is checked against it.
    """
    c = np.asarray(c, dtype=complex)
    n = len(c)
    if n < 3:
        raise ValueError("need at least 3 coordinates")
    if np.any(c == 0):
        raise ValueError("cross-ratio coordinates must be nonzero")
    pts = [ONE, INF, ZERO]  # p_0, p_1, p_2
    for i in range(1, n - 1):
        try:
            q = solve_cross_ratio(pts[i], pts[i + 1], pts[i - 1], c[i - 1])
        except Exception as exc:
            raise DegenerateReconstruction(f"cannot solve for p_{i + 2}") from exc
        for back in (1, 2):
            if chordal_distance(q, pts[i + 2 - back]) <= tol:
                raise DegenerateReconstruction(f"p_{i + 2} coincides with p_{i + 2 - back}")
        pts.append(q)
    mono = monodromy_product(c)
    if M_expected is not None and matrix_distance(mono.matrix, M_expected.matrix) > 1e-8:
        raise DegenerateReconstruction("reconstructed monodromy differs from the expected one")
    try:
        return TwistedPolygon(n, tuple(pts[1:n + 1]), mono)
    except DegeneratePolygon as exc:
        raise DegenerateReconstruction(str(exc)) from exc


def is_closed(P: TwistedPolygon, tol: float = CLOSED_TOL) -> bool:
    return matrix_distance(P.monodromy.matrix, np.eye(2)) <= tol


def random_closed_polygon(rng: np.random.Generator, n: int, radius: float = 1.0,
                          min_sep: float = 1e-3) -> TwistedPolygon:
    """n i.i.d. uniform points of a disk, resampled until the window is non-degenerate."""
    while True:
        r = radius * np.sqrt(rng.uniform(size=n))
        theta = rng.uniform(0, 2 * np.pi, size=n)
        z = r * np.exp(1j * theta)
        ok = all(abs(z[i] - z[(i + k) % n]) > min_sep for i in range(n) for k in (1, 2))
        if ok:
            return TwistedPolygon.from_values(z)


def random_mobius(rng: np.random.Generator) -> Mobius:
    while True:
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(m)) > 0.1:
            return Mobius(m)


# --- JSON schema shared with the harness -------------------------------------

def _encode_point(p: ProjPoint):
    if p.is_infinity:
        return "inf"
    z = p.value
    return [z.real, z.imag]


def _decode_point(obj) -> ProjPoint:
    if isinstance(obj, str):
        return as_point(obj)
    if isinstance(obj, (int, float)):
        return as_point(complex(obj))
    re, im = obj
    return as_point(complex(re, im))


def _decode_entry(obj) -> complex:
    if isinstance(obj, (list, tuple)):
        return complex(obj[0], obj[1])
    return complex(obj)


def polygon_to_dict(P: TwistedPolygon) -> dict:
    m = P.monodromy.matrix / np.linalg.norm(P.monodromy.matrix)
    return {
        "n": P.n,
        "vertices": [_encode_point(p) for p in P.vertices],
        "monodromy": [[[e.real, e.imag] for e in row] for row in m],
    }


def polygon_from_dict(obj: dict) -> TwistedPolygon:
    verts = [_decode_point(v) for v in obj["vertices"]]
    n = int(obj.get("n", len(verts)))
    mono = obj.get("monodromy")
    m = Mobius([[_decode_entry(e) for e in row] for row in mono]) if mono else Mobius.identity()
    return TwistedPolygon(n, tuple(verts), m)


def polygon_to_json(P: TwistedPolygon) -> str:
    return json.dumps(polygon_to_dict(P))


def polygon_from_json(text: str) -> TwistedPolygon:
    return polygon_from_dict(json.loads(text))
