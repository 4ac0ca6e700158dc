"""Infinitesimal monodromy, the I/J/K invariants and the collapse quadratic.

For a closed n-gon with per-edge log-derivatives ``l_i = c_i'(1) / c_i`` the
infinitesimal monodromy is a sum of rank-one maps

    S_i : V -> l_i * det(V, V_{i+1}) / det(V_i, V_{i+1}) * V_i,

which is independent of the lifts ``V_i`` of the vertices, so everything
here works homogeneously and vertices at infinity need no special case.
In an affine chart the traceless part is ``[[J, -K], [I, -J]]`` and its
eigenlines are the roots of ``chi(X, Y) = I X^2 - 2 J X Y + K Y^2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateEdge, ZeroPolynomial
from .polygon import TwistedPolygon, coords, is_closed, monodromy_product, normalize_chart
from .projgeom import INF, Mobius, MobiusClass, ProjPoint, classify
from .scaling import SystemSpec, deform_family, log_derivative, scale

EDGE_TOL = 1e-14


@dataclass(frozen=True)
class InfinitesimalMonodromy:
    matrix: np.ndarray  # sum of the S_i; its trace is sum(l_i)
    I: complex
    J: complex
    K: complex

    @property
    def Delta(self) -> complex:
        return self.J * self.J - self.I * self.K

    @property
    def traceless(self) -> np.ndarray:
        return np.array([[self.J, -self.K], [self.I, -self.J]])

    def theorem_form(self, n: int) -> np.ndarray:
        """``[[n/2 + J, -K], [I, n/2 - J]]``; equals :attr:`matrix` when sum(l_i) = n."""
        return self.traceless + (n / 2) * np.eye(2)

    @property
    def triple(self) -> tuple:
        """``[I, 2J, K]``, the coefficient vector used by the PGL(2) laws."""
        return (self.I, 2 * self.J, self.K)


@dataclass(frozen=True)
class CollapseCandidates:
    roots: tuple
    I: complex = 0j
    J: complex = 0j
    K: complex = 0j
    classification: Optional[MobiusClass] = None

    def labels(self) -> tuple:
        """'attracting' / 'repelling' / '' per root, from the class of M'."""
        cls = self.classification
        out = []
        for r in self.roots:
            if cls is not None and cls.kind == "loxodromic":
                if r.isclose(cls.attracting, 1e-6):
                    out.append("attracting")
                    continue
                if r.isclose(cls.repelling, 1e-6):
                    out.append("repelling")
                    continue
            out.append("")
        return tuple(out)


def _window(P: TwistedPolygon):
    return [P.vertex(i) for i in range(1, P.n + 2)]


def monodromy_matrix(P: TwistedPolygon, logderiv: Sequence[complex]) -> np.ndarray:
    """Homogeneous sum of the rank-one summands."""
    logderiv = np.asarray(logderiv, dtype=complex)
    if len(logderiv) != P.n:
        raise ValueError("one log-derivative per edge expected")
    pts = _window(P)
    total = np.zeros((2, 2), dtype=complex)
    for i in range(P.n):
        v, w = pts[i], pts[i + 1]
        det = v.h0 * w.h1 - v.h1 * w.h0
        if abs(det) <= EDGE_TOL:
            raise DegenerateEdge(f"p_{i + 1} = p_{i + 2}")
        # V -> det(V, W) / det(V_i, W) * V_i, with det(V, W) = (W1, -W0) . V
        total += logderiv[i] / det * np.outer(v.vec, [w.h1, -w.h0])
    return total


def ijk_affine(values: Sequence[complex], logderiv: Sequence[complex]) -> tuple:
    """I, J, K from finite affine vertex values (cyclically closed)."""
    p = np.asarray(values, dtype=complex)
    q = np.roll(p, -1)
    diff = p - q
    if np.any(np.abs(diff) <= EDGE_TOL * np.maximum(1, np.abs(p))):
        raise DegenerateEdge("consecutive vertices coincide")
    w = np.asarray(logderiv, dtype=complex) / diff
    return complex(np.sum(w)), complex(0.5 * np.sum(w * (p + q))), complex(np.sum(w * p * q))


def infinitesimal_monodromy(P: TwistedPolygon, logderiv: Sequence[complex],
                            require_closed: bool = True) -> InfinitesimalMonodromy:
    if require_closed and not is_closed(P):
        raise ValueError("the infinitesimal monodromy is only defined for closed polygons")
    mat = monodromy_matrix(P, logderiv)
    if any(p.is_infinity for p in P.vertices):
        I = mat[1, 0]
        J = (mat[0, 0] - mat[1, 1]) / 2
        K = -mat[0, 1]
    else:
        I, J, K = ijk_affine(P.values(), logderiv)
    return InfinitesimalMonodromy(mat, complex(I), complex(J), complex(K))


def finite_diff_monodromy(P: TwistedPolygon, spec: SystemSpec, curvature=None,
                          h: float = 1e-4) -> np.ndarray:
    """Central difference of the chart-lift monodromy ``M_z`` at z = 1.

    The product matrix at z = 1 is ``lam * Id`` for a closed polygon; the
    derivative is divided by ``lam`` and conjugated back from the chart into
    the coordinates of ``P``.  Only its traceless part is meaningful.
    """
    g, _ = normalize_chart(P)
    m1 = monodromy_product(coords(P)).matrix
    lam = (m1[0, 0] + m1[1, 1]) / 2
    plus = deform_family(P, spec, 1 + h, curvature).monodromy.matrix
    minus = deform_family(P, spec, 1 - h, curvature).monodromy.matrix
    d = (plus - minus) / (2 * h) / lam
    gm = g.matrix
    (a, b), (c, e) = gm
    g_inv = np.array([[e, -b], [-c, a]]) / (a * e - b * c)
    return g_inv @ d @ gm


def traceless(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return m - (np.trace(m) / 2) * np.eye(2)


def chi_roots(I: complex, J: complex, K: complex, tol: float = 1e-14) -> CollapseCandidates:
    """Projective roots of ``I X^2 - 2 J X Y + K Y^2``."""
    scale = max(abs(I), abs(J), abs(K))
    if scale == 0:
        raise ZeroPolynomial("I = J = K = 0")
    if abs(I) <= tol * scale:
        if abs(J) <= tol * scale:
            return CollapseCandidates((INF,), I, J, K)
        return CollapseCandidates((INF, ProjPoint(K, 2 * J)), I, J, K)
    delta = J * J - I * K
    if abs(delta) <= tol * scale * scale:
        return CollapseCandidates((ProjPoint(J, I),), I, J, K)
    sq = cmath.sqrt(delta)
    big = J + sq if abs(J + sq) >= abs(J - sq) else J - sq
    # roots X/Y = big / I and K / big (their product is K / I)
    return CollapseCandidates((ProjPoint(big, I), ProjPoint(K, big)), I, J, K)


def chi_value(I, J, K, root: ProjPoint) -> complex:
    X, Y = root.h0, root.h1
    return I * X * X - 2 * J * X * Y + K * Y * Y


def ijk_transform(generator: str, triple, lam: complex = None) -> tuple:
    """Image of ``[I, 2J, K]`` under ``z -> z - lam``, ``z -> lam z`` or ``z -> -1/z``."""
    I, J2, K = triple
    if generator == "translate":
        return (I, -(2 * I * lam - J2), I * lam * lam - J2 * lam + K)
    if generator == "dilate":
        if lam == 0:
            raise ValueError("dilation factor must be nonzero")
        return (I / lam, J2, K * lam)
    if generator == "invert":
        return (K, -J2, I)
    raise ValueError(f"unknown generator {generator!r}")


GENERATOR_MAPS = {
    "translate": lambda lam: Mobius([[1, -lam], [0, 1]]),
    "dilate": lambda lam: Mobius([[lam, 0], [0, 1]]),
    "invert": lambda lam=None: Mobius([[0, -1], [1, 0]]),
}


def _finite_values(P: TwistedPolygon) -> np.ndarray:
    if any(p.is_infinity for p in P.vertices):
        raise DegenerateEdge("affine formula needs finite vertices; move the polygon first")
    return P.values()


def g_invariant(P: TwistedPolygon, logderiv: Sequence[complex], k: int) -> complex:
    """Sum over increasing k-tuples of weighted multiratios of the vertices."""
    n = P.n
    if not 1 <= k <= n // 2:
        raise ValueError("need 1 <= k <= n/2")
    p = _finite_values(P)
    ell = np.asarray(logderiv, dtype=complex)

    def pt(i):  # cyclic, 0-based
        return p[i % n]

    edge = np.array([pt(i) - pt(i + 1) for i in range(n)])
    if np.any(np.abs(edge) <= EDGE_TOL):
        raise DegenerateEdge("consecutive vertices coincide")
    total = 0j
    for idx in combinations(range(n), k):
        num = pt(idx[0]) - pt(idx[-1] + 1)
        for a, b in zip(idx[1:], idx[:-1]):
            num *= pt(a) - pt(b + 1)
        den = np.prod(edge[list(idx)])
        total += np.prod(ell[list(idx)]) * num / den
    return complex(total)


def omega_eval(P: TwistedPolygon, logderiv: Sequence[complex], d1, d2) -> complex:
    """``sum_i l_i (d1_i d2_{i+1} - d1_{i+1} d2_i) / (p_i - p_{i+1})^2``."""
    p = _finite_values(P)
    return omega_affine(p, logderiv, d1, d2)


def omega_affine(p, logderiv, d1, d2) -> complex:
    p = np.asarray(p, dtype=complex)
    d1 = np.asarray(d1, dtype=complex)
    d2 = np.asarray(d2, dtype=complex)
    diff = p - np.roll(p, -1)
    if np.any(np.abs(diff) <= EDGE_TOL):
        raise DegenerateEdge("consecutive vertices coincide")
    r1, r2 = np.roll(d1, -1), np.roll(d2, -1)
    # complex products are not bitwise commutative, so antisymmetrize explicitly
    wedge = 0.5 * ((d1 * r2 - r1 * d2) - (d2 * r1 - r2 * d1))
    return complex(np.sum(np.asarray(logderiv) * wedge / diff ** 2))


def w_correction(logderiv, d) -> complex:
    """``sum_i 1/2 (l_i - l_{i-1}) d_i``, the extra term printed next to ``i_w Omega``."""
    ell = np.asarray(logderiv, dtype=complex)
    return complex(np.sum(0.5 * (ell - np.roll(ell, 1)) * np.asarray(d)))


def predict_collapse(P: TwistedPolygon, spec: SystemSpec, curvature=None) -> CollapseCandidates:
    """Eigenlines of the infinitesimal monodromy, labelled when M' is loxodromic."""
    n = P.n // 2 if spec.kind == "leapfrog" else P.n
    ell = log_derivative(spec, curvature, n=n)
    im = infinitesimal_monodromy(P, ell)
    cand = chi_roots(im.I, im.J, im.K)
    try:
        cls = classify(Mobius(im.matrix))
    except ValueError:
        cls = None  # singular M' has no Möbius class
    return CollapseCandidates(cand.roots, im.I, im.J, im.K, cls)


def scaled_logderiv_fd(spec: SystemSpec, c, curvature, h: float = 1e-6) -> np.ndarray:
    """Central-difference ``d log c_i(t) / dt`` at t = 1 (cross-check of log_derivative)."""
    plus = scale(spec, c, curvature, 1 + h).c
    minus = scale(spec, c, curvature, 1 - h).c
    return (plus - minus) / (2 * h) / np.asarray(c)


def oracle_convergence(P: TwistedPolygon, spec: SystemSpec, curvature=None, h: float = 1e-4,
                       floor: float = 1e-10) -> dict:
    """Errors of the finite-difference oracle at h and h/2 against the closed form.

    ``exact`` flags families whose central difference has no h^2 term (the
    error is still at the rounding floor at step 16h); their error ratio is
    rounding noise and carries no order information.
    """
    n = P.n // 2 if spec.kind == "leapfrog" else P.n
    ref = infinitesimal_monodromy(P, log_derivative(spec, curvature, n=n)).traceless
    scale_ = np.abs(ref).max()

    def err(step):
        return float(np.abs(traceless(finite_diff_monodromy(P, spec, curvature, h=step)) - ref).max() / scale_)

    e1, e2 = err(h), err(h / 2)
    exact = err(16 * h) <= floor
    return {"error": e1, "error_half": e2, "ratio": e1 / e2 if e2 else math.inf, "exact": exact}
