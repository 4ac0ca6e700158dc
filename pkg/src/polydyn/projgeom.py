"""Points and Möbius maps of the complex projective line.

All arithmetic is homogeneous: a point is a pair ``[h0 : h1]`` (affine value
``h0 / h1``, infinity is ``[1 : 0]``) and a Möbius map is a 2x2 matrix acting
on such pairs.  Point representatives are rescaled to unit Euclidean norm so
long orbits neither overflow nor underflow.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import CoincidentAxis, DegenerateCrossRatio, DegenerateTriple

PROJ_TOL = 1e-9
PARABOLIC_TOL = 1e-9
ELLIPTIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProjPoint:
    h0: complex
    h1: complex

    def __post_init__(self):
        h0, h1 = complex(self.h0), complex(self.h1)
        norm = math.hypot(abs(h0), abs(h1))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError(f"invalid homogeneous pair ({h0}, {h1})")
        object.__setattr__(self, "h0", h0 / norm)
        object.__setattr__(self, "h1", h1 / norm)

    @classmethod
    def from_value(cls, z) -> "ProjPoint":
        """Point with affine value ``z``; ``inf`` (or ``"inf"``) maps to ``[1:0]``."""
        if isinstance(z, ProjPoint):
            return z
        if isinstance(z, str):
            if z.strip().lower() in ("inf", "infinity", "oo"):
                return cls(1.0, 0.0)
            z = complex(z)
        z = complex(z)
        if cmath.isinf(z):
            return cls(1.0, 0.0)
        return cls(z, 1.0)

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.h0, self.h1], dtype=complex)

    @property
    def is_infinity(self) -> bool:
        return self.h1 == 0

    @property
    def value(self) -> complex:
        """Affine value; ``complex(inf)`` for the point at infinity."""
        if self.h1 == 0:
            return complex(math.inf, 0.0)
        return self.h0 / self.h1

    def distance(self, other: "ProjPoint") -> float:
        return chordal_distance(self, other)

    def isclose(self, other: "ProjPoint", tol: float = PROJ_TOL) -> bool:
        return chordal_distance(self, other) <= tol

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __repr__(self):
        if self.h1 == 0:
            return "ProjPoint(inf)"
        return f"ProjPoint({self.value:.12g})"


PointLike = Union[ProjPoint, complex, float, int, str]

INF = ProjPoint(1.0, 0.0)
ZERO = ProjPoint(0.0, 1.0)
ONE = ProjPoint(1.0, 1.0)


def as_point(z: PointLike) -> ProjPoint:
    return ProjPoint.from_value(z)


def _det(u, v) -> complex:
    return u.h0 * v.h1 - u.h1 * v.h0


def chordal_distance(p: ProjPoint, q: ProjPoint) -> float:
    """``|p0 q1 - p1 q0| / (|p| |q|)``; lies in [0, 1], zero iff p == q."""
    # representatives are unit vectors already
    return min(1.0, abs(_det(p, q)))


class Mobius:
    """A 2x2 invertible complex matrix, considered up to a nonzero scalar.

    The stored matrix is kept exactly as given (no rescaling) so that smooth
    families of matrices stay smooth; composition and inversion return
    Frobenius-normalised representatives.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        m = np.array(matrix, dtype=complex).reshape(2, 2)
        if check:
            scale = np.sum(np.abs(m) ** 2)
            if not np.isfinite(scale) or scale == 0.0:
                raise ValueError("Mobius matrix must be finite and nonzero")
            if abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) <= 1e-14 * scale:
                raise ValueError("Mobius matrix is singular")
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(np.eye(2))

    @classmethod
    def from_coefficients(cls, a, b, c, d) -> "Mobius":
        """The map ``z -> (a z + b) / (c z + d)``."""
        return cls([[a, b], [c, d]])

    @property
    def det(self) -> complex:
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    @property
    def trace(self) -> complex:
        return self.matrix[0, 0] + self.matrix[1, 1]

    def normalized(self) -> "Mobius":
        return Mobius(self.matrix / np.linalg.norm(self.matrix), check=False)

    def inverse(self) -> "Mobius":
        (a, b), (c, d) = self.matrix
        adj = np.array([[d, -b], [-c, a]])
        return Mobius(adj / np.linalg.norm(adj), check=False)

    def __matmul__(self, other: "Mobius") -> "Mobius":
        prod = self.matrix @ other.matrix
        return Mobius(prod / np.linalg.norm(prod), check=False)

    def __call__(self, p: PointLike) -> ProjPoint:
        return mobius_apply(self, p)

    def power(self, k: int) -> "Mobius":
        base = self if k >= 0 else self.inverse()
        out = Mobius.identity()
        for _ in range(abs(k)):
            out = base @ out
        return out

    def conjugate_by(self, g: "Mobius") -> "Mobius":
        """``g M g^-1``."""
        m = self.matrix
        if m[0, 1] == 0 and m[1, 0] == 0 and m[0, 0] == m[1, 1]:
            return self  # scalar matrices commute with everything; keeps closed polygons closed
        return g @ self @ g.inverse()

    def isclose(self, other: "Mobius", tol: float = 1e-9) -> bool:
        return matrix_distance(self.matrix, other.matrix) <= tol

    def __repr__(self):
        return f"Mobius({self.matrix.tolist()})"


def matrix_distance(a, b) -> float:
    """Projective distance ``1 - |<A,B>_F| / (|A|_F |B|_F)``; phase invariant."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    inner = abs(np.vdot(a, b))
    return max(0.0, 1.0 - inner / (np.linalg.norm(a) * np.linalg.norm(b)))


def mobius_apply(m: Mobius, p: PointLike) -> ProjPoint:
    p = as_point(p)
    mat = m.matrix
    return ProjPoint(mat[0, 0] * p.h0 + mat[0, 1] * p.h1,
                     mat[1, 0] * p.h0 + mat[1, 1] * p.h1)


def cross_ratio(a: PointLike, b: PointLike, c: PointLike, d: PointLike,
                tol: float = PROJ_TOL) -> complex:
    """``[a,b,c,d] = (a-c)(b-d) / ((a-d)(b-c))``, evaluated homogeneously.

    Raises DegenerateCrossRatio when ``a = d`` or ``b = c`` projectively.
    """
    a, b, c, d = (as_point(x) for x in (a, b, c, d))
    ad = _det(a, d)
    bc = _det(b, c)
    if abs(ad) <= tol or abs(bc) <= tol:
        raise DegenerateCrossRatio("cross-ratio denominator vanishes")
    return _det(a, c) * _det(b, d) / (ad * bc)


def solve_cross_ratio(a: PointLike, b: PointLike, c: PointLike, value,
                      tol: float = PROJ_TOL) -> ProjPoint:
    """The point ``d`` with ``[a, b, c, d] = value``.

    ``value`` may be a ProjPoint (so ``inf`` is allowed).  The equation is
    linear in the homogeneous pair of ``d``.
    """
    a, b, c = (as_point(x) for x in (a, b, c))
    x = as_point(value)
    ac = _det(a, c)
    bc = _det(b, c)
    # x1 * ac * det(b, d) - x0 * bc * det(a, d) = 0, with det(u, d) = (-u1, u0) . d
    r0 = x.h1 * ac * (-b.h1) - x.h0 * bc * (-a.h1)
    r1 = x.h1 * ac * b.h0 - x.h0 * bc * a.h0
    if abs(r0) + abs(r1) <= tol:
        raise DegenerateCrossRatio("cross-ratio equation does not determine the point")
    return ProjPoint(r1, -r0)


def _triple_frame(p1: ProjPoint, p2: ProjPoint, p3: ProjPoint) -> np.ndarray:
    # matrix sending (inf, 0, 1) to (p1, p2, p3)
    d12 = _det(p1, p2)
    a = _det(p3, p2) / d12
    b = _det(p1, p3) / d12
    return np.array([[a * p1.h0, b * p2.h0], [a * p1.h1, b * p2.h1]])


def _check_triple(pts, tol):
    for i in range(3):
        for j in range(i + 1, 3):
            if chordal_distance(pts[i], pts[j]) <= tol:
                raise DegenerateTriple(f"points {i} and {j} of the triple coincide")


def mobius_from_triples(src: Sequence[PointLike], dst: Sequence[PointLike],
                        tol: float = PROJ_TOL) -> Mobius:
    """The unique Möbius map sending ``src[k]`` to ``dst[k]`` for k = 0, 1, 2."""
    src = [as_point(p) for p in src]
    dst = [as_point(p) for p in dst]
    _check_triple(src, tol)
    _check_triple(dst, tol)
    fs = _triple_frame(*src)
    fd = _triple_frame(*dst)
    (a, b), (c, d) = fs
    fs_inv = np.array([[d, -b], [-c, a]])
    m = fd @ fs_inv
    return Mobius(m / np.linalg.norm(m), check=False)


@dataclass(frozen=True)
class MobiusClass:
    kind: str  # identity | parabolic | elliptic | loxodromic
    fixed_points: tuple
    attracting: Optional[ProjPoint] = None
    repelling: Optional[ProjPoint] = None
    multiplier: Optional[complex] = None


def _eigenvector(m: np.ndarray, lam: complex) -> ProjPoint:
    u = (m[0, 1], lam - m[0, 0])
    v = (lam - m[1, 1], m[1, 0])
    if abs(u[0]) + abs(u[1]) >= abs(v[0]) + abs(v[1]):
        return ProjPoint(*u)
    return ProjPoint(*v)


def eigenvalues_2x2(m) -> tuple:
    """Both eigenvalues, the larger-modulus one first, without cancellation."""
    m = np.asarray(m, dtype=complex)
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    sq = cmath.sqrt(tr * tr - 4 * det)
    big = tr + sq if abs(tr + sq) >= abs(tr - sq) else tr - sq
    if big == 0:
        return 0j, 0j
    lam1 = big / 2
    return lam1, det / lam1


def classify(m: Mobius, parabolic_tol: float = PARABOLIC_TOL,
             elliptic_tol: float = ELLIPTIC_TOL) -> MobiusClass:
    """Fixed points and conjugacy type of a Möbius map.

    Attracting is the fixed point whose multiplier has modulus < 1, i.e. the
    eigenline of the eigenvalue with the larger modulus.
    """
    mat = m.matrix / np.linalg.norm(m.matrix)
    tr = mat[0, 0] + mat[1, 1]
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if np.linalg.norm(mat - (tr / 2) * np.eye(2)) <= parabolic_tol:
        return MobiusClass("identity", (), multiplier=1.0 + 0j)
    if abs(tr * tr / det - 4) <= parabolic_tol:
        fp = _eigenvector(mat, tr / 2)
        return MobiusClass("parabolic", (fp,), multiplier=1.0 + 0j)
    lam1, lam2 = eigenvalues_2x2(mat)
    big = _eigenvector(mat, lam1)
    small = _eigenvector(mat, lam2)
    k = lam2 / lam1  # multiplier at the fixed point `big`
    if abs(abs(k) - 1) <= elliptic_tol:
        return MobiusClass("elliptic", (big, small), multiplier=k)
    return MobiusClass("loxodromic", (big, small), attracting=big, repelling=small,
                       multiplier=k)


def fixed_points(m: Mobius) -> tuple:
    return classify(m).fixed_points


def conjugation_map(alpha: complex, beta: complex, b: PointLike, d: PointLike,
                    tol: float = PROJ_TOL) -> Mobius:
    """The alpha/beta-conjugation with axis (b, d).

    Affine form ``z -> ((beta d - alpha b) z - (beta - alpha) b d) /
    ((beta - alpha) z - (beta b - alpha d))``; it fixes ``b`` and ``d`` and
    sends ``a`` to the ``c`` with ``[a, c, b, d] = alpha / beta``.
    """
    b, d = as_point(b), as_point(d)
    if chordal_distance(b, d) <= tol:
        raise CoincidentAxis("conjugation axis points coincide")
    if alpha == 0 or beta == 0:
        raise ValueError("alpha and beta must be nonzero")
    b0, b1, d0, d1 = b.h0, b.h1, d.h0, d.h1
    mat = np.array([
        [beta * d0 * b1 - alpha * b0 * d1, -(beta - alpha) * b0 * d0],
        [(beta - alpha) * b1 * d1, -(beta * b0 * d1 - alpha * d0 * b1)],
    ])
    return Mobius(mat / np.linalg.norm(mat), check=False)


def shared_fixed_points(m1: Mobius, m2: Mobius, tol: float = 1e-9) -> bool:
    """True when every fixed point of ``m1`` is (projectively) fixed by ``m2``."""
    for p in classify(m1).fixed_points:
        if chordal_distance(mobius_apply(m2, p), p) > tol:
            return False
    return True


def sphere_point(p: PointLike) -> np.ndarray:
    """Image of ``p`` on the unit sphere under inverse stereographic projection."""
    p = as_point(p)
    w = p.h0 * np.conj(p.h1)
    return np.array([2 * w.real, 2 * w.imag, abs(p.h0) ** 2 - abs(p.h1) ** 2])


def spreading_map(points: Sequence[PointLike]) -> Mobius:
    """A Möbius map that spreads a cluster of points over the sphere.

    A rotation of the sphere (unitary, so exactly conditioned) moves the
    spherical centroid of the points to 0, then a dilation makes the median
    modulus 1.  Orbits that collapse can be kept in a well-conditioned chart
    by applying this after every step and remembering the inverse.
    """
    pts = [as_point(p) for p in points]
    c = np.mean([sphere_point(p) for p in pts], axis=0)
    nrm = np.linalg.norm(c)
    if nrm == 0.0:
        u = np.eye(2, dtype=complex)
    else:
        x, y, z = c / nrm
        # homogeneous pair of the sphere point c / |c|, chosen to avoid 0 / 0
        if z < 0:
            a, b = complex(x, y), 1 - z
        else:
            a, b = 1 + z, complex(x, -y)
        s = math.hypot(abs(a), abs(b))
        a, b = a / s, b / s
        u = np.array([[b, -a], [np.conj(a), np.conj(b)]])  # (a, b) -> (0, 1)
    mods = []
    for p in pts:
        h0, h1 = u @ p.vec
        mods.append(abs(h0) / abs(h1) if h1 != 0 else math.inf)
    r = float(np.median(mods))
    if not (0 < r < math.inf):
        r = 1.0
    d = np.array([[1 / math.sqrt(r), 0], [0, math.sqrt(r)]])
    return Mobius(d @ u, check=False)
