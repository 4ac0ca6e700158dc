"""The three polygonal transformations on the projective line.

* staircase flips ``phi_j`` and words in them,
* one step of flat cross-ratio dynamics (two branches ``Q+`` / ``Q-``),
* the leapfrog map on pairs of interleaved polygons.

States are immutable; every function returns a new state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateError, DegeneratePolygon, DegenerateStep, ParabolicStep
from .polygon import TwistedPolygon, coords
from .projgeom import (
    Mobius,
    ProjPoint,
    classify,
    conjugation_map,
    mobius_apply,
    mobius_from_triples,
    solve_cross_ratio,
)


@dataclass(frozen=True, eq=False)
class StaircaseState:
    polygon: TwistedPolygon
    mu: tuple  # mu[i-1] lives on the edge (p_i, p_{i+1})

    def __post_init__(self):
        mu = tuple(complex(m) for m in self.mu)
        if len(mu) != self.polygon.n:
            raise ValueError("need one curvature value per edge")
        if any(m == 0 for m in mu):
            raise ValueError("discrete curvature must be nonzero")
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.polygon.n


@dataclass(frozen=True)
class FlipWord:
    letters: tuple

    @classmethod
    def sweep(cls, n: int) -> "FlipWord":
        """``psi = phi_n o ... o phi_1``: flip 1 first, n last."""
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def parse(cls, text: str, n: int) -> "FlipWord":
        text = text.strip()
        if text.lower() == "sweep":
            return cls.sweep(n)
        if not text:
            return cls(())
        return cls(tuple(int(tok) for tok in text.split(",")))

    def reversed(self) -> "FlipWord":
        return FlipWord(tuple(reversed(self.letters)))

    def __len__(self):
        return len(self.letters)


def staircase_flip(s: StaircaseState, j: int) -> StaircaseState:
    """Flip at index j: ``p_j <- h^{mu_j / mu_{j-1}}_{p_{j+1}, p_{j-1}}(p_j)``, swap mu_{j-1}, mu_j."""
    P = s.polygon
    n = P.n
    j = (j - 1) % n + 1
    mu = list(s.mu)
    mu_prev, mu_j = mu[(j - 2) % n], mu[j - 1]
    h = conjugation_map(mu_j, mu_prev, P.vertex(j + 1), P.vertex(j - 1))
    new_p = mobius_apply(h, P.vertices[j - 1])
    mu[(j - 2) % n], mu[j - 1] = mu_j, mu_prev
    try:
        return StaircaseState(P.replace_vertex(j, new_p), tuple(mu))
    except DegeneratePolygon as exc:
        raise DegenerateStep(f"flip at {j} produced a degenerate polygon") from exc


def apply_word(s: StaircaseState, w) -> StaircaseState:
    """Apply the letters of ``w`` left to right (first letter first)."""
    letters = w.letters if isinstance(w, FlipWord) else tuple(w)
    for j in letters:
        s = staircase_flip(s, j)
    return s


# --- flat cross-ratio dynamics ------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlatState:
    polygon: TwistedPolygon
    alpha: tuple

    def __post_init__(self):
        alpha = tuple(complex(a) for a in self.alpha)
        if len(alpha) != self.polygon.n:
            raise ValueError("need one alpha per edge")
        if any(a == 0 or a == 1 for a in alpha):
            raise ValueError("alpha_i must avoid 0 and 1")
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.polygon.n


class FlatBranch(NamedTuple):
    state: FlatState
    x: np.ndarray  # x_i = [p_i, p_{i+1}, p_{i-1}, q_i]
    y: np.ndarray  # y_i = [q_i, q_{i+1}, q_{i-1}, p_i]


def _branch_key(p: ProjPoint):
    if p.is_infinity:
        return (1, 0.0, 0.0)
    z = p.value
    return (0, z.real, z.imag)


def flat_transfer_matrix(c: Sequence[complex], alpha: Sequence[complex]) -> np.ndarray:
    """Matrix of ``x_1 -> x_{n+1}``, composing ``x -> 1 - c_i / (alpha_i x)``."""
    m = np.eye(2, dtype=complex)
    for ci, ai in zip(c, alpha):
        step = np.array([[ai, -ci], [ai, 0.0]], dtype=complex)
        m = step @ m
        m /= np.linalg.norm(m)
    return m


def flat_branches(s: FlatState) -> tuple:
    """Both alpha-related polygons with their auxiliary x, y data, in branch order."""
    P, alpha = s.polygon, s.alpha
    n = P.n
    c = coords(P)
    F = Mobius(flat_transfer_matrix(c, alpha), check=False)
    cls = classify(F)
    if cls.kind == "parabolic":
        raise ParabolicStep("the two flat branches coincide")
    if cls.kind == "identity":
        raise DegenerateStep("transfer map is the identity; branches are not isolated")
    starts = sorted(cls.fixed_points, key=_branch_key)
    ratio = [(1 - alpha[i]) / (1 - alpha[i - 1]) for i in range(n)]
    out = []
    for x1 in starts:
        xs = [x1]
        for i in range(n - 1):
            a, ci = alpha[i], c[i]
            x = xs[-1]
            xs.append(ProjPoint(a * x.h0 - ci * x.h1, a * x.h0))
        qs = []
        for i in range(1, n + 1):
            try:
                qs.append(solve_cross_ratio(P.vertex(i), P.vertex(i + 1), P.vertex(i - 1), xs[i - 1]))
            except DegenerateError as exc:
                raise DegenerateStep(f"cannot solve for q_{i}") from exc
        try:
            Q = TwistedPolygon(n, tuple(qs), P.monodromy)
        except DegeneratePolygon as exc:
            raise DegenerateStep("flat step produced a degenerate polygon") from exc
        xv = np.array([x.value for x in xs])
        yv = np.array([(1 - xv[i]) / (1 + xv[i] * (ratio[i] - 1)) for i in range(n)])
        out.append(FlatBranch(FlatState(Q, alpha), xv, yv))
    return tuple(out)


def flat_step(s: FlatState) -> tuple:
    """``(Q+, Q-)``: the two states alpha-related to ``s``."""
    plus, minus = flat_branches(s)
    return plus.state, minus.state


def flat_next(prev: FlatState, cur: FlatState) -> FlatState:
    """Continue a flat orbit: the partner of ``cur`` that is not ``prev``."""
    a, b = flat_step(cur)
    if a.polygon.distance(prev.polygon) <= b.polygon.distance(prev.polygon):
        return b
    return a


# --- leapfrog map -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LeapfrogState:
    s_minus: tuple
    s: tuple
    monodromy: Mobius

    def __post_init__(self):
        sm = tuple(ProjPoint.from_value(p) for p in self.s_minus)
        ss = tuple(ProjPoint.from_value(p) for p in self.s)
        if len(sm) != len(ss):
            raise ValueError("S- and S must have the same length")
        object.__setattr__(self, "s_minus", sm)
        object.__setattr__(self, "s", ss)
        self.interleaved()  # validates the 2n-gon

    @property
    def n(self) -> int:
        return len(self.s)

    def interleaved(self) -> TwistedPolygon:
        """The 2n-gon ``(s_1^-, s_1, s_2^-, s_2, ...)``."""
        verts = []
        for a, b in zip(self.s_minus, self.s):
            verts += [a, b]
        return TwistedPolygon(2 * self.n, tuple(verts), self.monodromy)

    @classmethod
    def from_interleaved(cls, P: TwistedPolygon) -> "LeapfrogState":
        if P.n % 2:
            raise ValueError("interleaved polygon must have an even number of vertices")
        return cls(P.vertices[0::2], P.vertices[1::2], P.monodromy)

    def s_vertex(self, i: int) -> ProjPoint:
        return _periodic(self.s, self.monodromy, i)


def _periodic(window, M: Mobius, i: int) -> ProjPoint:
    n = len(window)
    k, r = divmod(i - 1, n)
    p = window[r]
    step = M if k > 0 else M.inverse()
    for _ in range(abs(k)):
        p = mobius_apply(step, p)
    return p


def leapfrog_move(prev: ProjPoint, mid: ProjPoint, nxt: ProjPoint) -> Mobius:
    """The involution fixing ``mid`` and swapping ``prev`` with ``nxt``."""
    return mobius_from_triples((prev, mid, nxt), (nxt, mid, prev))


def _leapfrog_push(base: tuple, moved: tuple, M: Mobius) -> tuple:
    n = len(base)
    out = []
    for i in range(1, n + 1):
        g = leapfrog_move(_periodic(base, M, i - 1), base[i - 1], _periodic(base, M, i + 1))
        out.append(mobius_apply(g, moved[i - 1]))
    return tuple(out)


def leapfrog_step(st: LeapfrogState) -> LeapfrogState:
    """``(S-, S) -> (S, S+)``."""
    s_plus = _leapfrog_push(st.s, st.s_minus, st.monodromy)
    try:
        return LeapfrogState(st.s, s_plus, st.monodromy)
    except DegeneratePolygon as exc:
        raise DegenerateStep("leapfrog step produced a degenerate polygon") from exc


def leapfrog_step_back(st: LeapfrogState) -> LeapfrogState:
    """Inverse of :func:`leapfrog_step`: ``(S, S+) -> (S-, S)``."""
    s_minus = _leapfrog_push(st.s_minus, st.s, st.monodromy)
    try:
        return LeapfrogState(s_minus, st.s_minus, st.monodromy)
    except DegeneratePolygon as exc:
        raise DegenerateStep("leapfrog step produced a degenerate polygon") from exc


def transform_state(state, g: Mobius):
    """Simultaneous Möbius action on any of the three state types."""
    if isinstance(state, StaircaseState):
        return StaircaseState(state.polygon.transform(g), state.mu)
    if isinstance(state, FlatState):
        return FlatState(state.polygon.transform(g), state.alpha)
    if isinstance(state, LeapfrogState):
        return LeapfrogState.from_interleaved(state.interleaved().transform(g))
    raise TypeError(type(state))


def random_curvature(rng: np.random.Generator, n: int, avoid_one: bool = False,
                     rmin: float = 0.5, rmax: float = 2.0, gap: float = 0.05) -> tuple:
    """n values uniform on the annulus ``rmin <= |z| <= rmax``."""
    out = []
    while len(out) < n:
        r = np.sqrt(rng.uniform(rmin ** 2, rmax ** 2))
        z = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if avoid_one and abs(z - 1) < gap:
            continue
        out.append(complex(z))
    return tuple(out)


def iter_word(s: StaircaseState, letters: Iterable[int]):
    """Yield the state after each single flip."""
    for j in letters:
        s = staircase_flip(s, j)
        yield s
