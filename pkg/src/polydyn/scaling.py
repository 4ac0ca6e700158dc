"""Scaling symmetries of the three systems.

Each symmetry is a one-parameter multiplicative group action on
(cross-ratio coordinates, curvature) that commutes with the dynamic.  Its
logarithmic derivative at t = 1 feeds the closed-form infinitesimal
monodromy, and :func:`deform_family` opens a closed polygon into the
corresponding family of twisted ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ExcludedParameter
from .polygon import TwistedPolygon, coords, reconstruct

POLE_TOL = 1e-12


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    eta: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("staircase", "flat", "leapfrog"):
            raise ValueError(f"unknown system {self.kind!r}")
        if self.kind == "staircase" and self.eta == 0:
            raise ValueError("eta must be nonzero")

    @classmethod
    def staircase(cls, eta: complex = 1.0) -> "SystemSpec":
        return cls("staircase", complex(eta))

    @classmethod
    def flat(cls) -> "SystemSpec":
        return cls("flat")

    @classmethod
    def leapfrog(cls) -> "SystemSpec":
        return cls("leapfrog")


@dataclass(frozen=True)
class ScaledCoordinates:
    c: np.ndarray
    curvature: Optional[tuple]
    t: complex


def _check_pole(t, pole):
    if abs(t - pole) <= POLE_TOL * max(1.0, abs(pole)):
        raise ExcludedParameter(f"t = {t} is an excluded parameter (pole at {pole})")


def scale_staircase(c, mu, eta, t) -> ScaledCoordinates:
    c = np.asarray(c, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    for m in mu:
        _check_pole(t, 1 - 1 / (eta * m))
    denom = 1 + (t - 1) * eta * mu
    mu_t = t * mu / denom
    # c * t mu / mu(t) simplifies to c * (1 + (t - 1) eta mu)
    return ScaledCoordinates(c * denom, tuple(mu_t), t)


def scale_flat(c, alpha, t) -> ScaledCoordinates:
    c = np.asarray(c, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    kappa = (1 - alpha) / (1 - alpha[0])
    _check_pole(t, 1 / alpha[0])
    for k in kappa:
        if k != 0:
            _check_pole(t, (k - 1) / (k * alpha[0]))
    alpha_t = 1 + kappa * (t * alpha[0] - 1)
    return ScaledCoordinates(c * alpha_t / alpha, tuple(alpha_t), t)


def scale_leapfrog(o_minus, o, t) -> ScaledCoordinates:
    """Scales ``o^-`` by t and leaves ``o`` alone; returns interleaved coordinates."""
    if t == 0:
        raise ExcludedParameter("t = 0")
    o_minus = np.asarray(o_minus, dtype=complex)
    o = np.asarray(o, dtype=complex)
    out = np.empty(2 * len(o), dtype=complex)
    out[0::2] = t * o_minus
    out[1::2] = o
    return ScaledCoordinates(out, None, t)


def scale(spec: SystemSpec, c, curvature, t) -> ScaledCoordinates:
    """Dispatch on the system; for the leapfrog ``c`` is the interleaved 2n-vector."""
    if spec.kind == "staircase":
        return scale_staircase(c, curvature, spec.eta, t)
    if spec.kind == "flat":
        return scale_flat(c, curvature, t)
    c = np.asarray(c, dtype=complex)
    return scale_leapfrog(c[0::2], c[1::2], t)


def _curvature_of(state):
    for attr in ("mu", "alpha"):
        if hasattr(state, attr):
            return getattr(state, attr)
    return state


def log_derivative(spec: SystemSpec, state=None, n: Optional[int] = None) -> np.ndarray:
    """Per-edge ``c_i'(1) / c_i`` of the scaling symmetry.

    ``state`` may be a state object or the bare curvature sequence.  The
    leapfrog needs no curvature, only the number ``n`` of vertices of each
    of its two polygons (or a LeapfrogState); the result has length 2n.
    """
    if spec.kind == "leapfrog":
        if n is None:
            n = state.n
        out = np.zeros(2 * n, dtype=complex)
        out[0::2] = 1.0
        return out
    curv = np.asarray(_curvature_of(state), dtype=complex)
    if spec.kind == "staircase":
        return spec.eta * curv
    return (1 - curv) * curv[0] / ((1 - curv[0]) * curv)


def deform_family(P: TwistedPolygon, spec: SystemSpec, z, curvature=None) -> TwistedPolygon:
    """The chart lift ``P_z``: scale the coordinates by z and rebuild the polygon.

    The result lives in the chart ``p_0 = 1, p_1 = inf, p_2 = 0`` and carries
    the raw (unnormalised) matrix product as monodromy, so the family of
    monodromies is polynomial in z.  For the leapfrog, ``P`` is the
    interleaved 2n-gon.
    """
    scaled = scale(spec, coords(P), curvature, z)
    return reconstruct(scaled.c)
