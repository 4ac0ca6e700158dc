"""Experiment engine: collapse runs, conjecture scans, special staircases, relation suites.

Long orbits collapse, so a polygon stored in a fixed chart soon has all of
its vertices within a few ulps of each other and every further step loses
accuracy.  :class:`Orbit` avoids this by keeping the state in a working chart
that is re-spread after every step (all three dynamics commute with Möbius
maps) and remembering the accumulated chart map.  Quantities of the actual
orbit are recovered through that map.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .dynamics import (
    FlatState,
    FlipWord,
    LeapfrogState,
    StaircaseState,
    apply_word,
    flat_next,
    flat_step,
    leapfrog_step,
    leapfrog_step_back,
    random_curvature,
    staircase_flip,
    transform_state,
)
from .errors import DegenerateError, NoCyclicPlacement, PolyDynError
from .invariants import (
    CollapseCandidates,
    g_invariant,
    ijk_affine,
    monodromy_matrix,
    omega_affine,
    predict_collapse,
    w_correction,
)
from .polygon import TwistedPolygon, coords, random_closed_polygon, random_mobius, reconstruct
from .projgeom import (
    INF,
    ZERO,
    Mobius,
    MobiusClass,
    ProjPoint,
    as_point,
    chordal_distance,
    classify,
    mobius_apply,
    mobius_from_triples,
    spreading_map,
)
from .scaling import SystemSpec, log_derivative, scale

VERDICTS = ("collapsed-to-candidate", "periodic", "recurrent",
            "diverged-from-candidates", "inconclusive")

TRACE_COLUMNS = ("iteration", "vertex_index", "re", "im", "dist_candidate_0", "dist_candidate_1",
                 "I_re", "I_im", "J_re", "J_im", "K_re", "K_im")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one trial.

    ``vertices`` (affine values, ``"inf"`` allowed) overrides the random
    polygon; for the leapfrog they are the interleaved 2n-gon
    ``(s_1^-, s_1, ...)`` and ``n`` counts the vertices of each polygon.
    ``curvature`` is ``"random"``, an explicit list, or ``"special"`` (only
    meaningful together with ``special``).
    """
    system: str = "staircase"
    eta: complex = 1.0
    n: int = 5
    seed: int = 0
    vertices: Optional[list] = None
    curvature: object = "random"
    special: Optional[dict] = None  # {"kind": "parabolic" | "geometric" | "from_lambda", "q":, "lam":}
    word: Optional[str] = None  # staircase only; default one sweep
    iterations: int = 200
    direction: str = "forward"
    collapse_tol: float = 1e-4
    drift_tol: float = 1e-6
    monotone_window: int = 10
    max_condition: float = 1e6
    stop_on_collapse: bool = True
    trace_path: Optional[str] = None
    report_path: Optional[str] = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction is 'forward' or 'backward'")
        SystemSpec(self.system, complex(self.eta))  # validates

    @property
    def spec(self) -> SystemSpec:
        return SystemSpec(self.system, complex(self.eta))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eta"] = [complex(self.eta).real, complex(self.eta).imag]
        if isinstance(self.curvature, (list, tuple)):
            d["curvature"] = [[complex(c).real, complex(c).imag] for c in self.curvature]
        if self.vertices is not None:
            d["vertices"] = [_encode_value(v) for v in self.vertices]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "eta" in d:
            d["eta"] = _decode_complex(d["eta"])
        if isinstance(d.get("curvature"), list):
            d["curvature"] = [_decode_complex(c) for c in d["curvature"]]
        if d.get("vertices") is not None:
            d["vertices"] = [_decode_value(v) for v in d["vertices"]]
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _encode_value(v):
    p = as_point(v)
    if p.is_infinity:
        return "inf"
    return [p.value.real, p.value.imag]


def _decode_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _decode_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


# --- building states ----------------------------------------------------------

def build_state(config: ExperimentConfig):
    """Initial state of the configured system (deterministic in the seed)."""
    if config.special is not None:
        kind = config.special.get("kind", "parabolic")
        state, _, _ = special_staircase(config.n, kind, q=config.special.get("q"),
                                        lam=config.special.get("lam"))
        return state
    rng = np.random.default_rng(config.seed)
    n = config.n
    size = 2 * n if config.system == "leapfrog" else n
    if config.vertices is not None:
        P = TwistedPolygon.from_values(config.vertices)
        if P.n != size:
            raise ValueError(f"expected {size} vertices, got {P.n}")
    else:
        P = random_closed_polygon(rng, size)
    if config.system == "leapfrog":
        return LeapfrogState.from_interleaved(P)
    if isinstance(config.curvature, str):
        if config.curvature != "random":
            raise ValueError(f"curvature source {config.curvature!r} needs a special configuration")
        curv = random_curvature(rng, n, avoid_one=config.system == "flat")
    else:
        curv = tuple(complex(c) for c in config.curvature)
    if config.system == "staircase":
        return StaircaseState(P, curv)
    return FlatState(P, curv)


def state_polygon(state) -> TwistedPolygon:
    if isinstance(state, LeapfrogState):
        return state.interleaved()
    return state.polygon


def state_curvature(state):
    if isinstance(state, StaircaseState):
        return state.mu
    if isinstance(state, FlatState):
        return state.alpha
    return None


def state_logderiv(spec: SystemSpec, state) -> np.ndarray:
    if isinstance(state, LeapfrogState):
        return log_derivative(spec, n=state.n)
    return log_derivative(spec, state_curvature(state))


def _conjugate(g: np.ndarray, m: np.ndarray) -> np.ndarray:
    (a, b), (c, d) = g
    det = a * d - b * c
    if det == 0:
        return np.full((2, 2), np.nan + 0j)  # chart no longer invertible in floating point
    return g @ m @ (np.array([[d, -b], [-c, a]]) / det)


# --- orbits in a renormalised chart ------------------------------------------

class Orbit:
    """Forward or backward orbit of a state, kept in a well-spread working chart.

    ``chart`` maps the working chart to the actual one, so the actual
    polygon is ``chart . working``.  Every quantity that is not Möbius
    invariant is pulled back through ``chart``.
    """

    def __init__(self, state, spec: SystemSpec, word: Optional[FlipWord] = None,
                 direction: str = "forward", renormalize: bool = True):
        self.spec = spec
        self.direction = direction
        self.renormalize = renormalize
        self.state = state
        self.prev = None  # flat orbits remember where they came from
        self.chart = np.eye(2, dtype=complex)
        self.steps = 0
        if isinstance(state, StaircaseState):
            word = word or FlipWord.sweep(state.n)
            self.word = word.reversed() if direction == "backward" else word
        else:
            self.word = None

    def _advance(self, state):
        if isinstance(state, StaircaseState):
            return apply_word(state, self.word)
        if isinstance(state, FlatState):
            if self.prev is None:
                plus, minus = flat_step(state)
                return plus if self.direction == "forward" else minus
            return flat_next(self.prev, state)
        if self.direction == "forward":
            return leapfrog_step(state)
        return leapfrog_step_back(state)

    def step(self):
        new = self._advance(self.state)
        self.prev, self.state = self.state, new
        self.steps += 1
        if self.renormalize:
            g = spreading_map(state_polygon(new).vertices)
            self.state = transform_state(new, g)
            if self.prev is not None and isinstance(new, FlatState):
                self.prev = transform_state(self.prev, g)
            (a, b), (c, d) = g.matrix
            chart = self.chart @ np.array([[d, -b], [-c, a]])
            self.chart = chart / np.linalg.norm(chart)
        return self

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.chart))

    def actual_vertices(self) -> List[ProjPoint]:
        m = Mobius(self.chart, check=False)
        return [mobius_apply(m, p) for p in state_polygon(self.state).vertices]

    def actual_state(self):
        """The state in the original chart (loses accuracy once collapsed)."""
        return transform_state(self.state, Mobius(self.chart, check=False))

    def infinitesimal_matrix(self) -> np.ndarray:
        """Closed-form M' of the actual polygon, ``chart M'_work chart^-1``."""
        work = monodromy_matrix(state_polygon(self.state), state_logderiv(self.spec, self.state))
        return _conjugate(self.chart, work)

    def ijk(self) -> tuple:
        m = self.infinitesimal_matrix()
        return complex(m[1, 0]), complex((m[0, 0] - m[1, 1]) / 2), complex(-m[0, 1])

    def delta(self) -> complex:
        """J^2 - IK read in the working chart.

        Delta is conjugation invariant, so this avoids the chart entirely;
        the pulled-back I, J, K lose accuracy as the chart degenerates.
        """
        m = monodromy_matrix(state_polygon(self.state), state_logderiv(self.spec, self.state))
        J = (m[0, 0] - m[1, 1]) / 2
        return complex(J * J + m[1, 0] * m[0, 1])

    def g_values(self, ks: Sequence[int]) -> dict:
        """G_k are Möbius invariant, so they are read in the working chart."""
        P = state_polygon(self.state)
        if any(p.is_infinity for p in P.vertices):
            P = P.transform(Mobius([[1, 0], [1, 3]]))
        ell = state_logderiv(self.spec, self.state)
        return {k: g_invariant(P, ell, k) for k in ks}


# --- collapse runs ------------------------------------------------------------

@dataclass
class CollapseReport:
    config: dict
    candidates: CollapseCandidates
    labels: tuple
    distances: np.ndarray  # (iterations + 1, #candidates); row 0 is the start
    diameters: np.ndarray  # max pairwise chordal distance of the vertices
    invariants: dict  # name -> complex series, row 0 is the start
    drift: dict  # name -> max scaled drift over the run
    verdict: str
    collapsed_to: Optional[int] = None
    iterations: int = 0
    valid: bool = True
    nearest: Optional[int] = None  # candidate closest to the final polygon
    rate: Optional[float] = None  # fitted log10 distance change per iteration (second half)
    step_class: Optional[str] = None  # class of the Möbius map P_0 -> P_1, if any
    stop_reason: str = ""
    error: Optional[str] = None
    trace: list = field(default_factory=list, repr=False)

    @property
    def final_distance(self) -> float:
        if self.collapsed_to is not None:
            return float(self.distances[-1, self.collapsed_to])
        return float(self.distances[-1].min()) if len(self.distances) else math.nan

    @property
    def max_drift(self) -> float:
        return max(self.drift.values()) if self.drift else 0.0

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "collapsed_to": self.collapsed_to,
            "label": self.labels[self.collapsed_to] if self.collapsed_to is not None else None,
            "iterations": self.iterations,
            "final_distance": self.final_distance,
            "nearest": self.nearest,
            "nearest_label": self.labels[self.nearest] if self.nearest is not None else None,
            "nearest_distance": float(self.distances[-1].min()) if len(self.distances) else None,
            "max_drift": self.max_drift,
            "drift": self.drift,
            "valid": self.valid,
            "rate": self.rate,
            "step_class": self.step_class,
            "stop_reason": self.stop_reason,
            "error": self.error,
            "candidates": [_encode_value(r) for r in self.candidates.roots],
            "labels": list(self.labels),
            "I": _pair(self.candidates.I), "J": _pair(self.candidates.J),
            "K": _pair(self.candidates.K),
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        write_trace(self, buf)
        return buf.getvalue()


def _pair(z: complex):
    return [z.real, z.imag]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(report: CollapseReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in report.trace:
        w.writerow(row)


def _trace_rows(it: int, verts, cands, ijk) -> list:
    rows = []
    I, J, K = ijk
    for idx, p in enumerate(verts, start=1):
        if p.is_infinity:
            re, im = "inf", ""
        else:
            re, im = _fmt(p.value.real), _fmt(p.value.imag)
        d = [_fmt(chordal_distance(p, r)) for r in cands]
        d += [""] * (2 - len(d))
        rows.append([it, idx, re, im, d[0], d[1], _fmt(I.real), _fmt(I.imag),
                     _fmt(J.real), _fmt(J.imag), _fmt(K.real), _fmt(K.imag)])
    return rows


def _diameter(verts) -> float:
    return max(chordal_distance(p, q) for i, p in enumerate(verts) for q in verts[i + 1:])


def _step_class(v0, v1, tol: float = 1e-8) -> Optional[str]:
    """Kind of the Möbius map taking the vertices v0 to v1, or None if there is none."""
    try:
        g = mobius_from_triples(v0[:3], v1[:3])
    except PolyDynError:
        return None
    if all(chordal_distance(mobius_apply(g, p), q) <= tol for p, q in zip(v0, v1)):
        return classify(g).kind
    return None


def _fit_rate(d: np.ndarray) -> Optional[float]:
    d = d[d > 0]
    if len(d) < 3:
        return None
    slope = np.polyfit(np.arange(len(d)), np.log10(d), 1)[0]
    return float(slope)


def run_collapse(config: ExperimentConfig, state=None, keep_trace: bool = True) -> CollapseReport:
    """Iterate the dynamic and compare the orbit with the predicted collapse points."""
    spec = config.spec
    if state is None:
        state = build_state(config)
    P0 = state_polygon(state)
    cands = predict_collapse(P0, spec, state_curvature(state))
    roots = cands.roots
    word = None
    if isinstance(state, StaircaseState) and config.word:
        word = FlipWord.parse(config.word, state.n)
    orbit = Orbit(state, spec, word=word, direction=config.direction)
    size = P0.n
    ks = list(range(1, min(3, size // 2) + 1))

    I0, J0, K0 = orbit.ijk()
    scale = max(abs(I0), abs(J0), abs(K0)) or 1.0
    series = {"I": [I0], "J": [J0], "K": [K0], "Delta": [orbit.delta()]}
    for k, v in orbit.g_values(ks).items():
        series[f"G{k}"] = [v]
    verts = orbit.actual_vertices()
    dists = [[max(chordal_distance(p, r) for p in verts) for r in roots]]
    diams = [_diameter(verts)]
    trace = _trace_rows(0, verts, roots, (I0, J0, K0)) if keep_trace else []

    error, stop_reason, collapsed_to = None, "iterations", None
    periodic = False
    closest_return = math.inf
    step_class = None
    win = config.monotone_window
    for it in range(1, config.iterations + 1):
        try:
            orbit.step()
            I, J, K = orbit.ijk()
            D = orbit.delta()
            gv = orbit.g_values(ks)
        except DegenerateError as exc:
            error = f"{type(exc).__name__}: {exc}"
            stop_reason = "degenerate step"
            break
        series["I"].append(I)
        series["J"].append(J)
        series["K"].append(K)
        series["Delta"].append(D)
        for k, v in gv.items():
            series[f"G{k}"].append(v)
        verts = orbit.actual_vertices()
        dists.append([max(chordal_distance(p, r) for p in verts) for r in roots])
        diams.append(_diameter(verts))
        if keep_trace:
            trace += _trace_rows(it, verts, roots, (I, J, K))
        if it == 1:
            step_class = _step_class(P0.vertices, verts)
        ret = max(chordal_distance(p, q) for p, q in zip(verts, P0.vertices))
        closest_return = min(closest_return, ret)
        if ret <= 1e-8 and _same_curvature(state, orbit.state):
            periodic = True
            stop_reason = "returned to start"
            break
        d = np.array(dists)
        if config.stop_on_collapse and len(d) > win:
            idx = int(np.argmin(d[-1]))
            tail = d[-win - 1:, idx]
            if d[-1, idx] <= config.collapse_tol and np.all(np.diff(tail) <= 0):
                stop_reason = "collapsed"
                break
        if orbit.condition > config.max_condition:
            stop_reason = "chart condition limit"
            break

    dists = np.array(dists)
    diams = np.array(diams)
    inv = {k: np.array(v) for k, v in series.items()}
    drift = {}
    for name in ("I", "J", "K"):
        drift[name] = float(np.max(np.abs(inv[name] - inv[name][0]))) / scale
    drift["Delta"] = float(np.max(np.abs(inv["Delta"] - inv["Delta"][0]))) / max(
        abs(inv["Delta"][0]), scale * scale)
    for k in ks:
        g = inv[f"G{k}"]
        drift[f"G{k}"] = float(np.max(np.abs(g - g[0]))) / max(1.0, abs(g[0]))
    valid = bool(max(drift.values()) <= config.drift_tol)

    verdict = "inconclusive"
    if periodic:
        verdict = "periodic"
    elif len(dists) > win:
        idx = int(np.argmin(dists[-1]))
        tail = dists[-win - 1:, idx]
        if dists[-1, idx] <= config.collapse_tol and np.all(np.diff(tail) <= 0):
            verdict, collapsed_to = "collapsed-to-candidate", idx
    nearest = int(np.argmin(dists[-1]))
    if verdict == "inconclusive" and error is None:
        # a tight cluster away from every candidate, no longer approaching one
        approaching = dists[-1, nearest] < 0.9 * dists[len(dists) // 2, nearest]
        if diams[-1] <= config.collapse_tol and dists[-1].min() > 10 * config.collapse_tol \
                and not approaching:
            verdict = "diverged-from-candidates"
        elif closest_return <= 1e-2 and diams.min() > config.collapse_tol:
            verdict = "recurrent"
    rate = _fit_rate(dists[len(dists) // 2:, nearest])

    report = CollapseReport(
        config=config.to_dict(), candidates=cands, labels=cands.labels(), distances=dists,
        diameters=diams, invariants=inv, drift=drift, verdict=verdict, collapsed_to=collapsed_to,
        iterations=len(dists) - 1, valid=valid, nearest=nearest, rate=rate, step_class=step_class,
        stop_reason=stop_reason, error=error, trace=trace)
    if config.trace_path:
        with open(config.trace_path, "w", newline="") as fh:
            write_trace(report, fh)
    if config.report_path:
        with open(config.report_path, "w") as fh:
            json.dump(report.summary(), fh, indent=2)
    return report


def _same_curvature(a, b) -> bool:
    ca, cb = state_curvature(a), state_curvature(b)
    if ca is None:
        return True
    return max(abs(x - y) for x, y in zip(ca, cb)) <= 1e-8 * max(1.0, max(abs(x) for x in ca))


# --- conjecture scans ---------------------------------------------------------

def _trial(args):
    base, idx = args
    cfg = ExperimentConfig.from_dict({**base, "seed": base["seed"] + idx,
                                      "trace_path": None, "report_path": None})
    try:
        rep = run_collapse(cfg, keep_trace=False)
        return idx, rep.summary()
    except PolyDynError as exc:
        return idx, {"verdict": "inconclusive", "error": f"{type(exc).__name__}: {exc}",
                     "valid": False, "max_drift": math.nan, "collapsed_to": None,
                     "final_distance": math.nan, "label": None, "iterations": 0}


def scan_conjecture(config: ExperimentConfig, trials: int, workers: int = 1) -> dict:
    """Run ``trials`` seeded collapse trials (seeds ``seed, seed+1, ...``) and aggregate.

    Nothing is asserted; the result is data.  Rows are keyed by trial index,
    so parallel runs give the same rows as serial ones.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    base = config.to_dict()
    jobs = [(base, i) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(_trial, jobs))
    else:
        results = dict(map(_trial, jobs))
    rows = [dict(trial=i, seed=config.seed + i, **results[i]) for i in range(trials)]
    counts = {v: 0 for v in VERDICTS}
    for r in rows:
        counts[r["verdict"]] += 1
    usable = [r for r in rows if r.get("valid") and r.get("error") is None]
    collapsed = [r for r in usable if r["verdict"] == "collapsed-to-candidate"]
    which = {}
    for r in collapsed:
        key = r.get("label") or f"root{r['collapsed_to']}"
        which[key] = which.get(key, 0) + 1
    drifts = [r["max_drift"] for r in rows if not math.isnan(r.get("max_drift", math.nan))]
    # diagnostics, not verdicts: how many orbits end near a candidate and are still approaching it
    near = [r for r in usable if (r.get("nearest_distance") or math.inf) <= config.collapse_tol]
    converging = [r for r in near if r.get("rate") is not None and r["rate"] < 0]
    return {
        "trials": trials,
        "valid_trials": len(usable),
        "invalid_trials": [r["trial"] for r in rows if not r.get("valid")],
        "verdicts": counts,
        "fraction_collapsed": len(collapsed) / len(usable) if usable else 0.0,
        "collapsed_to": which,
        "fraction_within_tol": len(near) / len(usable) if usable else 0.0,
        "fraction_converging": len(converging) / len(usable) if usable else 0.0,
        "max_drift": max(drifts) if drifts else math.nan,
        "rows": rows,
    }


def scan_rows_csv(result: dict) -> str:
    cols = ["trial", "seed", "verdict", "collapsed_to", "label", "iterations",
            "final_distance", "max_drift", "valid", "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in result["rows"]:
        w.writerow([r.get(c, "") for c in cols])
    return buf.getvalue()


# --- special staircase configurations ----------------------------------------

def q_polynomial(n: int, lam: complex) -> np.ndarray:
    """Coefficients (highest degree first) of ``(1 + q + ... + q^(n-2))^2 - lam q^(n-2)``."""
    ones = np.ones(n - 1, dtype=complex)
    coef = np.convolve(ones, ones)
    coef[n - 2] -= lam
    return coef


def geometric_lambda(n: int, q: complex) -> complex:
    return (1 - q ** (n - 1)) * (q ** n - q) / ((q ** (n - 1) - q ** n) * (q - 1))


def palindromic_defect(roots: Sequence[complex]) -> float:
    """Worst distance from ``1/r`` to the nearest root, over all roots r."""
    roots = np.asarray(roots, dtype=complex)
    return float(max(np.min(np.abs(roots - 1 / r)) for r in roots))


def _root_of_unity_order(q: complex, max_order: int = 1000, tol: float = 1e-9) -> Optional[int]:
    if abs(abs(q) - 1) > tol:
        return None
    for m in range(1, max_order + 1):
        if abs(q ** m - 1) <= tol * m:
            return m
    return None


@dataclass
class SpecialReport:
    kind: str
    n: int
    lam: complex
    q: Optional[complex]
    placement: Optional[int]  # 0-based edge carrying lam that works
    placements_tried: dict  # placement -> error
    image_error: float
    dynamic: str  # parabolic | loxodromic | periodic | recurrent
    order: Optional[int] = None
    roots: Optional[list] = None
    palindromic_defect: Optional[float] = None
    q_residual: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("lam", "q"):
            if d[key] is not None:
                d[key] = _pair(complex(d[key]))
        if d["roots"] is not None:
            d["roots"] = [_pair(complex(r)) for r in d["roots"]]
        return d


def special_staircase(n: int, kind: str = "parabolic", q: complex = None, lam: complex = None,
                      tol: float = 1e-9):
    """Closed staircase n-gons whose sweep is a Möbius map.

    * ``parabolic``: ``P = (0, 1, ..., n-1)``, curvature ``(1, ..., 1, (n-1)^2)``;
      one sweep is ``z -> z + n``.
    * ``geometric``: ``P = (1, q, ..., q^(n-1))`` with lam from q; one sweep is
      ``z -> q^n z``.
    * ``from_lambda``: solve ``Q_n(q, lam) = 0`` for q (roots pair up as q, 1/q),
      take the root of largest modulus and build the geometric configuration.

    The edge carrying lam is searched over all n cyclic placements; the first
    one whose sweep reproduces the expected image is used.  Returns
    ``(state, expected class, report)``.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    roots = defect = None
    if kind == "from_lambda":
        if lam is None or lam == 0:
            raise ValueError("from_lambda needs a nonzero lam")
        lam = complex(lam)
        roots = np.roots(q_polynomial(n, lam))
        defect = palindromic_defect(roots)
        q = max(roots, key=lambda r: (round(abs(r), 12), r.real, r.imag))
        kind_eff = "parabolic" if abs(q - 1) <= 1e-6 else "geometric"
    elif kind == "geometric":
        if q is None or q == 0:
            raise ValueError("geometric needs a nonzero q")
        kind_eff = "geometric"
    elif kind == "parabolic":
        kind_eff = "parabolic"
    else:
        raise ValueError(f"unknown special kind {kind!r}")

    if kind_eff == "parabolic":
        lam_used = complex((n - 1) ** 2)
        values = np.arange(n, dtype=complex)
        expected_map = Mobius([[1, n], [0, 1]])
        q_used = None
    else:
        q = complex(q)
        if abs(q - 1) <= 1e-12 or abs(q + 1) <= 1e-12:
            raise DegenerateError("q = +-1 gives a degenerate polygon")
        lam_formula = geometric_lambda(n, q)
        lam_used = complex(lam) if kind == "from_lambda" else lam_formula
        values = q ** np.arange(n)
        expected_map = Mobius([[q ** n, 0], [0, 1]])
        q_used = q
    P = TwistedPolygon.from_values(values)
    expected_vals = np.array([mobius_apply(expected_map, p).value for p in P.vertices])

    tried = {}
    placement, best = None, math.inf
    for pos in [n - 1] + list(range(n - 1)):
        mu = [1.0] * n
        mu[pos] = lam_used
        try:
            out = apply_word(StaircaseState(P, mu), FlipWord.sweep(n))
        except PolyDynError:
            tried[pos] = math.inf
            continue
        got = out.polygon.values()
        err = float(np.max(np.abs(got - expected_vals) / np.maximum(1.0, np.abs(expected_vals))))
        if kind_eff == "parabolic":
            err = float(np.max(np.abs(got - expected_vals)))
        tried[pos] = err
        if err <= tol and placement is None:
            placement, best = pos, err
    if placement is None:
        raise NoCyclicPlacement(f"no placement of lam reproduces the expected sweep (errors {tried})")

    mu = [1.0] * n
    mu[placement] = lam_used
    state = StaircaseState(P, mu)
    expected = classify(expected_map)
    order = None
    if kind_eff == "parabolic":
        dynamic = "parabolic"
    elif abs(abs(q_used) - 1) > 1e-9:
        dynamic = "loxodromic"
    else:
        order = _root_of_unity_order(q_used ** n)
        dynamic = "periodic" if order is not None else "recurrent"
    q_res = None
    if q_used is not None:
        coef = q_polynomial(n, lam_used)
        q_res = float(abs(np.polyval(coef, q_used)) / np.sum(np.abs(coef) * max(1, abs(q_used)) ** (2 * n - 4)))
    report = SpecialReport(kind, n, lam_used, q_used, placement, tried, best, dynamic, order,
                           None if roots is None else list(roots), defect, q_res)
    return state, expected, report


# --- group relations ----------------------------------------------------------

def _random_staircase(rng, n) -> StaircaseState:
    return StaircaseState(random_closed_polygon(rng, n), random_curvature(rng, n))


def _deviation(a: StaircaseState, b: StaircaseState) -> float:
    return a.polygon.distance(b.polygon)


def relations_suite(n: int, trials: int = 100, seed: int = 0, tol: float = 1e-9) -> dict:
    """Worst chordal deviations of the flip relations on random staircase states.

    Checks ``phi_j^2 = id``, ``phi_i phi_j = phi_j phi_i`` for cyclic distance
    >= 2 and the braid relation ``phi_j phi_(j+1) phi_j = phi_(j+1) phi_j phi_(j+1)``.
    The curvature must also match, exactly, after each relation.
    """
    rng = np.random.default_rng(seed)
    worst = {"involution": 0.0, "commutation": 0.0, "braid": 0.0}
    curv_ok = True
    for _ in range(trials):
        s = _random_staircase(rng, n)
        j = int(rng.integers(1, n + 1))
        twice = staircase_flip(staircase_flip(s, j), j)
        worst["involution"] = max(worst["involution"], _deviation(twice, s))
        curv_ok &= np.allclose(twice.mu, s.mu, rtol=0, atol=0)
        if n >= 4:
            far = [i for i in range(1, n + 1) if min((i - j) % n, (j - i) % n) >= 2]
            i = int(rng.choice(far))
            a = apply_word(s, (i, j))
            b = apply_word(s, (j, i))
            worst["commutation"] = max(worst["commutation"], _deviation(a, b))
            curv_ok &= a.mu == b.mu
        k = j % n + 1
        a = apply_word(s, (j, k, j))
        b = apply_word(s, (k, j, k))
        worst["braid"] = max(worst["braid"], _deviation(a, b))
        curv_ok &= a.mu == b.mu
    rows = {name: {"worst": w, "pass": w <= tol} for name, w in worst.items()}
    if n < 4:
        rows["commutation"] = {"worst": None, "pass": True}
    return {"n": n, "trials": trials, "seed": seed, "tol": tol, "relations": rows,
            "curvature_consistent": bool(curv_ok),
            "pass": all(r["pass"] for r in rows.values()) and bool(curv_ok)}


# --- scaling symmetries vs the dynamic ----------------------------------------

def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def scaling_commutation_defect(state, spec: SystemSpec, t: complex, j: int = 1) -> float:
    """Relative mismatch between scale-then-step and step-then-scale on coordinates.

    The staircase uses the single flip ``phi_j``; the flat step is compared
    as an unordered pair of branches.
    """
    c = coords(state_polygon(state))

    def rebuild(cs):  # chart lift, then spread out so the step is well conditioned
        P = reconstruct(cs)
        return P.transform(spreading_map(P.vertices))

    if isinstance(state, StaircaseState):
        sc = scale(spec, c, state.mu, t)
        a = staircase_flip(StaircaseState(rebuild(sc.c), sc.curvature), j)
        b = staircase_flip(state, j)
        return _rel(coords(a.polygon), scale(spec, coords(b.polygon), b.mu, t).c)
    if isinstance(state, FlatState):
        sc = scale(spec, c, state.alpha, t)
        a = [coords(q.polygon) for q in flat_step(FlatState(rebuild(sc.c), sc.curvature))]
        b = [scale(spec, coords(q.polygon), state.alpha, t).c for q in flat_step(state)]
        return min(max(_rel(a[0], b[0]), _rel(a[1], b[1])), max(_rel(a[0], b[1]), _rel(a[1], b[0])))
    sc = scale(spec, c, None, t)
    a = leapfrog_step(LeapfrogState.from_interleaved(rebuild(sc.c)))
    b = leapfrog_step(state)
    return _rel(coords(a.interleaved()), scale(spec, coords(b.interleaved()), None, t).c)


# --- the 2-form Omega ---------------------------------------------------------

def _random_tangent(rng, n) -> np.ndarray:
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def omega_pullback_defect(state, spec: SystemSpec, rng, pairs: int = 20, eps: float = 1e-6) -> float:
    """Worst relative gap between Omega at P and Omega at T(P) on pushed tangents.

    ``T`` is one sweep (staircase) or the first flat branch; the differential
    of ``T`` on affine vertex values is taken by central differences.
    """
    P = state_polygon(state)
    n = P.n
    p = P.values()
    if isinstance(state, StaircaseState):
        word = FlipWord.sweep(n)

        def T(vals):
            return apply_word(StaircaseState(TwistedPolygon.from_values(vals), state.mu), word)
    elif isinstance(state, FlatState):
        base = flat_step(state)[0].polygon

        def T(vals):
            pair = flat_step(FlatState(TwistedPolygon.from_values(vals), state.alpha))
            return min(pair, key=lambda q: q.polygon.distance(base))
    else:
        raise ValueError("pullback check is defined for the staircase sweep and the flat step")
    image = T(p)
    q = image.polygon.values()
    ell0, ell1 = log_derivative(spec, state), log_derivative(spec, image)
    worst = 0.0
    for _ in range(pairs):
        d1, d2 = _random_tangent(rng, n), _random_tangent(rng, n)
        e1 = (T(p + eps * d1).polygon.values() - T(p - eps * d1).polygon.values()) / (2 * eps)
        e2 = (T(p + eps * d2).polygon.values() - T(p - eps * d2).polygon.values()) / (2 * eps)
        a = omega_affine(p, ell0, d1, d2)
        b = omega_affine(q, ell1, e1, e2)
        worst = max(worst, abs(a - b) / abs(a))
    return worst


def omega_pairings(p, ell, rng, trials: int = 10, h: float = 1e-5) -> dict:
    """Relative errors of ``i_u Omega = dI``, ``i_v Omega = dJ``, ``i_w Omega = dK``.

    ``u = 1``, ``v = p`` and ``w = p^2`` on affine vertex values; the
    derivatives of I, J, K are central differences.  ``w_literal`` adds the
    extra term printed next to the third pairing.
    """
    p = np.asarray(p, dtype=complex)
    fields = {"u": np.ones_like(p), "v": p, "w": p * p}
    out = {"u": 0.0, "v": 0.0, "w": 0.0, "w_literal": 0.0}
    for _ in range(trials):
        d = _random_tangent(rng, len(p))
        grad = (np.array(ijk_affine(p + h * d, ell)) - np.array(ijk_affine(p - h * d, ell))) / (2 * h)
        for idx, name in enumerate("uvw"):
            lhs = omega_affine(p, ell, fields[name], d)
            out[name] = max(out[name], abs(lhs - grad[idx]) / abs(lhs))
        lhs = omega_affine(p, ell, fields["w"], d)
        rhs = grad[2] + w_correction(ell, d)
        out["w_literal"] = max(out["w_literal"], abs(lhs - rhs) / abs(lhs))
    return out
