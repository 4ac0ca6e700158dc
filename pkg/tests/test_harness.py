import csv
import io
import json

import numpy as np
import pytest

from polydyn.dynamics import FlipWord, apply_word
from polydyn.errors import DegenerateError
from polydyn.harness import (
    TRACE_COLUMNS,
    VERDICTS,
    ExperimentConfig,
    Orbit,
    build_state,
    geometric_lambda,
    palindromic_defect,
    q_polynomial,
    relations_suite,
    run_collapse,
    scan_conjecture,
    scan_rows_csv,
    special_staircase,
    state_logderiv,
    state_polygon,
)
from polydyn.invariants import infinitesimal_monodromy
from polydyn.projgeom import chordal_distance


def test_config_roundtrip():
    cfg = ExperimentConfig(system="flat", eta=2 - 1j, n=6, seed=3, curvature=[0.5j] * 6,
                           vertices=[0, 1, "inf", 2, 1j, -1])
    d = json.loads(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_dict(d) == cfg
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(direction="sideways")


def test_build_state_is_seeded():
    a = build_state(ExperimentConfig(system="staircase", n=6, seed=11))
    b = build_state(ExperimentConfig(system="staircase", n=6, seed=11))
    assert a.polygon.distance(b.polygon) == 0 and a.mu == b.mu
    lf = build_state(ExperimentConfig(system="leapfrog", n=4, seed=2))
    assert lf.n == 4 and state_polygon(lf).n == 8


def test_orbit_pulls_back_through_the_chart():
    cfg = ExperimentConfig(system="staircase", n=6, seed=4)
    st = build_state(cfg)
    orbit = Orbit(st, cfg.spec)
    plain = st
    for _ in range(3):
        orbit.step()
        plain = apply_word(plain, FlipWord.sweep(6))
    got = orbit.actual_vertices()
    assert max(chordal_distance(p, q) for p, q in zip(got, plain.polygon.vertices)) < 1e-9
    ref = infinitesimal_monodromy(plain.polygon, state_logderiv(cfg.spec, plain))
    I, J, K = orbit.ijk()
    assert abs(I - ref.I) + abs(J - ref.J) + abs(K - ref.K) < 1e-8 * abs(ref.J)


# --- special configurations ---------------------------------------------------

def test_parabolic_triangle():
    state, expected, rep = special_staircase(3, "parabolic")
    assert rep.lam == 4 and expected.kind == "parabolic"
    out = apply_word(state, FlipWord.sweep(3)).polygon.values()
    assert np.allclose(out, [3, 4, 5], atol=1e-9)
    assert rep.dynamic == "parabolic"


def test_geometric_quadrilateral():
    state, expected, rep = special_staircase(3, "geometric", q=2)
    assert rep.lam == pytest.approx(4.5)
    assert geometric_lambda(3, 2) == pytest.approx(4.5)
    out = apply_word(state, FlipWord.sweep(3)).polygon.values()
    assert np.allclose(out, [8, 16, 32], rtol=1e-9)
    assert rep.dynamic == "loxodromic" and expected.kind == "loxodromic"
    assert rep.q_residual < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_q_polynomial_is_palindromic(n):
    for lam in (2.0, 7.5, 3 - 4j):
        coef = q_polynomial(n, lam)
        assert np.allclose(coef, coef[::-1])
        assert palindromic_defect(np.roots(coef)) < 1e-6


def test_root_of_unity_gives_periodic_orbit():
    # q = exp(2 pi i / 9) and n = 3: one sweep multiplies by q^3, so three sweeps are the identity
    q = np.exp(2j * np.pi / 9)
    state, _, rep = special_staircase(3, "from_lambda", lam=geometric_lambda(3, q))
    assert rep.dynamic == "periodic" and rep.order == 3
    assert rep.palindromic_defect < 1e-8
    back = apply_word(state, FlipWord.sweep(3).letters * 3)
    assert back.polygon.distance(state.polygon) < 1e-8
    once = apply_word(state, FlipWord.sweep(3))
    assert once.polygon.distance(state.polygon) > 1e-3
    cfg = ExperimentConfig(n=3, curvature="special", special={"kind": "from_lambda", "lam": rep.lam})
    assert run_collapse(cfg).verdict == "periodic"


def test_special_rejects_bad_input():
    with pytest.raises(ValueError):
        special_staircase(2)
    with pytest.raises(DegenerateError):
        special_staircase(4, "geometric", q=-1)


# --- relations suite ----------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 6])
def test_relations_suite(n):
    res = relations_suite(n, trials=30, seed=5)
    assert res["pass"] and res["curvature_consistent"]


# --- collapse runs ------------------------------------------------------------

def test_triangle_orbit_is_a_mobius_orbit():
    rep = run_collapse(ExperimentConfig(system="staircase", n=3, seed=1))
    assert rep.step_class == "loxodromic"
    assert rep.verdict == "collapsed-to-candidate"
    assert rep.final_distance <= 1e-4 and rep.valid


def test_trace_columns_and_determinism(tmp_path):
    cfg = ExperimentConfig(system="staircase", n=5, seed=2, iterations=20, trace_path=str(tmp_path / "t.csv"))
    a = run_collapse(cfg)
    b = run_collapse(cfg)
    assert a.trace_csv() == b.trace_csv()
    rows = list(csv.reader(io.StringIO((tmp_path / "t.csv").read_text())))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == 1 + 5 * (a.iterations + 1)


def test_report_fields_are_consistent():
    for system in ("staircase", "flat", "leapfrog"):
        rep = run_collapse(ExperimentConfig(system=system, n=5, seed=7, iterations=60))
        assert rep.verdict in VERDICTS
        assert rep.distances.shape == (rep.iterations + 1, len(rep.candidates.roots))
        if rep.verdict == "collapsed-to-candidate":
            assert rep.distances[-1, rep.collapsed_to] <= 1e-4
            tail = rep.distances[-11:, rep.collapsed_to]
            assert np.all(np.diff(tail) <= 0)
        summary = json.loads(json.dumps(rep.summary()))
        assert summary["verdict"] == rep.verdict


def test_backward_orbit_runs():
    rep = run_collapse(ExperimentConfig(system="leapfrog", n=4, seed=3, direction="backward", iterations=50))
    assert rep.verdict in VERDICTS and rep.iterations >= 1


def test_scan_parallel_matches_serial():
    cfg = ExperimentConfig(system="staircase", n=5, seed=0, iterations=40)
    serial = scan_conjecture(cfg, 4, workers=1)
    parallel = scan_conjecture(cfg, 4, workers=2)
    assert scan_rows_csv(serial) == scan_rows_csv(parallel)
    assert sum(serial["verdicts"].values()) == 4
    assert [r["seed"] for r in serial["rows"]] == [0, 1, 2, 3]


def test_orbit_stays_closed_and_keeps_delta():
    cfg = ExperimentConfig(system="staircase", n=6, seed=2)
    orbit = Orbit(build_state(cfg), cfg.spec)
    d0 = orbit.delta()
    for _ in range(60):
        orbit.step()
    assert orbit.condition > 1e12  # deep into the collapse
    assert np.array_equal(state_polygon(orbit.state).monodromy.matrix, np.eye(2))
    assert abs(orbit.delta() - d0) <= 1e-10 * abs(d0)
