import numpy as np
import pytest

from polydyn.dynamics import random_curvature
from polydyn.errors import ExcludedParameter
from polydyn.harness import ExperimentConfig, build_state, scaling_commutation_defect
from polydyn.invariants import scaled_logderiv_fd
from polydyn.polygon import coords, is_closed, random_closed_polygon
from polydyn.projgeom import matrix_distance
from polydyn.scaling import (
    SystemSpec,
    deform_family,
    log_derivative,
    scale,
    scale_flat,
    scale_leapfrog,
    scale_staircase,
)

SPECS = [SystemSpec.staircase(1.0), SystemSpec.staircase(0.5 - 2j), SystemSpec.flat(), SystemSpec.leapfrog()]


def sample(rng, spec, n=6):
    size = 2 * n if spec.kind == "leapfrog" else n
    c = coords(random_closed_polygon(rng, size))
    curv = None if spec.kind == "leapfrog" else random_curvature(rng, n, avoid_one=spec.kind == "flat")
    return c, curv


def test_staircase_example():
    sc = scale_staircase([0.7], [2.0], 1.0, 2.0)
    assert sc.curvature[0] == pytest.approx(4 / 3)
    assert sc.c[0] == pytest.approx(2.1)


def test_flat_first_alpha_scales_linearly(rng):
    _, alpha = sample(rng, SystemSpec.flat())
    sc = scale_flat(np.ones(6), alpha, 1.7 + 0.2j)
    assert sc.curvature[0] == pytest.approx((1.7 + 0.2j) * alpha[0])
    eq = scale_flat(np.ones(3), [0.4j] * 3, 3.0)
    assert np.allclose(eq.curvature, 1.2j)


def test_leapfrog_scaling():
    sc = scale_leapfrog([1, 2], [3, 4], 2)
    assert np.allclose(sc.c, [2, 3, 4, 4])
    with pytest.raises(ExcludedParameter):
        scale_leapfrog([1], [1], 0)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.eta}")
def test_group_action_laws(rng, spec):
    for _ in range(20):
        c, curv = sample(rng, spec)
        one = scale(spec, c, curv, 1.0)
        assert np.allclose(one.c, c, rtol=1e-12)
        t1 = complex(rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5))
        t2 = complex(rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5))
        a = scale(spec, c, curv, t1)
        b = scale(spec, a.c, a.curvature, t2)
        ab = scale(spec, c, curv, t1 * t2)
        assert np.allclose(b.c, ab.c, rtol=1e-10, atol=0)
        if curv is not None:
            assert np.allclose(b.curvature, ab.curvature, rtol=1e-10, atol=0)


def test_flat_kappa_constant(rng):
    _, alpha = sample(rng, SystemSpec.flat())
    a = np.array(alpha)
    at = np.array(scale_flat(np.ones(6), alpha, 0.6 + 0.9j).curvature)
    assert np.allclose((1 - at) / (1 - at[0]), (1 - a) / (1 - a[0]))


def test_excluded_parameters():
    with pytest.raises(ExcludedParameter):
        scale_staircase([1.0], [2.0], 1.0, 0.5)  # t = 1 - 1/(eta mu)
    with pytest.raises(ExcludedParameter):
        scale_flat([1.0, 1.0], [0.5, 2.0], 2.0)  # t = 1/alpha_1


def test_eta_covariance(rng):
    # scaling mu by lam and eta by 1/lam gives the same c(t) and lam * mu(t)
    c, mu = sample(rng, SystemSpec.staircase())
    eta, lam, t = 0.8 + 0.3j, -1.5 + 0.5j, 1.3 - 0.4j
    base = scale_staircase(c, mu, eta, t)
    moved = scale_staircase(c, lam * np.array(mu), eta / lam, t)
    assert np.allclose(moved.c, base.c, rtol=1e-12)
    assert np.allclose(moved.curvature, lam * np.array(base.curvature), rtol=1e-12)


def test_log_derivative_examples():
    assert np.allclose(log_derivative(SystemSpec.staircase(), [1, 1, 1, 1]), 1)
    assert np.allclose(log_derivative(SystemSpec.flat(), [0.3j] * 5), 1)
    assert np.allclose(log_derivative(SystemSpec.leapfrog(), n=3), [1, 0, 1, 0, 1, 0])


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.eta}")
def test_log_derivative_matches_finite_difference(rng, spec):
    c, curv = sample(rng, spec)
    ell = log_derivative(spec, curv, n=6)
    assert np.allclose(scaled_logderiv_fd(spec, c, curv), ell, rtol=1e-7, atol=1e-9)


def test_deform_family(rng):
    spec = SystemSpec.staircase(1.0)
    P = random_closed_polygon(rng, 6)
    mu = random_curvature(rng, 6)
    P1 = deform_family(P, spec, 1.0, mu)
    assert is_closed(P1)
    assert np.allclose(coords(P1), coords(P), rtol=1e-10)
    z = 1.1 + 0.05j
    Pz = deform_family(P, spec, z, mu)
    assert np.allclose(coords(Pz), scale(spec, coords(P), mu, z).c, rtol=1e-9)
    assert matrix_distance(Pz.monodromy.matrix, np.eye(2)) > 1e-6


@pytest.mark.parametrize("system", ["staircase", "flat", "leapfrog"])
def test_commutes_with_dynamic(system):
    worst = 0.0
    for seed in range(30):
        cfg = ExperimentConfig(system=system, n=4 + seed % 5, seed=seed)
        state = build_state(cfg)
        rng = np.random.default_rng(seed)
        t = complex(rng.uniform(0.5, 2) * np.exp(1j * rng.uniform(-1, 1)))
        j = int(rng.integers(1, state.n + 1))
        worst = max(worst, scaling_commutation_defect(state, cfg.spec, t, j=j))
    assert worst <= 1e-8
