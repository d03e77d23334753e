import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortexlab.families import HamiltonianFamily
from vortexlab.gaugefix import (
    GaugeError,
    bvp_residual,
    compute_coulomb_data,
    coulomb_flow_residual,
    coulomb_gradient,
    coulomb_metric_pair,
    coulomb_project,
    coulomb_step,
    coulomb_xi,
    kappa_bound_constant,
    kappa_deviation,
    xi_for_tangent,
)
from vortexlab.group_action import TorusAction
from vortexlab.loopspace import (
    PathState,
    Tangent,
    action_value,
    random_path,
    random_tangent,
    vortex_critical_point,
)

TORUS = TorusAction(np.array([[1, 0], [1, 1], [0, 1]]), [-1.0, -1.0])
ACTIONS = [TorusAction.circle(), TORUS]
seeds = st.integers(0, 2 ** 31 - 1)


@given(seeds, st.sampled_from([16, 32, 40]))
def test_projection_idempotent_constant_eta(seed, nt):
    act = TORUS if seed % 2 else TorusAction.circle()
    p = random_path(act, nt, seed)
    q, h = coulomb_project(act, p)
    assert np.max(np.abs(q.eta - q.eta[0])) == 0.0
    q2, _ = coulomb_project(act, q)
    assert np.max(np.abs(q2.v - q.v)) <= 1e-12
    assert np.max(np.abs(q2.eta - q.eta)) <= 1e-12
    # same H_0-orbit: the projection is a gauge transform with trivial ends
    assert np.all(h.xi[[0, -1]] == 0.0)


@pytest.mark.parametrize("act", ACTIONS)
def test_projection_preserves_action(act, rng):
    p = random_path(act, 32, rng)
    q, _ = coulomb_project(act, p)
    assert action_value(act, q) == pytest.approx(action_value(act, p), abs=1e-12)


@pytest.mark.parametrize("act", ACTIONS)
def test_metric_symmetric_and_forms_agree(act, rng):
    for _ in range(10):
        p, _ = coulomb_project(act, random_path(act, 32, rng))
        w1 = random_tangent(act, 32, rng, constant_eta=True)
        w2 = random_tangent(act, 32, rng, constant_eta=True)
        g12 = coulomb_metric_pair(act, p, w1, w2, slot=1)
        g21 = coulomb_metric_pair(act, p, w2, w1, slot=1)
        g12b = coulomb_metric_pair(act, p, w1, w2, slot=2)
        assert abs(g12 - g21) <= 1e-10
        assert abs(g12 - g12b) <= 1e-10
        assert coulomb_metric_pair(act, p, w1, w1) > 0


@pytest.mark.parametrize("act", ACTIONS)
def test_bvp_plugback(act, rng):
    for _ in range(10):
        p, _ = coulomb_project(act, random_path(act, 48, rng))
        w = random_tangent(act, 48, rng)
        xi = xi_for_tangent(act, p, w.v)
        assert np.all(xi[[0, -1]] == 0.0)
        assert bvp_residual(act, p, w.v, xi) <= 1e-10


@pytest.mark.parametrize("act", ACTIONS)
@pytest.mark.parametrize("mode", ["discrete", "closed_form", "spectral"])
def test_coulomb_gradient_matches_finite_differences(act, mode, rng):
    H = HamiltonianFamily.bump(0.7, 0.4 * np.ones(act.n), 0.9, 0.3)
    tol = 1e-6 if mode == "discrete" else 1e-2
    for _ in range(4):
        p, _ = coulomb_project(act, random_path(act, 64, rng))
        w = random_tangent(act, 64, rng, constant_eta=True)
        eps = 1e-6
        fd = (action_value(act, p + eps * w, H) - action_value(act, p + (-eps) * w, H)) / (2 * eps)
        g = coulomb_gradient(act, p, H, xi=mode)
        assert coulomb_metric_pair(act, p, g, w) == pytest.approx(fd, rel=tol, abs=1e-8)


def test_xi_modes_converge(circle, rng):
    H = HamiltonianFamily.bump(0.7, [0.4], 0.9, 0.3)
    errs = []
    for nt in (32, 64, 128):
        p, _ = coulomb_project(circle, random_path(circle, nt, 5))
        a = coulomb_xi(circle, p, H, "discrete")
        b = coulomb_xi(circle, p, H, "closed_form")
        errs.append(np.max(np.abs(a - b)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


@pytest.mark.parametrize("act", ACTIONS)
def test_kappa_vanishes_for_invariant_hamiltonian(act, rng):
    H = HamiltonianFamily.bump(0.9, np.zeros(act.n), 2.0, 0.5)
    assert H.invariant
    for _ in range(20):
        assert kappa_deviation(act, random_path(act, 32, rng), H) <= 1e-15


def test_kappa_bound_holds_on_samples(circle, rng):
    H = HamiltonianFamily.bump(0.8, [0.5 + 0.2j], 0.8, 0.4)
    c = kappa_bound_constant(circle, H)
    worst = max(kappa_deviation(circle, random_path(circle, 32, rng, amplitude=0.6), H) for _ in range(100))
    assert 0 < worst <= c


def test_critical_points_are_stationary(circle):
    cp = vortex_critical_point(circle, 1, 1, 64)
    g = coulomb_gradient(circle, cp.path)
    assert np.max(np.abs(g.v)) <= 1e-10
    assert np.max(np.abs(g.eta)) <= 1e-12


def test_coulomb_step_keeps_eta_constant_and_decreases_action(circle, rng):
    p, _ = coulomb_project(circle, random_path(circle, 32, rng, amplitude=0.1))
    q = coulomb_step(circle, p, None, 1e-3)
    assert np.max(np.abs(q.eta - q.eta[0])) <= 1e-14
    assert action_value(circle, q) < action_value(circle, p)


def test_flow_residual_first_order(circle, rng):
    p, _ = coulomb_project(circle, random_path(circle, 32, rng, amplitude=0.1))
    res = []
    for ds in (1e-3, 5e-4):
        q = coulomb_step(circle, p, None, ds, scheme="rk4", xi="closed_form")
        res.append(coulomb_flow_residual(circle, p, q, ds, where="left"))
    assert res[0] / res[1] == pytest.approx(2.0, rel=0.2)


def test_requires_coulomb_gauge(circle, rng):
    p = random_path(circle, 16, rng)
    with pytest.raises(GaugeError):
        compute_coulomb_data(circle, p)
    with pytest.raises(ValueError):
        coulomb_xi(circle, coulomb_project(circle, p)[0], None, "bogus")
