import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from vortexlab.group_action import GroupElement, TorusAction, isotropy_lattice
from vortexlab.loopspace import (
    BoundaryError,
    GaugeTransform,
    PathState,
    action_gradient_L2,
    action_value,
    critical_residual,
    enumerate_vortex_critical,
    gauge_apply,
    gauge_compose_parts,
    gauge_decompose,
    match_vortex_label,
    metric_gJ,
    parse_label,
    random_path,
    random_tangent,
    vortex_critical_point,
)
from vortexlab.families import HamiltonianFamily

TORUS = TorusAction(np.array([[1, 0], [1, 1], [0, 1]]), [-1.0, -1.0])


def _critical_action_sympy(m):
    """Closed-form action of v = e^{-i pi m t}, eta = pi m for the circle."""
    t = sympy.symbols("t", real=True)
    x, y = sympy.cos(sympy.pi * m * t), -sympy.sin(sympy.pi * m * t)
    mu = sympy.Rational(1, 2) - (x ** 2 + y ** 2) / 2
    return sympy.integrate(y * sympy.diff(x, t) + mu * sympy.pi * m, (t, 0, 1))


# [DERIVED] actions of the critical points, symbolic integral evaluated by sympy
@pytest.mark.parametrize("m", [-2, -1, 0, 1, 2])
def test_critical_action_matches_symbolic(m, circle):
    exact = float(_critical_action_sympy(m))
    for sign in (1, -1):
        cp = vortex_critical_point(circle, m, sign, 256)
        assert cp.action_value == pytest.approx(exact, abs=1e-10)
        assert critical_residual(circle, cp.path) <= 1e-10


def test_enumeration_labels(circle):
    pts = enumerate_vortex_critical(circle, -2, 2, 64)
    assert [p.label for p in pts] == [(m, s) for m in range(-2, 3) for s in "+-"]
    assert len({p.label_str for p in pts}) == 10


def test_parse_label():
    assert parse_label("1,+") == (1, 1)
    assert parse_label("-2,-") == (-2, -1)
    with pytest.raises(ValueError):
        parse_label("1,x")


def test_boundary_condition_enforced(circle):
    v = np.ones((9, 1), dtype=complex)
    v[0] = 1j
    with pytest.raises(BoundaryError):
        PathState(v, np.zeros((9, 1)))


@pytest.mark.parametrize("action", [TorusAction.circle(), TORUS])
def test_l2_gradient_matches_finite_differences(action, rng):
    H = HamiltonianFamily.bump(0.7, 0.3 * np.ones(action.n), 1.2, 0.3)
    for _ in range(5):
        p = random_path(action, 32, rng)
        w = random_tangent(action, 32, rng)
        eps = 1e-6
        fd = (action_value(action, p + eps * w, H) - action_value(action, p + (-eps) * w, H)) / (2 * eps)
        g = action_gradient_L2(action, p, H)
        assert metric_gJ(p, g, w) == pytest.approx(fd, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("action", [TorusAction.circle(), TORUS])
def test_action_gauge_invariance_identity_component(action, rng):
    p = random_path(action, 32, rng)
    t = np.linspace(0, 1, 33)[:, None]
    h = GaugeTransform(np.sin(np.pi * t) * rng.normal(size=action.k), action)
    assert action_value(action, gauge_apply(h, p)) == pytest.approx(action_value(action, p), abs=1e-12)


@given(st.integers(-2, 2), st.integers(0, 1))
def test_lattice_gauge_shifts_action(m, b):
    # the winding part of a gauge transform shifts the action by a constant
    action = TorusAction.circle()
    p = random_path(action, 32, np.random.default_rng(m + 7))
    h = gauge_compose_parts(GaugeTransform.identity(action, 32), [m], GroupElement([np.pi * b]))
    q = gauge_apply(h, p)
    shift = action_value(action, q) - action_value(action, p)
    p2 = random_path(action, 32, np.random.default_rng(m + 99))
    shift2 = action_value(action, gauge_apply(h, p2)) - action_value(action, p2)
    assert shift == pytest.approx(shift2, abs=1e-12)
    assert shift == pytest.approx(np.pi * m * action.tau[0], abs=1e-12)


def test_gauge_decompose_roundtrip(rng):
    B, _, _ = isotropy_lattice(TORUS)
    t = np.linspace(0, 1, 17)[:, None]
    m = rng.integers(-2, 3, size=2)
    b = B @ np.array([1, 0])
    xi = np.sin(np.pi * t) @ rng.normal(size=(1, 2)) + t * (B @ m) + b
    h = GaugeTransform(xi, TORUS)
    h0, m2, g = gauge_decompose(h)
    assert np.array_equal(m2, m)
    assert np.allclose(gauge_compose_parts(h0, m2, g).xi % (2 * np.pi), h.xi % (2 * np.pi))


def test_gauge_boundary_checked(circle):
    with pytest.raises(BoundaryError):
        GaugeTransform(np.full((9, 1), 0.3), circle)


def test_match_label(circle):
    cp = vortex_critical_point(circle, 1, -1, 32)
    assert match_vortex_label(circle, cp.path) == (1, -1)
    off = PathState(cp.path.v, cp.path.eta + 0.1)
    assert match_vortex_label(circle, off) is None
