import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vortexlab.group_action import (
    DimensionError,
    GroupElement,
    L_adjoint,
    L_operator,
    TorusAction,
    check_hypothesis_H,
    hamiltonian_property_residual,
    in_isotropy,
    infinitesimal_action,
    isotropy_lagrangian,
    isotropy_lattice,
    moment_map,
    omega,
    real_inner,
    rotate,
    stabilizer_order,
)

ACTIONS = [
    TorusAction.circle(),
    TorusAction(np.eye(2, dtype=int), [-0.5, -0.25]),
    TorusAction(np.array([[1, 0], [1, 1], [0, 1]]), [-1.0, -1.0]),
    TorusAction(np.array([[2]]), [-1.0]),
    TorusAction(np.array([[1, 0], [1, 2], [3, 1]]), [-0.3, 0.4]),
]

finite = st.floats(-3, 3, allow_nan=False)


def _z(rng, action, shape=()):
    return rng.normal(size=shape + (action.n,)) + 1j * rng.normal(size=shape + (action.n,))


# [DERIVED] circle moment map: mu(z) = (1 - |z|^2) / 2 written out by hand
@pytest.mark.parametrize("z,expected", [(0.0, 0.5), (1.0, 0.0), (1j, 0.0), (2.0, -1.5), (0.6 + 0.8j, 0.0),
                                        (3 - 4j, -12.0)])
def test_circle_moment_map_values(z, expected):
    mu = moment_map(TorusAction.circle(), np.array([z]))
    assert mu.shape == (1,)
    assert mu[0] == expected


@given(arrays(float, (2,), elements=finite))
def test_circle_moment_map_formula(xy):
    z = np.array([xy[0] + 1j * xy[1]])
    assert moment_map(TorusAction.circle(), z)[0] == 0.5 - 0.5 * (xy[0] ** 2 + xy[1] ** 2)


@pytest.mark.parametrize("action", ACTIONS)
def test_rotation_is_group_action(action, rng):
    z = _z(rng, action)
    a, b = rng.normal(size=action.k), rng.normal(size=action.k)
    lhs = rotate(action, GroupElement(a) * GroupElement(b), z)
    rhs = rotate(action, a, rotate(action, b, z))
    assert np.allclose(lhs, rhs, atol=1e-13)
    assert np.allclose(rotate(action, GroupElement.identity(action.k), z), z)
    assert np.allclose(np.abs(rotate(action, a, z)), np.abs(z))


@pytest.mark.parametrize("action", ACTIONS)
def test_infinitesimal_action_is_derivative_of_rotation(action, rng):
    z = _z(rng, action)
    xi = rng.normal(size=action.k)
    h = 1e-6
    fd = (rotate(action, h * xi, z) - rotate(action, -h * xi, z)) / (2 * h)
    assert np.allclose(fd, infinitesimal_action(action, xi, z), atol=1e-8)


@pytest.mark.parametrize("action", ACTIONS)
def test_moment_map_is_equivariant_invariant(action, rng):
    z = _z(rng, action, (5,))
    theta = rng.uniform(0, 2 * np.pi, size=action.k)
    assert np.allclose(moment_map(action, rotate(action, theta, z)), moment_map(action, z), atol=1e-13)


@pytest.mark.parametrize("action", ACTIONS)
def test_adjoint_identity(action, rng):
    for _ in range(20):
        z = _z(rng, action)
        eta = rng.normal(size=action.k)
        vhat = _z(rng, action)
        lhs = real_inner(L_operator(action, z, eta), vhat)
        rhs = eta @ L_adjoint(action, z, vhat)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@pytest.mark.parametrize("action", ACTIONS)
def test_hamiltonian_property(action, rng):
    for _ in range(20):
        r = hamiltonian_property_residual(action, _z(rng, action), rng.normal(size=action.k), _z(rng, action))
        assert r <= 1e-6


def test_omega_is_antisymmetric_and_standard():
    a = np.array([1.0 + 0j])
    b = np.array([1j])
    assert omega(a, b) == 1.0
    assert omega(b, a) == -1.0


# [TRIVIAL] isotropy of R^n for A = identity is {0, pi}^k
@pytest.mark.parametrize("k", [1, 2, 3])
def test_isotropy_identity_is_z2_power(k):
    act = TorusAction(np.eye(k, dtype=int), -0.5 * np.ones(k))
    els = isotropy_lagrangian(act)
    thetas = sorted(tuple(np.round(g.theta / np.pi).astype(int)) for g in els)
    assert thetas == sorted(itertools.product((0, 1), repeat=k))
    for g in els:
        assert np.allclose(rotate(act, g, np.ones(k)).imag, 0.0)


# [DERIVED] isotropy of R for the weight-2 circle: e^{i theta} with 2 theta in pi Z
def test_isotropy_weight_two():
    act = TorusAction(np.array([[2]]), [-1.0])
    els = isotropy_lagrangian(act)
    assert sorted(round(g.theta[0] / np.pi * 2) for g in els) == [0, 1, 2, 3]
    B, _, d = isotropy_lattice(act)
    assert np.allclose(B, [[np.pi / 2]])
    assert list(d) == [2]


@pytest.mark.parametrize("action", ACTIONS)
def test_isotropy_lattice_generates(action, rng):
    B, _, _ = isotropy_lattice(action)
    for col in B.T:
        assert in_isotropy(action, col)
    # random lattice points are in the isotropy group, random points are not
    m = rng.integers(-3, 4, size=action.k)
    assert in_isotropy(action, B @ m)
    assert not in_isotropy(action, B @ m + 0.1 * rng.normal(size=action.k) + 1e-3)
    # the index of the lattice equals the order of the isotropy group (mod 2 pi Z^k)
    order = len(isotropy_lagrangian(action))
    assert order == round(abs(np.linalg.det(2 * np.pi * np.eye(action.k))) / abs(np.linalg.det(B)))


def test_isotropy_needs_full_rank():
    with pytest.raises(ValueError):
        isotropy_lattice(TorusAction(np.array([[1, 2], [2, 4]]), [0.0, 0.0]))


def test_dimension_errors():
    act = TorusAction(np.eye(2, dtype=int), [0.0, 0.0])
    with pytest.raises(DimensionError):
        moment_map(act, np.ones(3))
    with pytest.raises(DimensionError):
        TorusAction(np.eye(2, dtype=int), [0.0])
    with pytest.raises(ValueError):
        TorusAction(np.array([[0.5]]), [0.0])


def test_stabilizer_orders():
    act = TorusAction(np.array([[2]]), [-1.0])
    assert stabilizer_order(act, np.array([1.0])) == 2
    assert stabilizer_order(TorusAction.circle(), np.array([1.0])) == 1
    assert stabilizer_order(TorusAction.circle(), np.array([0.0])) == np.inf


def test_hypothesis_report_circle():
    rep = check_hypothesis_H(TorusAction.circle(), rng=0)
    assert rep.nonempty and rep.free_on_samples and rep.properness_bounded
    assert rep.zero_residual <= 1e-12
    assert rep.properness_sup_norm == pytest.approx(np.sqrt(3.0))


def test_hypothesis_report_nonfree_and_empty():
    rep = check_hypothesis_H(TorusAction(np.array([[2]]), [-1.0]), rng=0)
    assert rep.nonempty and not rep.free_on_samples
    assert rep.max_stabilizer == 2
    rep = check_hypothesis_H(TorusAction.circle(0.5), rng=0)
    assert not rep.nonempty
