import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortexlab import grid


# [TRIVIAL] trapezoid weights sum to one and integrate linear functions exactly
@pytest.mark.parametrize("nt", [1, 2, 7, 64])
def test_trapezoid_weights(nt):
    w = grid.trapezoid_weights(nt)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert grid.integrate(grid.nodes(nt)) == pytest.approx(0.5, abs=1e-15)


@given(st.integers(0, 15), st.sampled_from([16, 32, 48]))
def test_spectral_derivative_exact_on_modes(j, nt):
    t = grid.nodes(nt)
    c = np.cos(np.pi * j * t)
    s = np.sin(np.pi * j * t)
    assert np.allclose(grid.derivative(c, grid.EVEN), -np.pi * j * s, atol=1e-10 * (1 + j))
    assert np.allclose(grid.derivative(s, grid.ODD), np.pi * j * c, atol=1e-10 * (1 + j))
    v = c + 1j * s
    assert np.allclose(grid.derivative(v, grid.CONJ), 1j * np.pi * j * v, atol=1e-10 * (1 + j))


def test_fd2_is_second_order():
    errs = []
    for nt in (32, 64, 128):
        t = grid.nodes(nt)
        errs.append(np.max(np.abs(grid.derivative(np.cos(3 * t), grid.EVEN, "fd2") + 3 * np.sin(3 * t))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.sampled_from([8, 16, 33]))
def test_spectral_derivative_skew_adjoint(coef, nt):
    # <D f, g> = -<f, D g> for an even f and an odd g in the trapezoidal product
    t = grid.nodes(nt)
    f = sum(c * np.cos(np.pi * j * t) for j, c in enumerate(coef)) + t ** 2 * (1 - t) ** 2
    g = sum(c * np.sin(np.pi * (j + 1) * t) for j, c in enumerate(coef)) + t * (1 - t)
    lhs = grid.integrate(grid.derivative(f, grid.EVEN) * g)
    rhs = -grid.integrate(f * grid.derivative(g, grid.ODD))
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.sampled_from([8, 16, 32]))
def test_antiderivative_inverts_derivative(coef, nt):
    t = grid.nodes(nt)
    f = sum(c * np.cos(np.pi * j * t) for j, c in enumerate(coef))
    F = grid.antiderivative(f)
    assert F[0] == 0.0
    mean = grid.integrate(f)
    assert np.allclose(grid.derivative(F - mean * t, grid.ODD), f - mean, atol=1e-10)
    assert F[-1] == pytest.approx(mean, abs=1e-12)


def test_reflect_parities():
    x = np.array([1.0, 2.0, 3.0])
    assert list(grid.reflect(x, grid.EVEN)) == [1, 2, 3, 2]
    assert list(grid.reflect(x, grid.ODD)) == [1, 2, 3, -2]
    z = np.array([1.0, 1j, 2.0])
    assert list(grid.reflect(z, grid.CONJ)) == [1, 1j, 2, -1j]
    with pytest.raises(ValueError):
        grid.reflect(x, "bogus")
