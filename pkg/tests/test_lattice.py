import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from vortexlab.lattice import integer_inverse, smith_normal_form

int_matrices = st.integers(1, 4).flatmap(
    lambda n: st.integers(1, n).flatmap(
        lambda k: st.lists(st.lists(st.integers(-6, 6), min_size=k, max_size=k), min_size=n, max_size=n)
    )
)


def _diag(D):
    return [int(D[i, i]) for i in range(min(D.shape))]


# [DERIVED] invariant factors of a textbook matrix, computed with sympy and frozen
def test_snf_known_invariants():
    M = np.array([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    U, D, V = smith_normal_form(M)
    assert _diag(D) == [2, 6, 12]
    assert np.array_equal(U @ M @ V, D)


@given(int_matrices)
def test_snf_factorization_and_divisibility(rows):
    M = np.array(rows, dtype=np.int64)
    U, D, V = smith_normal_form(M)
    assert np.array_equal(U @ M @ V, D)
    assert abs(round(np.linalg.det(U))) == 1
    assert abs(round(np.linalg.det(V))) == 1
    off = D.copy()
    for i in range(min(D.shape)):
        off[i, i] = 0
    assert not off.any()
    d = _diag(D)
    assert all(x >= 0 for x in d)
    for a, b in zip(d, d[1:]):
        if a == 0:
            assert b == 0
        else:
            assert b % a == 0


@given(int_matrices)
def test_snf_matches_sympy(rows):
    M = np.array(rows, dtype=np.int64)
    _, D, _ = smith_normal_form(M)
    ref = sympy_snf(sympy.Matrix(rows), domain=sympy.ZZ)
    ref_d = sorted(abs(int(ref[i, i])) for i in range(min(ref.shape)))
    assert sorted(_diag(D)) == ref_d


@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=3, max_size=3))
def test_integer_inverse_of_unimodular(rows):
    _, _, V = smith_normal_form(np.array(rows))
    W = integer_inverse(V)
    assert np.array_equal(V @ W, np.eye(3, dtype=np.int64))


def test_rejects_non_integer():
    with pytest.raises(ValueError):
        smith_normal_form(np.array([[0.5, 1.0]]))
