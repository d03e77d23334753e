import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vortexlab.morse import gf2
from vortexlab.morse.complex import (
    ChainComplexGF2,
    ComplexError,
    FreeGroupActionOnGenerators,
    principle_check,
    quotient_complex,
)
from vortexlab.morse.sphere import SphereMorseDemo, build_sphere_demo, count_flow_lines, shoot

bits = arrays(np.uint8, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.integers(0, 1))


def _span_size(M):
    """Number of distinct GF(2) combinations of the rows, by enumeration."""
    rows = [tuple(r) for r in M]
    seen = set()
    for coeffs in itertools.product((0, 1), repeat=len(rows)):
        acc = np.zeros(M.shape[1], dtype=np.int64)
        for c, r in zip(coeffs, rows):
            if c:
                acc = (acc + np.array(r)) % 2
        seen.add(tuple(acc))
    return len(seen)


@given(bits)
def test_gf2_rank_against_enumeration(M):
    assert 2 ** gf2.rank(M) == _span_size(M)


@given(bits)
def test_row_reduce_is_echelon(M):
    R, piv = gf2.row_reduce(M)
    for i, c in enumerate(piv):
        assert R[i, c] == 1
        assert R[:, c].sum() == 1
    assert not R[len(piv):].any()


# [DERIVED] mod-2 homology of the sphere and of the projective plane
def test_sphere_and_projective_plane_homology():
    s2 = ChainComplexGF2([["a"], [], ["b"]], [None, np.zeros((1, 0)), np.zeros((0, 1))])
    assert s2.homology_ranks() == [1, 0, 1]
    rp2 = ChainComplexGF2([["p"], ["e"], ["f"]], [None, [[0]], [[0]]])
    assert rp2.homology_ranks() == [1, 1, 1]
    circle = ChainComplexGF2([["x", "y"], ["e1", "e2"]], [None, [[1, 1], [1, 1]]])
    assert circle.homology_ranks() == [1, 1]


def test_boundary_must_square_to_zero():
    with pytest.raises(ComplexError):
        ChainComplexGF2([["a"], ["e"], ["f"]], [None, [[1]], [[1]]])


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
def test_euler_characteristic_invariant(n, seed):
    # chi of chain ranks equals chi of homology ranks
    rng = np.random.default_rng(seed)
    d1 = rng.integers(0, 2, size=(n, n + 1))
    ker_basis = []
    for v in itertools.product((0, 1), repeat=n + 1):
        if not (d1 @ np.array(v) % 2).any() and any(v):
            ker_basis.append(v)
    d2 = np.array(ker_basis[:2]).T if ker_basis else np.zeros((n + 1, 0), dtype=int)
    if d2.size == 0:
        d2 = np.zeros((n + 1, 1), dtype=int)
    cx = ChainComplexGF2([[f"a{i}" for i in range(n)], [f"b{i}" for i in range(n + 1)],
                          [f"c{i}" for i in range(d2.shape[1])]], [None, d1, d2])
    chi_chain = sum((-1) ** i * r for i, r in enumerate(cx.chain_ranks()))
    chi_h = sum((-1) ** i * r for i, r in enumerate(cx.homology_ranks()))
    assert chi_chain == chi_h


def test_quotient_requires_free_action():
    cx = ChainComplexGF2([["a", "b"]], [None])
    with pytest.raises(ComplexError):
        quotient_complex(cx, FreeGroupActionOnGenerators(2, (((0, 1),), ((0, 1),))))
    act = FreeGroupActionOnGenerators(2, (((0, 1),), ((1, 0),)))
    assert act.is_free() and act.orbits(0) == [[0, 1]]
    assert quotient_complex(cx, act).chain_ranks() == [1]


# [TRIVIAL] the rank principle is an inequality check
def test_principle_check():
    assert principle_check(2, 3, 2)
    assert not principle_check(6, 3, 2)
    with pytest.raises(ValueError):
        principle_check(-1, 1, 2)


def test_sphere_demo_labels_and_validation():
    demo = SphereMorseDemo((1, 2, 3))
    assert [demo.index(x) for x in demo.labels] == [0, 0, 1, 1, 2, 2]
    assert demo.antipode("+e2") == "-e2"
    with pytest.raises(ValueError):
        SphereMorseDemo((1, 1, 3))


def test_sphere_counts_and_ranks():
    demo, cover, quotient, counts = build_sphere_demo(1.0, 2.0, 3.0)
    assert all(c == 1 for c in counts.values())
    assert cover.homology_ranks() == [1, 0, 1]
    assert quotient.homology_ranks() == [1, 1, 1]
    assert count_flow_lines(demo, "+e3", "-e2") == {"count": 1, "mod2": 1}


@settings(max_examples=8)
@given(st.floats(0.2, 5.0))
def test_counts_invariant_under_scaling(c):
    demo = SphereMorseDemo((c * 1.0, c * 2.0, c * 3.0))
    assert sorted(shoot(demo, "+e3", resolution=64, refine=4)) == ["+e2", "-e2"]
    assert sorted(shoot(demo, "-e2", resolution=64)) == ["+e1", "-e1"]


def test_counts_for_uneven_spectrum():
    demo = SphereMorseDemo((0.5, 0.6, 4.0))
    assert sorted(shoot(demo, "+e3", resolution=64, refine=4)) == ["+e2", "-e2"]
