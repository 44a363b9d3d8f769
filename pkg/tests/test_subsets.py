import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thintree import subsets
from thintree.errors import TooLarge


def direct_forms(M):
    n = M.shape[0]
    out = np.empty(1 << n)
    for mask in range(1 << n):
        x = np.array([(mask >> v) & 1 for v in range(n)], dtype=float)
        out[mask] = x @ M @ x
    return out


@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_quadratic_forms_match_direct(n, seed):
    M = np.random.default_rng(seed).normal(size=(n, n))
    assert np.allclose(subsets.quadratic_forms(M), direct_forms(M))


@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_linear_sums(n, seed):
    w = np.random.default_rng(seed).normal(size=n)
    expect = [sum(w[v] for v in range(n) if mask >> v & 1) for mask in range(1 << n)]
    assert np.allclose(subsets.linear_sums(w), expect)


def test_size_limit():
    with pytest.raises(TooLarge):
        subsets.quadratic_forms(np.eye(21))
    subsets.check_size(20)


def test_mask_helpers():
    assert subsets.mask_to_side(0b1011, 4) == (0, 1, 3)
    assert subsets.side_to_mask((0, 1, 3)) == 0b1011
    assert subsets.proper_masks(3).tolist() == [1, 2, 3, 4, 5, 6]
    assert subsets.canonical_masks(3).tolist() == [2, 4, 6]


def test_bit_table():
    assert subsets.bit_table(2).tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]


def test_argbest_tie_break():
    values = np.array([0.0, 1.0, 1.0, 0.5, 1.0, 0, 0, 0])
    best, side = subsets.argbest(values, np.array([1, 2, 4, 3]), 3, maximize=True)
    assert best == 1.0 and side == (0,)
    best, side = subsets.argbest(values, np.array([2, 4]), 3, maximize=True)
    assert side == (1,)
    assert subsets.lex_first([6, 5], 3) == (0, 2)
