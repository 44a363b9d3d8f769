"""Exhaustive evaluation of set functions over every vertex subset.

Subsets are bitmasks: vertex ``v`` is bit ``v``.  The quadratic form
``1_S^T M 1_S`` is tabulated for all ``2^n`` masks at once by splitting the
vertices into a low and a high half, so the cost is two small bit tables and
one ``2^(n/2) x 2^(n/2)`` product instead of a Python loop over subsets.
"""
from __future__ import annotations

import numpy as np

from .errors import TooLarge

EXHAUSTIVE_LIMIT = 20


def check_size(n: int, limit: int = EXHAUSTIVE_LIMIT) -> None:
    if n > limit:
        raise TooLarge(f"exhaustive enumeration needs n <= {limit}, got n = {n}")


def bit_table(k: int) -> np.ndarray:
    """Row ``i`` holds the ``k`` bits of the integer ``i``."""
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.float64)


def quadratic_forms(M) -> np.ndarray:
    """Return ``q`` with ``q[mask] = 1_S^T M 1_S`` for every mask in ``[0, 2^n)``."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    check_size(n)
    lo = n // 2
    bl, bh = bit_table(lo), bit_table(n - lo)
    mll, mhh = M[:lo, :lo], M[lo:, lo:]
    mlh = M[:lo, lo:] + M[lo:, :lo].T
    ql = np.einsum("ij,jk,ik->i", bl, mll, bl)
    qh = np.einsum("ij,jk,ik->i", bh, mhh, bh)
    cross = (bl @ mlh) @ bh.T
    return (qh[:, None] + ql[None, :] + cross.T).ravel()


def linear_sums(w) -> np.ndarray:
    """Return ``s`` with ``s[mask] = sum of w[v] over v in S``."""
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    check_size(n)
    lo = n // 2
    sl = bit_table(lo) @ w[:lo]
    sh = bit_table(n - lo) @ w[lo:]
    return (sh[:, None] + sl[None, :]).ravel()


def proper_masks(n: int) -> np.ndarray:
    """All masks of nonempty proper subsets."""
    return np.arange(1, (1 << n) - 1, dtype=np.int64)


def canonical_masks(n: int) -> np.ndarray:
    """Masks of the sides that exclude vertex 0: one per cut."""
    return np.arange(2, 1 << n, 2, dtype=np.int64)


def mask_to_side(mask: int, n: int) -> tuple[int, ...]:
    mask = int(mask)
    return tuple(v for v in range(n) if (mask >> v) & 1)


def side_to_mask(side) -> int:
    mask = 0
    for v in side:
        mask |= 1 << int(v)
    return mask


def lex_first(masks, n: int) -> tuple[int, ...]:
    """The lexicographically smallest sorted side among ``masks``."""
    return min(mask_to_side(m, n) for m in np.atleast_1d(masks))


def argbest(values: np.ndarray, masks: np.ndarray, n: int, maximize: bool, atol: float = 1e-12):
    """Best value over ``masks`` with ties resolved by the smallest sorted side."""
    sub = values[masks]
    best = sub.max() if maximize else sub.min()
    ties = masks[np.abs(sub - best) <= atol]
    return float(best), lex_first(ties, n)
