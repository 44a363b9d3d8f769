"""Linear-algebra facts the constructions rely on, checked on seeded random instances."""
import numpy as np
import pytest

from thintree.spectral import nuclear_norm

SEEDS = range(200)


def random_pd(rng, n):
    G = rng.normal(size=(n, n))
    return G @ G.T + rng.uniform(1e-3, 1) * np.eye(n)


def schur_agrees(rng):
    n = int(rng.integers(1, 7))
    A = random_pd(rng, n)
    x = rng.normal(size=n)
    value = x @ np.linalg.solve(A, x)
    # test c on both sides of the threshold, away from the boundary
    c = value * rng.choice([0.5, 0.9, 1.1, 2.0])
    bordered = np.block([[np.array([[c]]), x[None, :]], [x[:, None], A]])
    return (value <= c) == (np.linalg.eigvalsh(bordered)[0] >= -1e-9)


def operator_convexity_gap(rng):
    n = int(rng.integers(1, 8))
    A, B = random_pd(rng, n), random_pd(rng, n)
    x = rng.normal(size=n)
    lhs = x @ np.linalg.solve((A + B) / 2, x)
    rhs = (x @ np.linalg.solve(A, x) + x @ np.linalg.solve(B, x)) / 2
    return rhs + 1e-10 - lhs


def nuclear_check(rng):
    rows, cols = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    A = rng.normal(size=(rows, cols))
    out = nuclear_norm(A)
    U = out.maximizer
    k = U.shape[0]
    svd = np.linalg.svd(A, compute_uv=False).sum()
    Apad = A if A.shape[0] == U.shape[1] else np.vstack([A, np.zeros((U.shape[1] - rows, cols))])
    attained = np.trace(U[:, : Apad.shape[0]] @ Apad) if U.shape[1] == Apad.shape[0] else np.nan
    ortho = np.abs(U @ U.T - np.eye(k)).max()
    Q = np.linalg.qr(rng.normal(size=(U.shape[1], U.shape[1])))[0][:k]
    other = np.trace(Q @ Apad)
    return out.value, svd, attained, ortho, other


def hoffman_wielandt_gap(rng):
    n = int(rng.integers(1, 8))
    A, B = rng.normal(size=(n, n)), rng.normal(size=(n, n)) * rng.uniform(0.01, 3)
    s, t = np.linalg.svd(A, compute_uv=False), np.linalg.svd(B, compute_uv=False)
    return np.linalg.norm(A - B, "fro") ** 2 + 1e-8 - ((s - t) ** 2).sum()


@pytest.mark.parametrize("seed", SEEDS)
def test_schur_complement(seed):
    assert schur_agrees(np.random.default_rng(seed))


@pytest.mark.parametrize("seed", SEEDS)
def test_operator_convexity(seed):
    assert operator_convexity_gap(np.random.default_rng(seed)) >= 0


@pytest.mark.parametrize("seed", SEEDS)
def test_nuclear_norm_maximizer(seed):
    value, svd, attained, ortho, other = nuclear_check(np.random.default_rng(seed))
    assert value == pytest.approx(svd, rel=1e-10)
    assert attained == pytest.approx(value, rel=1e-8, abs=1e-10)
    assert ortho <= 1e-10
    assert other <= value + 1e-8


@pytest.mark.parametrize("seed", SEEDS)
def test_hoffman_wielandt(seed):
    assert hoffman_wielandt_gap(np.random.default_rng(seed)) >= 0
