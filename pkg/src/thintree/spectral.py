"""Laplacian spectra, effective resistance, thinness, sweep cuts and cut dominance."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from . import subsets
from .errors import Disconnected, FileNotFound, GraphFormatError, InvalidParameter, NotPsd, OutOfRange, TooSmall
from .graph import Cut, MultiGraph, boundary, canonical_side, is_connected

PINV_CUTOFF = 1e-9
RANGE_TOL = 1e-6
DOMINANCE_TOL = 1e-8


def _pseudo_parts(w: np.ndarray, V: np.ndarray):
    top = max(float(w.max(initial=0.0)), 0.0)
    keep = w > PINV_CUTOFF * top if top > 0 else np.zeros_like(w, dtype=bool)
    return keep, V[:, keep], w[keep]


class SpectralView:
    """Eigendecomposition cache for one graph's Laplacian."""

    def __init__(self, graph: MultiGraph):
        self.graph = graph
        self.laplacian = graph.laplacian
        w, V = np.linalg.eigh(self.laplacian)
        self.eigenvalues, self.eigenvectors = w, V
        keep, Vk, wk = _pseudo_parts(w, V)
        self.pinv_rank = int(keep.sum())
        self.range_basis = Vk
        self.pinv = (Vk / wk) @ Vk.T
        self.pinv_half = (Vk / np.sqrt(wk)) @ Vk.T
        for a in (self.eigenvalues, self.eigenvectors, self.range_basis, self.pinv, self.pinv_half):
            a.setflags(write=False)

    @property
    def component_count(self) -> int:
        return self.graph.n - self.pinv_rank

    def resistances(self) -> np.ndarray:
        """Effective resistance of every edge, in edge-id order."""
        if self.component_count > 1 and self.graph.m:
            _check_range(self.range_basis, self.graph.incidence)
        B = self.graph.incidence
        return np.einsum("ie,ij,je->e", B, self.pinv, B)


@dataclass(frozen=True)
class PsdMatrix:
    """Symmetric matrix with a certified smallest eigenvalue."""

    matrix: np.ndarray
    min_eigenvalue: float

    @classmethod
    def certify(cls, A, floor: float = 0.0) -> "PsdMatrix":
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NotPsd("matrix must be square")
        scale = max(np.abs(A).max(initial=0.0), 1.0)
        if np.abs(A - A.T).max(initial=0.0) > 1e-10 * scale:
            raise NotPsd("matrix is not symmetric")
        A = (A + A.T) / 2
        lo = float(np.linalg.eigvalsh(A)[0]) if A.size else 0.0
        if lo < floor - 1e-9 * scale:
            raise NotPsd(f"smallest eigenvalue {lo:.3e} is below {floor:.3e}")
        A.setflags(write=False)
        return cls(A, lo)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _check_range(basis: np.ndarray, X: np.ndarray) -> None:
    X = np.atleast_2d(X.T).T
    resid = X - basis @ (basis.T @ X)
    norms = np.linalg.norm(X, axis=0)
    bad = np.linalg.norm(resid, axis=0) > RANGE_TOL * np.maximum(norms, 1e-300)
    if bad.any():
        raise OutOfRange("incidence vector is not in the range of the matrix")


def _pair_vector(n: int, u: int, v: int) -> np.ndarray:
    if not (0 <= u < n and 0 <= v < n) or u == v:
        raise InvalidParameter(f"bad vertex pair ({u}, {v})")
    x = np.zeros(n)
    x[u], x[v] = 1.0, -1.0
    return x


def pseudo_inverse(M) -> tuple[np.ndarray, np.ndarray]:
    """Pseudoinverse and orthonormal range basis with the library's eigenvalue cutoff."""
    w, V = np.linalg.eigh(np.asarray(M, dtype=float))
    _, Vk, wk = _pseudo_parts(w, V)
    return (Vk / wk) @ Vk.T, Vk


def effective_resistance(target, e) -> float:
    """``x^T M^+ x`` for the incidence vector of edge ``e`` or pair ``(u, v)``.

    ``target`` is a :class:`SpectralView` (edge id or pair) or a PSD matrix
    given as :class:`PsdMatrix` or array (pair only).
    """
    if isinstance(target, SpectralView):
        g = target.graph
        u, v = g.edges[e] if np.isscalar(e) else e
        x = _pair_vector(g.n, int(u), int(v))
        _check_range(target.range_basis, x)
        return float(x @ target.pinv @ x)
    M = target.matrix if isinstance(target, PsdMatrix) else np.asarray(target, dtype=float)
    if np.isscalar(e):
        raise InvalidParameter("a matrix target needs an explicit vertex pair")
    u, v = e
    x = _pair_vector(M.shape[0], int(u), int(v))
    pinv, basis = pseudo_inverse(M)
    _check_range(basis, x)
    return float(x @ pinv @ x)


def resistances_under(D, g: MultiGraph) -> np.ndarray:
    """Effective resistance of every edge of ``g`` with respect to a PD matrix ``D``."""
    D = D.matrix if isinstance(D, PsdMatrix) else np.asarray(D, dtype=float)
    B = g.incidence
    if g.m == 0:
        return np.zeros(0)
    try:
        Z = sla.cho_solve(sla.cho_factor(D), B)
    except np.linalg.LinAlgError:
        pinv, basis = pseudo_inverse(D)
        _check_range(basis, B)
        Z = pinv @ B
    return np.einsum("ie,ie->e", B, Z)


def spectral_thinness(g: MultiGraph, T) -> float:
    """Largest eigenvalue of ``L_G^{+/2} L_T L_G^{+/2}``."""
    T = list(T)
    if not T:
        raise InvalidParameter("T must be nonempty")
    view = SpectralView(g)
    if view.component_count > 1:
        raise Disconnected("spectral thinness needs a connected graph")
    A = view.pinv_half @ g.edge_laplacian(T) @ view.pinv_half
    return float(np.linalg.eigvalsh((A + A.T) / 2)[-1])


def fiedler_vector(g: MultiGraph) -> np.ndarray:
    """Second generalized eigenvector of ``L x = lambda D x`` with a fixed sign."""
    d = g.degrees.astype(float)
    _, V = sla.eigh(g.laplacian, np.diag(d), subset_by_index=[1, 1])
    x = V[:, 0]
    nz = np.flatnonzero(np.abs(x) > 1e-12 * np.abs(x).max())
    if nz.size and x[nz[0]] > 0:
        x = -x
    return x


def spectral_partition(g: MultiGraph) -> Cut:
    """Best sweep cut of the Fiedler vector under ``max(phi(S), phi(V - S))``."""
    if g.n < 2:
        raise TooSmall("need at least two vertices")
    if not is_connected(g):
        raise Disconnected("spectral partitioning needs a connected graph")
    x = fiedler_vector(g)
    order = np.lexsort((np.arange(g.n), x))
    A = g.multiplicity
    d = g.degrees.astype(float)
    total = d.sum()
    inside = np.zeros(g.n, dtype=bool)
    cross, vol = 0.0, 0.0
    best, best_k = np.inf, 1
    for k in range(1, g.n):
        v = order[k - 1]
        cross += d[v] - 2.0 * A[v, inside].sum()
        vol += d[v]
        inside[v] = True
        phi = max(cross / vol, cross / (total - vol))
        if phi < best - 1e-12:
            best, best_k = phi, k
    side = canonical_side(g, order[:best_k].tolist())
    return Cut(side, boundary(g, side))


class NuclearNorm(NamedTuple):
    value: float
    maximizer: np.ndarray


def nuclear_norm(A) -> NuclearNorm:
    """Sum of singular values and the semiorthogonal ``U`` attaining ``trace(U A)``.

    For an ``r x c`` matrix with ``r < c`` the input is padded with zero rows,
    so ``U`` always has shape ``c x max(r, c)``.
    """
    A = np.asarray(A, dtype=float)
    r, c = A.shape
    if r < c:
        A = np.vstack([A, np.zeros((c - r, c))])
    P, s, Qt = np.linalg.svd(A, full_matrices=False)
    return NuclearNorm(float(s.sum()), Qt.T @ P.T)


class Dominance(NamedTuple):
    holds: bool
    witness: tuple | None
    margin: float


def cut_dominance(A, B, tol: float = DOMINANCE_TOL) -> Dominance:
    """Exhaustively test ``1_S^T A 1_S <= 1_S^T B 1_S`` over nonempty proper ``S``.

    Both a set and its complement are checked since ``A`` need not have zero
    row sums. The witness is the most violated side, as a sorted tuple.
    """
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    n = A.shape[0]
    subsets.check_size(n)
    if n < 2:
        raise TooSmall("need at least two vertices")
    slack = subsets.quadratic_forms(B - A)
    margin, side = subsets.argbest(slack, subsets.proper_masks(n), n, maximize=False)
    holds = margin >= -tol
    return Dominance(holds, None if holds else side, margin)


def format_matrix(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise GraphFormatError("line 1: missing 'rows cols' header")
    try:
        r, c = (int(x) for x in rows[0])
        M = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise GraphFormatError(f"malformed matrix file: {exc}") from None
    if M.shape != (r, c) and not (r == 0 or c == 0):
        raise GraphFormatError(f"header announces {r}x{c}, found {M.shape}")
    return M.reshape(r, c)


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(f"no such file: {path}")
    return parse_matrix(path.read_text())


def write_matrix(M, path) -> None:
    Path(path).write_text(format_matrix(M))
