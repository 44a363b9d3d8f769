"""Dual certificates: cut-metric witnesses, their ratios, and explicit constructions."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BadDistribution, BadWitness, Disconnected, InvalidParameter, ZeroDenominator
from .generators import dyadic_long_edge
from .graph import MultiGraph, canonical_side, crossing_mask, local_edge_connectivity
from .lch import Hierarchy, HierarchyIndex
from .spectral import PsdMatrix, nuclear_norm, parse_matrix

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class DualWitness:
    """A cut metric ``X`` (rows are coordinates, columns vertices) with a semiorthogonal ``U``.

    Row ``i`` of ``U`` belongs to edge ``u_edges[i]``; edges without a row
    contribute a zero projection. Row weights turn ``X`` into a weighted cut
    metric. Either ``lambda_nodes`` (node -> weight) or ``lambda_cuts``
    (list of ``(side, weight)``) may be attached.
    """

    X: np.ndarray
    U: np.ndarray
    u_edges: tuple
    row_weights: np.ndarray | None = None
    lambda_nodes: dict | None = None
    lambda_cuts: tuple | None = None

    def __post_init__(self):
        X = np.asarray(self.X)
        if X.ndim != 2 or not np.isin(X, (0, 1)).all():
            raise BadWitness("X must be a 0/1 matrix")
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        if U.size == 0:
            U = np.zeros((0, X.shape[0]))
        if U.shape[1] != X.shape[0]:
            raise BadWitness(f"U has {U.shape[1]} columns but X has {X.shape[0]} rows")
        if U.shape[0] != len(self.u_edges) or len(set(self.u_edges)) != len(self.u_edges):
            raise BadWitness("U needs exactly one row per distinct designated edge")
        if U.shape[0] and np.abs(U @ U.T - np.eye(U.shape[0])).max() > ORTHO_TOL:
            raise BadWitness("U is not semiorthogonal")
        w = self.row_weights
        if w is not None:
            w = np.asarray(w, dtype=float)
            if w.shape != (X.shape[0],) or (w < 0).any():
                raise BadWitness("row weights must be nonnegative, one per row of X")
        object.__setattr__(self, "X", X.astype(np.int64))
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "u_edges", tuple(int(e) for e in self.u_edges))
        object.__setattr__(self, "row_weights", w)
        if self.lambda_cuts is not None:
            object.__setattr__(self, "lambda_cuts", tuple((tuple(int(v) for v in s), float(x)) for s, x in self.lambda_cuts))

    @property
    def scaled(self) -> np.ndarray:
        """``X`` with row ``i`` multiplied by ``sqrt(w_i)``."""
        if self.row_weights is None:
            return self.X.astype(float)
        return np.sqrt(self.row_weights)[:, None] * self.X

    def to_json(self) -> dict:
        data = {
            "format": 1,
            "X": self.X.tolist(),
            "rowWeights": None if self.row_weights is None else self.row_weights.tolist(),
            "U": {str(e): row.tolist() for e, row in zip(self.u_edges, self.U)},
        }
        if self.lambda_nodes is not None:
            data["lambdaNodes"] = {str(t): w for t, w in sorted(self.lambda_nodes.items())}
        if self.lambda_cuts is not None:
            data["lambdaCuts"] = [{"side": list(s), "w": w} for s, w in self.lambda_cuts]
        return data

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "DualWitness":
        X = data["X"]
        if isinstance(X, str):
            X = parse_matrix(((base or Path(".")) / X).read_text())
        X = np.asarray(X)
        rows = sorted(((int(e), r) for e, r in data.get("U", {}).items()))
        U = np.array([r for _, r in rows], dtype=float) if rows else np.zeros((0, X.shape[0]))
        nodes = data.get("lambdaNodes")
        cuts = data.get("lambdaCuts")
        return cls(
            X,
            U,
            tuple(e for e, _ in rows),
            data.get("rowWeights"),
            None if nodes is None else {int(t): float(w) for t, w in nodes.items()},
            None if cuts is None else tuple((tuple(c["side"]), float(c["w"])) for c in cuts),
        )


def edge_embedding(g: MultiGraph, w: DualWitness) -> np.ndarray:
    """Column ``e`` is ``X x_e``, the embedded edge vector."""
    if w.X.shape[1] != g.n:
        raise BadWitness(f"X has {w.X.shape[1]} columns but the graph has {g.n} vertices")
    return w.scaled @ g.incidence


def projections(g: MultiGraph, w: DualWitness, Xe: np.ndarray | None = None) -> np.ndarray:
    """``<U^e, X x_e>`` for every edge (zero for edges without a row of ``U``)."""
    Xe = edge_embedding(g, w) if Xe is None else Xe
    a = np.zeros(g.m)
    if w.u_edges:
        ids = np.array(w.u_edges)
        if ids.max() >= g.m or ids.min() < 0:
            raise BadWitness("U names an edge the graph does not have")
        a[ids] = np.einsum("ij,ji->i", w.U, Xe[:, ids])
    return a


def _denominator(Xe: np.ndarray) -> float:
    den = float((Xe**2).sum())
    if den <= 1e-15:
        raise ZeroDenominator("every edge has length zero under X")
    return den


class TreeDual(NamedTuple):
    ratio: float
    weighted: float | None
    nuclear: float | None


def _check_distribution(weights) -> None:
    weights = np.asarray(list(weights), dtype=float)
    if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-9:
        raise BadDistribution("weights must be nonnegative and sum to 1")


def node_edge_weights(g: MultiGraph, H: Hierarchy, lambda_nodes: dict) -> np.ndarray:
    """``W_ee = sqrt(sum over t with e in O(t) of lambda_t / |O(t)|)``."""
    index = HierarchyIndex(g, H)
    acc = np.zeros(g.m)
    for t, lam in lambda_nodes.items():
        ids = index.outgoing(int(t))
        if ids.size:
            acc[ids] += lam / ids.size
    return np.sqrt(acc)


def eval_dual_tree(g: MultiGraph, H: Hierarchy, tset, w: DualWitness) -> TreeDual:
    """Tree-program dual ratio; with node weights also the weighted and nuclear forms."""
    index = HierarchyIndex(g, H)
    Xe = edge_embedding(g, w)
    den = _denominator(Xe)
    a = projections(g, w, Xe)
    num = 0.0
    for t in sorted(set(int(t) for t in tset)):
        ids = index.outgoing(t)
        if ids.size:
            num += a[ids].sum() ** 2 / ids.size
    weighted = nuclear = None
    if w.lambda_nodes is not None:
        _check_distribution(w.lambda_nodes.values())
        W = node_edge_weights(g, H, w.lambda_nodes)
        weighted = float((W * a).sum() ** 2 / den)
        Z = w.scaled.T @ w.scaled
        nuclear = float(nuclear_norm(Xe * W).value ** 2 / (Z * g.laplacian).sum())
    return TreeDual(num / den, weighted, nuclear)


def cut_edge_weights(g: MultiGraph, lambda_cuts) -> np.ndarray:
    """``gamma_e``: each cut spreads its weight evenly over its edges."""
    gamma = np.zeros(g.m)
    for side, lam in lambda_cuts:
        cross = crossing_mask(g, canonical_side(g, side))
        if not cross.any():
            raise BadDistribution(f"cut {tuple(side)} has no edges")
        gamma[cross] += lam / cross.sum()
    return gamma


def eval_dual_average(g: MultiGraph, w: DualWitness) -> float:
    if w.lambda_cuts is None:
        raise BadDistribution("the witness carries no cut weights")
    _check_distribution([x for _, x in w.lambda_cuts])
    Xe = edge_embedding(g, w)
    den = _denominator(Xe)
    a = projections(g, w, Xe)
    gamma = cut_edge_weights(g, w.lambda_cuts)
    return float((np.sqrt(gamma) * a).sum() ** 2 / den)


def eval_dual_max(g: MultiGraph, w: DualWitness) -> float:
    Xe = edge_embedding(g, w)
    den = _denominator(Xe)
    a = projections(g, w, Xe)
    return float((a**2).sum() / den)


def witness_from_weights(g: MultiGraph, X, W: np.ndarray, row_weights=None) -> DualWitness:
    """Witness whose ``U`` maximizes ``sum_e W_ee <U^e, X x_e>`` for the given ``X``.

    ``X`` is padded with zero rows so that ``U`` can carry one row per edge.
    """
    X = np.asarray(X)
    h = X.shape[0]
    if h < g.m:
        X = np.vstack([X, np.zeros((g.m - h, g.n), dtype=X.dtype)])
        if row_weights is not None:
            row_weights = np.concatenate([row_weights, np.zeros(g.m - h)])
    tmp = DualWitness(X, np.zeros((0, X.shape[0])), (), row_weights)
    Xe = edge_embedding(g, tmp) * W
    U = nuclear_norm(Xe).maximizer
    return DualWitness(X, U, tuple(range(g.m)), row_weights)


def dyadic_witness(h: int, k: int) -> DualWitness:
    """The prefix cut metric with Haar-wavelet rows of ``U`` on the dyadic graph.

    Vertex ``i`` is embedded as the indicator of the first ``i`` of ``2^h``
    coordinates. For each level ``0 <= i < h`` the edge
    ``{2j 2^i, (2j+1) 2^i}`` receives the unit vector that is constant on
    the ``2^i`` coordinates the edge covers and opposite on the next ``2^i``.
    Cut weights are uniform over the ``2^h`` threshold cuts.
    """
    if h < 1 or k < 1:
        raise InvalidParameter("need h >= 1 and k >= 1")
    n = 1 << h
    X = np.zeros((n, n + 1), dtype=np.int64)
    for v in range(n + 1):
        X[:v, v] = 1
    rows, edges = [], []
    for i in range(h):
        size = 1 << i
        scale = 1.0 / np.sqrt(2 * size)
        for j in range(n // (2 * size)):
            start = 2 * j * size
            row = np.zeros(n)
            row[start : start + size] = -scale
            row[start + size : start + 2 * size] = scale
            rows.append(row)
            edges.append(dyadic_long_edge(h, k, i, 2 * j))
    cuts = tuple((tuple(range(l + 1, n + 1)), 1.0 / n) for l in range(n))
    return DualWitness(X, np.array(rows), tuple(edges), None, None, cuts)


def single_pair_shortcut(g: MultiGraph, a: int, b: int) -> tuple[PsdMatrix, int]:
    """``D = k L_{a,b}`` where ``k`` is the number of edge-disjoint ``a``-``b`` paths."""
    if a == b:
        raise InvalidParameter("the pair must consist of two distinct vertices")
    k = local_edge_connectivity(g, a, b)
    if k == 0:
        raise Disconnected(f"vertices {a} and {b} are in different components")
    x = np.zeros(g.n)
    x[a], x[b] = 1.0, -1.0
    return PsdMatrix.certify(k * np.outer(x, x)), k
