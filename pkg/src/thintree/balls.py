"""Disjoint ball extraction and homogeneous bucketing for dual witnesses.

Points live in the edge-indexed embedding ``Y = U X``: vertex ``v`` maps to
``Y_v`` (a row of the point array) and edge ``e = (u, v)`` to
``Y_e = Y_u - Y_v``, whose ``e``-th coordinate ``Y_{e,e}`` is the projection
of the edge onto its own row of ``U``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .duals import DualWitness, edge_embedding
from .errors import DegenerateEmbedding, InvalidParameter, NotBad, PreconditionFailed
from .graph import MultiGraph

METRICS = ("L1", "L2sq")
BISECTION_STEPS = 30
DOUBLING_START = 2.0**-40


def _pairwise(points: np.ndarray, metric: str) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    if metric == "L1":
        return np.abs(diff).sum(axis=2)
    if metric == "L2sq":
        return (diff**2).sum(axis=2)
    raise InvalidParameter(f"metric must be one of {METRICS}")


def separation(metric: str) -> float:
    """Center distance beyond which two balls of radius ``r`` are disjoint, in units of ``r``."""
    if metric == "L1":
        return 2.0
    if metric == "L2sq":
        return 4.0
    raise InvalidParameter(f"metric must be one of {METRICS}")


@dataclass(frozen=True)
class BallFamily:
    """Balls of a common radius around selected vertices of an embedding."""

    centers: tuple
    points: np.ndarray
    radius: float
    metric: str = "L2sq"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidParameter(f"metric must be one of {METRICS}")
        if self.radius < 0:
            raise InvalidParameter("radius must be nonnegative")

    def __len__(self) -> int:
        return len(self.centers)

    def min_gap(self) -> float:
        """Smallest center distance minus the disjointness threshold (inf for one ball)."""
        if len(self.centers) < 2:
            return math.inf
        P = self.points[list(self.centers)]
        d = _pairwise(P, self.metric)
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min() - separation(self.metric) * self.radius)

    def disjoint(self) -> bool:
        return self.min_gap() > 0

    def to_json(self) -> dict:
        return {"format": 1, "metric": self.metric, "radius": self.radius, "centers": list(self.centers)}


def scan_order(edges) -> list[int]:
    """Endpoints in edge order (tail before head), first occurrence only."""
    seen, order = set(), []
    for u, v in edges:
        for x in (int(u), int(v)):
            if x not in seen:
                seen.add(x)
                order.append(x)
    return order


def greedy_select(points: np.ndarray, order, r: float, metric: str = "L2sq") -> list[int]:
    """Keep each scanned vertex whose ball misses every ball kept so far."""
    threshold = separation(metric) * r
    kept: list[int] = []
    for v in order:
        p = points[v]
        if kept:
            d = points[kept] - p
            dist = np.abs(d).sum(axis=1) if metric == "L1" else (d**2).sum(axis=1)
            if (dist <= threshold).any():
                continue
        kept.append(int(v))
    return kept


def greedy_count(points: np.ndarray, order, r: float, metric: str = "L2sq") -> int:
    return len(greedy_select(points, order, r, metric))


def c1(eps: float) -> float:
    return (192 / eps + 64 / eps**2) ** (1 + eps)


class Profile(NamedTuple):
    """Reverse Cauchy-Schwarz data of the edge vectors ``Y_e``, ``e`` in ``F``."""

    alpha: float
    upsilon: float
    diag: np.ndarray
    sq_norms: np.ndarray
    singular_values: np.ndarray


def edge_matrix(points: np.ndarray, edges) -> np.ndarray:
    """Columns ``Y_u - Y_v`` for the given edges (all coordinates kept)."""
    P = np.asarray(points, dtype=float)
    cols = [P[u] - P[v] for u, v in edges]
    return np.array(cols).T if cols else np.zeros((P.shape[1], 0))


def profile(points: np.ndarray, edges, coords) -> Profile:
    """``alpha = (E Y_ee)^2 / E |Y_e|^2`` and ``upsilon = (E Y_ee)^2`` over the edges."""
    Ye = edge_matrix(points, edges)
    diag = Ye[np.asarray(coords, dtype=int), np.arange(Ye.shape[1])]
    sq = (Ye**2).sum(axis=0)
    mean_sq = float(sq.mean())
    if mean_sq <= 0:
        raise DegenerateEmbedding("every edge of F has length zero")
    upsilon = float(diag.mean()) ** 2
    sigma = np.linalg.svd(Ye, compute_uv=False)
    return Profile(upsilon / mean_sq, upsilon, diag, sq, sigma)


def tail_energy(sigma: np.ndarray, b: int) -> float:
    """``sum_{i >= b} sigma_i^2`` with 1-based ``i``."""
    return float((np.asarray(sigma)[max(b, 1) - 1 :] ** 2).sum())


@dataclass(frozen=True)
class GreedyResult:
    balls: BallFamily
    b: int
    r: float
    target: int
    alpha: float
    upsilon: float
    eps: float
    singular_values: np.ndarray
    schedule: tuple

    @property
    def product(self) -> float:
        return self.r * self.b

    @property
    def guarantee(self) -> float:
        """``alpha^eps * upsilon * |F| / C1(eps)``."""
        return self.alpha**self.eps * self.upsilon * len(self.singular_values) / c1(self.eps)

    @property
    def failure_bound(self) -> float:
        """``(1 / 16|F|) sum_{i >= b} sigma_i^2``, which ``r`` never undercuts."""
        return tail_energy(self.singular_values, self.b) / (16 * len(self.singular_values))

    def to_json(self) -> dict:
        return {
            "format": 1,
            "b": self.b,
            "r": self.r,
            "target": self.target,
            "alpha": self.alpha,
            "upsilon": self.upsilon,
            "eps": self.eps,
            "rTimesB": self.product,
            "guarantee": self.guarantee,
            "failureBound": self.failure_bound,
            "disjoint": self.balls.disjoint(),
            "centers": list(self.balls.centers),
            "schedule": [list(p) for p in self.schedule],
        }


def greedy_balls(points, edges, coords, eps: float) -> GreedyResult:
    """Greedy disjoint ``L_2^2`` balls at the smallest radius giving at most the target count.

    ``edges`` lists the endpoints of the edges of ``F`` and ``coords`` the
    coordinate of ``points`` that belongs to each of them. The target is
    ``ceil(alpha |F| / C1(eps))``. The radius is found by doubling from a tiny
    fraction of the squared diameter and then bisecting; the schedule of
    ``(r, count)`` pairs visited by the doubling phase is kept.
    """
    if not 0 < eps < 0.5:
        raise InvalidParameter("eps must lie in (0, 1/2)")
    P = np.asarray(points, dtype=float)
    edges = [(int(u), int(v)) for u, v in edges]
    if not edges:
        raise InvalidParameter("F must contain at least one edge")
    order = scan_order(edges)
    diam = float(_pairwise(P[order], "L2sq").max())
    if diam <= 0:
        raise DegenerateEmbedding("all endpoints coincide")
    prof = profile(P, edges, coords)
    target = max(1, math.ceil(prof.alpha * len(edges) / c1(eps)))

    count = lambda r: greedy_count(P, order, r)
    hi = diam / 4 * DOUBLING_START
    schedule = [(hi, count(hi))]
    while schedule[-1][1] > target:
        hi *= 2
        schedule.append((hi, count(hi)))
    lo = hi / 2 if len(schedule) > 1 else 0.0
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        if count(mid) <= target:
            hi = mid
        else:
            lo = mid
    kept = greedy_select(P, order, hi)
    balls = BallFamily(tuple(kept), P, hi, "L2sq")
    return GreedyResult(balls, len(kept), hi, target, prof.alpha, prof.upsilon, eps, prof.singular_values, tuple(schedule))


def witness_points(g: MultiGraph, w: DualWitness) -> np.ndarray:
    """Vertex points ``Y_v`` in the edge-indexed space ``R^E`` (``Y = U X``).

    Edges without a row of ``U`` get a zero coordinate.
    """
    U = np.zeros((g.m, w.U.shape[1]))
    if w.u_edges:
        U[list(w.u_edges)] = w.U
    return (U @ w.scaled).T


def witness_profile_inputs(g: MultiGraph, w: DualWitness, F) -> tuple[np.ndarray, list, list]:
    """``(points, edges, coords)`` for :func:`greedy_balls` from a witness and an edge set."""
    F = [int(e) for e in F]
    return witness_points(g, w), [g.edges[e] for e in F], F


def edge_values(g: MultiGraph, w: DualWitness, ids=None) -> tuple[np.ndarray, np.ndarray]:
    """``a_e = <U^e, X x_e>`` and ``b_e = |X x_e|`` for the chosen edges."""
    from .duals import projections

    Xe = edge_embedding(g, w)
    a = projections(g, w, Xe)
    b = np.sqrt((Xe**2).sum(axis=0))
    if ids is None:
        return a, b
    ids = np.asarray(ids, dtype=int)
    return a[ids], b[ids]


def _octave(x: np.ndarray) -> np.ndarray:
    """Integer ``i`` with ``2^i <= x < 2^(i+1)`` for positive ``x``."""
    _, e = np.frexp(x)
    return e.astype(np.int64) - 1


class Bucket(NamedTuple):
    edges: np.ndarray
    i: int
    j: int
    mu: float
    q: float
    c2: float
    dominating: float
    flipped: bool


def bucket_constants(alpha: float) -> tuple[float, float]:
    """``q = 5 + 2 log2(1/alpha)`` and ``C2 = 32 q^2 (5 + q)^2``."""
    q = 5 + 2 * math.log2(1 / alpha)
    return q, 32 * q**2 * (5 + q) ** 2


def homogeneous_dominating_subset(a, b, alpha: float, ids=None) -> Bucket:
    """Two-level bucketing of a bad node's edges into a 2-homogeneous subset.

    Edges are first grouped by ``a_e / mu`` in powers of ``sqrt 2`` (indices
    ``-5 <= i < q``) and the group maximizing ``P(O_i) min a`` is kept; it is
    then split by ``b_e / min a`` (indices ``0 <= j < q``) and the most
    populous part returned. Ties go to the smaller index. When the mean of
    ``a`` is negative the signs of ``a`` are flipped first.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise InvalidParameter("a and b must be nonempty vectors of equal length")
    if not 0 < alpha < 1:
        raise InvalidParameter("alpha must lie in (0, 1)")
    if (np.abs(a) > b * (1 + 1e-12) + 1e-15).any():
        bad = int(np.flatnonzero(np.abs(a) > b * (1 + 1e-12) + 1e-15)[0])
        raise PreconditionFailed(f"|a_e| > b_e at position {bad}")
    ids = np.arange(a.size) if ids is None else np.asarray(ids, dtype=int)
    mu = float(a.mean())
    flipped = mu < 0
    if flipped:
        a, mu = -a, -mu
    if mu**2 < alpha * float((b**2).mean()):
        raise NotBad(f"(E a)^2 = {mu**2:.6g} is below alpha E b^2 = {alpha * float((b**2).mean()):.6g}")
    q, C2 = bucket_constants(alpha)

    pos = a > 0
    i_of = np.full(a.size, np.iinfo(np.int64).min)
    i_of[pos] = _octave((a[pos] / mu) ** 2)
    best_i, best_score = None, -math.inf
    for i in range(-5, math.ceil(q)):
        members = i_of == i
        if i >= q or not members.any():
            continue
        score = members.mean() * a[members].min()
        if score > best_score:
            best_i, best_score = i, score
    if best_i is None:
        raise NotBad("no edge falls in a usable projection bucket")
    in_i = i_of == best_i
    a_min = float(a[in_i].min())
    j_of = np.full(a.size, -1)
    j_of[in_i] = _octave((b[in_i] / a_min) ** 2)
    best_j, best_count = None, 0
    for j in range(0, math.ceil(q)):
        cnt = int((j_of == j).sum())
        if j < q and cnt > best_count:
            best_j, best_count = j, cnt
    if best_j is None:
        raise NotBad("every edge of the chosen bucket is too long")
    chosen = np.flatnonzero(j_of == best_j)
    dominating = float(a[chosen].sum() ** 2 / a.sum() ** 2)
    return Bucket(ids[chosen], best_i, best_j, mu, q, C2, dominating, flipped)


def is_homogeneous(a, b, c: float = 2.0) -> bool:
    """Pairwise ratios of ``a^2`` and of ``b^2`` all below ``c``."""
    a2 = np.asarray(a, dtype=float) ** 2
    b2 = np.asarray(b, dtype=float) ** 2
    if a2.size == 0:
        return True
    if a2.min() <= 0 or b2.min() <= 0:
        return False
    return a2.max() / a2.min() < c and b2.max() / b2.min() < c
