"""Deterministic graph families.

Numbering conventions:

* hypercube: vertex ``v`` is the integer with the binary code of the vertex.
* ladder: the u-rail is ``0..n-1`` and the v-rail is ``n..2n-1``.
* dyadic: vertices are the integers ``0..2^h``.
* cycle expander: base vertex ``b`` owns cycle vertices ``b*m .. b*m+m-1``.
"""
from __future__ import annotations

from typing import NamedTuple

import networkx as nx
import numpy as np

from .errors import Indivisible, InfeasibleDegree, InvalidParameter, TooLarge
from .graph import MultiGraph

MAX_RESAMPLES = 1000


def hypercube(d: int, mult: int = 1) -> MultiGraph:
    if d < 1:
        raise InvalidParameter("hypercube dimension must be at least 1")
    if d > 12:
        raise TooLarge("hypercube dimension is capped at 12")
    if mult < 1:
        raise InvalidParameter("multiplicity must be at least 1")
    edges = []
    for v in range(1 << d):
        for i in range(d):
            if not (v >> i) & 1:
                edges += [(v, v | (1 << i))] * mult
    return MultiGraph(1 << d, tuple(edges))


class Ladder(NamedTuple):
    graph: MultiGraph
    shortcut_edges: tuple
    vertical_edges: tuple


def ladder_positions(n: int, k: int) -> list[int]:
    """1-indexed rail positions of the vertical edges."""
    step = n // k
    return [1] + [j * step for j in range(1, k + 1)]


def ladder(n: int, k: int, with_shortcuts: bool = False) -> Ladder:
    """Two rails of ``n`` vertices, ``k`` parallel edges per rail step, ``k+1`` rungs.

    With shortcuts, ``k`` parallel edges join the endpoints of consecutive
    rungs on each rail; these are reported as ``shortcut_edges``.
    """
    if n < 2 or k < 1:
        raise InvalidParameter("need n >= 2 and k >= 1")
    if n % k:
        raise Indivisible(f"k = {k} does not divide n = {n}")
    u = lambda i: i - 1
    v = lambda i: n + i - 1
    edges = []
    for rail in (u, v):
        for i in range(1, n):
            edges += [(rail(i), rail(i + 1))] * k
    pos = ladder_positions(n, k)
    vertical = tuple(range(len(edges), len(edges) + len(pos)))
    edges += [(u(p), v(p)) for p in pos]
    shortcuts = ()
    if with_shortcuts:
        start = len(edges)
        for rail in (u, v):
            for a, b in zip(pos, pos[1:]):
                edges += [(rail(a), rail(b))] * k
        shortcuts = tuple(range(start, len(edges)))
    return Ladder(MultiGraph(2 * n, tuple(edges)), shortcuts, vertical)


def dyadic(h: int, k: int) -> MultiGraph:
    """Path ``0..2^h`` with ``k``-fold steps plus one edge ``{j 2^i, (j+1) 2^i}`` per level."""
    if h < 1 or k < 1:
        raise InvalidParameter("need h >= 1 and k >= 1")
    if h > 14:
        raise TooLarge("dyadic graphs are capped at h = 14")
    n = 1 << h
    edges = []
    for j in range(n):
        edges += [(j, j + 1)] * k
    for i in range(1, h + 1):
        step = 1 << i
        edges += [(j * step, (j + 1) * step) for j in range(n // step)]
    return MultiGraph(n + 1, tuple(edges))


def dyadic_long_edge(h: int, k: int, i: int, j: int) -> int:
    """Edge id of ``{j 2^i, (j+1) 2^i}`` in :func:`dyadic`; level 0 is the first short copy."""
    n = 1 << h
    if i == 0:
        return j * k
    return n * k + sum(n >> l for l in range(1, i)) + j


def regular_base(m: int, k: int, seed: int) -> nx.Graph:
    """Simple connected ``k``-regular graph by resampling the configuration model."""
    if m < 1 or k < 1 or k >= m or (m * k) % 2:
        raise InfeasibleDegree(f"no simple {k}-regular graph on {m} vertices")
    for attempt in range(MAX_RESAMPLES):
        rng = np.random.default_rng([seed, attempt])
        stubs = np.repeat(np.arange(m), k)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        if (pairs[:, 0] == pairs[:, 1]).any():
            continue
        key = np.sort(pairs, axis=1)
        if len(np.unique(key, axis=0)) < len(key):
            continue
        G = nx.Graph()
        G.add_nodes_from(range(m))
        G.add_edges_from(map(tuple, key.tolist()))
        if nx.is_connected(G):
            return G
    raise InfeasibleDegree(f"no simple connected sample after {MAX_RESAMPLES} attempts")


def cycle_expander(m: int, k: int, seed: int = 0) -> MultiGraph:
    """Replace each vertex of a ``k``-regular base graph by a ``k``-fold ``m``-cycle.

    The j-th base edge at a base vertex (by neighbor order) attaches at cycle
    position ``floor(j m / k)``.
    """
    if m < 3:
        raise InvalidParameter("cycle length must be at least 3")
    base = regular_base(m, k, seed)
    edges = []
    for b in range(m):
        for i in range(m):
            edges += [(b * m + i, b * m + (i + 1) % m)] * k
    slot = {}
    for b in range(m):
        for j, c in enumerate(sorted(base.neighbors(b))):
            slot[b, c] = b * m + (j * m) // k
    for a, c in sorted(base.edges()):
        a, c = min(a, c), max(a, c)
        edges.append((slot[a, c], slot[c, a]))
    return MultiGraph(m * m, tuple(edges))


def amplify(g: MultiGraph, c: int) -> MultiGraph:
    """Repeat every edge ``c`` times; copies of edge ``e`` get ids ``e*c .. e*c+c-1``."""
    if c < 1:
        raise InvalidParameter("amplification factor must be at least 1")
    return MultiGraph(g.n, tuple(e for e in g.edges for _ in range(c)))


def dumbbell(k: int) -> MultiGraph:
    """Two vertices joined by ``k`` parallel edges."""
    return MultiGraph(2, ((0, 1),) * k)


def cycle(n: int, mult: int = 1) -> MultiGraph:
    return MultiGraph(n, tuple((i, (i + 1) % n) for i in range(n) for _ in range(mult)))


def complete(n: int, mult: int = 1) -> MultiGraph:
    return MultiGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n) for _ in range(mult)))


def path(n: int, mult: int = 1) -> MultiGraph:
    return MultiGraph(n, tuple((i, i + 1) for i in range(n - 1) for _ in range(mult)))


def random_connected(n: int, extra: int, seed: int, max_mult: int = 1) -> MultiGraph:
    """Random spanning tree plus ``extra`` random edges, each repeated up to ``max_mult`` times."""
    rng = np.random.default_rng(seed)
    edges = []
    order = rng.permutation(n)
    for i in range(1, n):
        edges.append((int(order[i]), int(order[rng.integers(i)])))
    while len(edges) < n - 1 + extra:
        u, v = rng.choice(n, size=2, replace=False)
        edges.append((int(u), int(v)))
    out = [e for e in edges for _ in range(int(rng.integers(1, max_mult + 1)))]
    return MultiGraph(n, tuple(out))
