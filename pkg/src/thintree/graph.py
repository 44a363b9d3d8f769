"""Multigraphs with stable edge ids, cuts, connectivity, contraction and expansion."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import subsets
from .errors import (
    DegenerateDegree,
    EmptySide,
    FileNotFound,
    GraphFormatError,
    InvalidParameter,
    TooSmall,
)


@dataclass(frozen=True)
class MultiGraph:
    """Undirected multigraph; ``edges[i]`` is edge ``i`` oriented as ``(u, v)``.

    Parallel edges are repeated entries. The orientation fixes the signed
    incidence vector ``1_u - 1_v`` of every edge.
    """

    n: int
    edges: tuple

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise InvalidParameter("vertex count must be nonnegative")
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for i, (u, v) in enumerate(edges):
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge {i} = ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v:
                raise GraphFormatError(f"edge {i} = ({u}, {v}) is a self-loop")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return _frozen(np.array([u for u, _ in self.edges], dtype=np.int64))

    @cached_property
    def heads(self) -> np.ndarray:
        return _frozen(np.array([v for _, v in self.edges], dtype=np.int64))

    @cached_property
    def incidence(self) -> np.ndarray:
        """The ``n x m`` signed incidence matrix, column ``e`` is ``1_u - 1_v``."""
        B = np.zeros((self.n, self.m))
        cols = np.arange(self.m)
        B[self.tails, cols] = 1.0
        B[self.heads, cols] = -1.0
        return _frozen(B)

    @cached_property
    def multiplicity(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        np.add.at(A, (self.tails, self.heads), 1)
        return _frozen(A + A.T)

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(self.multiplicity.sum(axis=1))

    @cached_property
    def laplacian(self) -> np.ndarray:
        return _frozen(np.diag(self.degrees).astype(float) - self.multiplicity)

    def edge_laplacian(self, edge_ids: Iterable[int]) -> np.ndarray:
        ids = np.fromiter(edge_ids, dtype=np.int64)
        B = self.incidence[:, ids]
        return B @ B.T

    def spanning_subgraph(self, edge_ids: Iterable[int]) -> "MultiGraph":
        """Same vertex set, only the listed edges (renumbered in the given order)."""
        return MultiGraph(self.n, tuple(self.edges[i] for i in edge_ids))

    def to_networkx(self) -> nx.Graph:
        """Simple graph whose ``capacity`` attribute counts parallel edges."""
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        counts = Counter((min(u, v), max(u, v)) for u, v in self.edges)
        for (u, v), c in sorted(counts.items()):
            G.add_edge(u, v, capacity=c)
        return G


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Cut:
    side: tuple
    value: int


class Contraction(NamedTuple):
    graph: MultiGraph
    vertex_map: tuple
    edge_ids: tuple


class Induced(NamedTuple):
    graph: MultiGraph
    vertices: tuple
    edge_ids: tuple


class Expansion(NamedTuple):
    phi_side: float
    phi_complement: float
    phi_pair: float


class GraphExpansion(NamedTuple):
    phi: float
    witness: Cut
    heuristic: bool


@dataclass(frozen=True)
class Decomposition:
    parts: tuple
    k: float
    cross_edges: int

    @property
    def boundary_sum(self) -> int:
        return 2 * self.cross_edges

    @property
    def bound(self) -> float:
        return 2 * (self.k - 1) * (len(self.parts) - 1)

    @property
    def within_bound(self) -> bool:
        return self.boundary_sum <= self.bound + 1e-9


def vertex_set(g: MultiGraph, S: Iterable[int]) -> tuple:
    side = tuple(sorted({int(v) for v in S}))
    if side and (side[0] < 0 or side[-1] >= g.n):
        raise InvalidParameter(f"vertex subset leaves [0, {g.n})")
    return side


def proper_side(g: MultiGraph, S: Iterable[int]) -> tuple:
    side = vertex_set(g, S)
    if not side or len(side) == g.n:
        raise EmptySide("a cut side must be a nonempty proper subset")
    return side


def canonical_side(g: MultiGraph, S: Iterable[int]) -> tuple:
    side = proper_side(g, S)
    if side[0] == 0:
        inside = set(side)
        side = tuple(v for v in range(g.n) if v not in inside)
    return side


def indicator(n: int, S: Iterable[int]) -> np.ndarray:
    x = np.zeros(n)
    x[list(S)] = 1.0
    return x


def crossing_mask(g: MultiGraph, S: Iterable[int]) -> np.ndarray:
    inside = np.zeros(g.n, dtype=bool)
    inside[list(S)] = True
    return inside[g.tails] != inside[g.heads]


def cut_edges(g: MultiGraph, S: Iterable[int]) -> np.ndarray:
    return np.flatnonzero(crossing_mask(g, S))


def boundary(g: MultiGraph, S: Iterable[int]) -> int:
    return int(crossing_mask(g, S).sum())


def volume(g: MultiGraph, S: Iterable[int]) -> int:
    return int(g.degrees[list(S)].sum())


def cut_value(g: MultiGraph, S: Iterable[int]) -> Cut:
    side = canonical_side(g, S)
    return Cut(side, boundary(g, side))


def components(g: MultiGraph) -> list[tuple]:
    """Connected components, each sorted, ordered by smallest vertex."""
    if g.n == 0:
        return []
    adj = coo_matrix((np.ones(g.m), (g.tails, g.heads)), shape=(g.n, g.n))
    count, labels = connected_components(adj, directed=False)
    comps = [tuple(np.flatnonzero(labels == c).tolist()) for c in range(count)]
    return sorted(comps)


def is_connected(g: MultiGraph) -> bool:
    return len(components(g)) <= 1


def min_edge_connectivity(g: MultiGraph) -> tuple[int, Cut]:
    """Global minimum cut via maximum flow from vertex 0 to every other vertex.

    Returns 0 with a disconnecting witness when ``g`` is disconnected. Among
    minimum cuts found, the lexicographically smallest canonical side wins.
    """
    if g.n < 2:
        raise TooSmall("a graph with fewer than two vertices has no cuts")
    G = g.to_networkx()
    best_value, best_side = None, None
    for t in range(1, g.n):
        value, (_, sink_side) = nx.minimum_cut(G, 0, t)
        side = tuple(sorted(sink_side))
        value = int(round(value))
        if best_value is None or value < best_value or (value == best_value and side < best_side):
            best_value, best_side = value, side
    return best_value, Cut(best_side, best_value)


def min_cut_exhaustive(g: MultiGraph) -> tuple[int, Cut]:
    """Minimum cut by enumerating every cut (n <= 20)."""
    if g.n < 2:
        raise TooSmall("a graph with fewer than two vertices has no cuts")
    q = subsets.quadratic_forms(g.laplacian)
    value, side = subsets.argbest(q, subsets.canonical_masks(g.n), g.n, maximize=False)
    value = int(round(value))
    return value, Cut(side, value)


def local_edge_connectivity(g: MultiGraph, a: int, b: int) -> int:
    """Maximum number of edge-disjoint paths between ``a`` and ``b``."""
    if a == b:
        raise InvalidParameter("endpoints must differ")
    return int(round(nx.maximum_flow_value(g.to_networkx(), int(a), int(b))))


def is_k_edge_connected(g: MultiGraph, k: float) -> bool:
    if g.n <= 1:
        return True
    return min_edge_connectivity(g)[0] >= k


def quotient(g: MultiGraph, labels) -> tuple[MultiGraph, tuple]:
    """Identify vertices with equal labels (labels must be 0..B-1).

    Edges inside a block are dropped; the rest keep their relative order.
    Returns the quotient graph and the original ids of its edges.
    """
    labels = np.asarray(labels, dtype=np.int64)
    lt, lh = labels[g.tails], labels[g.heads]
    keep = np.flatnonzero(lt != lh)
    blocks = int(labels.max()) + 1 if g.n else 0
    return MultiGraph(blocks, tuple(zip(lt[keep].tolist(), lh[keep].tolist()))), tuple(keep.tolist())


def contract(g: MultiGraph, S: Iterable[int]) -> Contraction:
    """Merge ``S`` into one vertex placed where ``min(S)`` was."""
    side = vertex_set(g, S)
    if not side:
        raise EmptySide("cannot contract an empty set")
    inside = set(side)
    labels, nxt = [0] * g.n, 0
    for v in range(g.n):
        if v in inside and v != side[0]:
            continue
        labels[v] = nxt
        nxt += 1
    for v in side:
        labels[v] = labels[side[0]]
    h, ids = quotient(g, labels)
    return Contraction(h, tuple(labels), ids)


def induced_subgraph(g: MultiGraph, S: Iterable[int]) -> Induced:
    side = vertex_set(g, S)
    if not side:
        raise EmptySide("cannot induce on an empty set")
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[list(side)] = np.arange(len(side))
    pt, ph = pos[g.tails], pos[g.heads]
    keep = np.flatnonzero((pt >= 0) & (ph >= 0))
    h = MultiGraph(len(side), tuple(zip(pt[keep].tolist(), ph[keep].tolist())))
    return Induced(h, side, tuple(keep.tolist()))


def expansion(g: MultiGraph, S: Iterable[int]) -> Expansion:
    side = proper_side(g, S)
    rest = tuple(sorted(set(range(g.n)) - set(side)))
    cross = boundary(g, side)
    d_side, d_rest = volume(g, side), volume(g, rest)
    if d_side == 0 or d_rest == 0:
        raise DegenerateDegree("a side has zero total degree")
    phi_s, phi_c = cross / d_side, cross / d_rest
    return Expansion(phi_s, phi_c, max(phi_s, phi_c))


def graph_expansion(g: MultiGraph, exhaustive_limit: int = subsets.EXHAUSTIVE_LIMIT) -> GraphExpansion:
    """Minimum over cuts of ``max(phi(S), phi(V - S))``.

    Exact for ``n <= exhaustive_limit``; otherwise the spectral sweep cut is
    returned as an upper bound and flagged heuristic.
    """
    if g.n < 2:
        raise TooSmall("a graph with fewer than two vertices has no cuts")
    if g.n > exhaustive_limit:
        from .spectral import spectral_partition

        cut = spectral_partition(g)
        return GraphExpansion(expansion(g, cut.side).phi_pair, cut, True)
    masks = subsets.canonical_masks(g.n)
    cross = subsets.quadratic_forms(g.laplacian)
    vol = subsets.linear_sums(g.degrees)
    total = float(g.degrees.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_s = np.where(vol > 0, cross / vol, 0.0)
        phi_c = np.where(total - vol > 0, cross / (total - vol), 0.0)
    phi, side = subsets.argbest(np.maximum(phi_s, phi_c), masks, g.n, maximize=False)
    return GraphExpansion(phi, Cut(side, boundary(g, side)), False)


def natural_decomposition(g: MultiGraph, k: float) -> Decomposition:
    """Split parts along cuts of size below ``k`` until none remains."""
    if k <= 0:
        raise InvalidParameter("k must be positive")
    if g.n == 0:
        return Decomposition((), k, 0)
    queue, done = deque([tuple(range(g.n))]), []
    while queue:
        part = queue.popleft()
        if len(part) < 2:
            done.append(part)
            continue
        sub = induced_subgraph(g, part)
        value, cut = min_edge_connectivity(sub.graph)
        if value >= k:
            done.append(part)
            continue
        chosen = {part[i] for i in cut.side}
        queue.append(tuple(v for v in part if v in chosen))
        queue.append(tuple(v for v in part if v not in chosen))
    parts = tuple(sorted(done))
    label = np.empty(g.n, dtype=np.int64)
    for i, part in enumerate(parts):
        label[list(part)] = i
    cross = int((label[g.tails] != label[g.heads]).sum())
    return Decomposition(parts, k, cross)


def combinatorial_thinness(g: MultiGraph, T: Iterable[int]) -> tuple[float, Cut]:
    """Largest fraction of a cut's edges that belong to ``T`` (n <= 20)."""
    T = sorted(set(int(e) for e in T))
    if not T:
        raise InvalidParameter("T must be nonempty")
    subsets.check_size(g.n)
    if g.n < 2:
        raise TooSmall("a graph with fewer than two vertices has no cuts")
    masks = subsets.canonical_masks(g.n)
    q_t = subsets.quadratic_forms(g.edge_laplacian(T))
    q_g = subsets.quadratic_forms(g.laplacian)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q_g > 0.5, q_t / q_g, -1.0)
    alpha, side = subsets.argbest(ratio, masks, g.n, maximize=True)
    return alpha, Cut(side, boundary(g, side))


def format_graph(g: MultiGraph) -> str:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> MultiGraph:
    rows = [(i + 1, line.split()) for i, line in enumerate(text.splitlines())]
    rows = [(no, tok) for no, tok in rows if tok]
    if not rows:
        raise GraphFormatError("line 1: missing 'n m' header")
    no, head = rows[0]
    try:
        n, m = (int(x) for x in head)
    except ValueError:
        raise GraphFormatError(f"line {no}: expected 'n m', got {' '.join(head)!r}") from None
    if len(rows) - 1 != m:
        raise GraphFormatError(f"line {no}: header announces {m} edges, found {len(rows) - 1}")
    edges = []
    for no, tok in rows[1:]:
        try:
            u, v = (int(x) for x in tok)
        except ValueError:
            raise GraphFormatError(f"line {no}: expected 'u v', got {' '.join(tok)!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {no}: vertex id out of range [0, {n})")
        if u == v:
            raise GraphFormatError(f"line {no}: self-loop at vertex {u}")
        edges.append((u, v))
    return MultiGraph(n, tuple(edges))


def read_graph(path) -> MultiGraph:
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(f"no such file: {path}")
    return parse_graph(path.read_text())


def write_graph(g: MultiGraph, path) -> None:
    Path(path).write_text(format_graph(g))
