"""Locally connected hierarchies: data model, views, validation and constructions."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    Disconnected,
    ExtractionFailed,
    InconsistentLeafMap,
    InvalidHierarchy,
    NoLowDegreeVertex,
    PreconditionFailed,
    UnknownNode,
)
from .graph import (
    MultiGraph,
    boundary,
    components,
    induced_subgraph,
    is_connected,
    min_edge_connectivity,
    natural_decomposition,
    quotient,
)
from .spectral import spectral_partition

log = logging.getLogger(__name__)


class Hierarchy:
    """Rooted tree whose leaves are in bijection with the vertices ``0..n-1``.

    ``parent[t]`` is the parent of node ``t`` (``-1`` for the root) and
    ``leaf_vertex`` maps each leaf node to its vertex. ``marked`` is an
    arbitrary node subset carried along (the node set T of a construction).
    """

    def __init__(self, parent: Iterable[int], leaf_vertex: dict, marked: Iterable[int] = ()):
        parent = tuple(int(p) for p in parent)
        N = len(parent)
        roots = [t for t, p in enumerate(parent) if p == -1]
        if len(roots) != 1:
            raise InvalidHierarchy(f"expected exactly one root, found {len(roots)}")
        if any(p < -1 or p >= N or p == t for t, p in enumerate(parent)):
            raise InvalidHierarchy("parent pointer out of range")
        children = [[] for _ in range(N)]
        for t, p in enumerate(parent):
            if p >= 0:
                children[p].append(t)
        order, stack = [], [roots[0]]
        while stack:
            t = stack.pop()
            order.append(t)
            stack.extend(children[t])
        if len(order) != N:
            raise InvalidHierarchy("parent links contain a cycle")
        leaf_vertex = {int(t): int(v) for t, v in leaf_vertex.items()}
        leaves = sorted(t for t in range(N) if not children[t])
        if sorted(leaf_vertex) != leaves:
            raise InconsistentLeafMap("leaf map keys must be exactly the leaves")
        if sorted(leaf_vertex.values()) != list(range(len(leaves))):
            raise InconsistentLeafMap("leaf map must be a bijection onto 0..n-1")
        marked = frozenset(int(t) for t in marked)
        if any(not 0 <= t < N for t in marked):
            raise UnknownNode("marked node out of range")
        self.parent = parent
        self.root = roots[0]
        self.children = tuple(tuple(c) for c in children)
        self.leaf_vertex = leaf_vertex
        self.marked = marked
        self._topdown = tuple(order)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def n_vertices(self) -> int:
        return len(self.leaf_vertex)

    def check(self, t: int) -> int:
        if not 0 <= t < self.n_nodes:
            raise UnknownNode(f"no node {t}")
        return t

    def is_leaf(self, t: int) -> bool:
        return not self.children[self.check(t)]

    @property
    def internal_nodes(self) -> tuple:
        return tuple(t for t in range(self.n_nodes) if self.children[t])

    @property
    def non_root_nodes(self) -> tuple:
        return tuple(t for t in range(self.n_nodes) if t != self.root)

    @cached_property
    def vertex_leaf(self) -> tuple:
        inv = [0] * self.n_vertices
        for t, v in self.leaf_vertex.items():
            inv[v] = t
        return tuple(inv)

    @cached_property
    def masks(self) -> np.ndarray:
        """``masks[t, v]`` is true iff vertex ``v`` lies below node ``t``."""
        M = np.zeros((self.n_nodes, self.n_vertices), dtype=bool)
        for t in reversed(self._topdown):
            if t in self.leaf_vertex:
                M[t, self.leaf_vertex[t]] = True
            else:
                M[t] = M[list(self.children[t])].any(axis=0)
        M.setflags(write=False)
        return M

    def vertices(self, t: int) -> tuple:
        return tuple(np.flatnonzero(self.masks[self.check(t)]).tolist())

    def depth(self, t: int) -> int:
        d = 0
        while self.parent[t] != -1:
            t, d = self.parent[t], d + 1
        return d

    def with_groups(self, t: int, groups) -> tuple["Hierarchy", list]:
        """Insert a new node under ``t`` for every group of two or more of its children."""
        parent = list(self.parent)
        new_nodes = []
        for group in groups:
            if len(group) < 2:
                continue
            s = len(parent)
            parent.append(t)
            for c in group:
                if parent[c] != t:
                    raise InvalidHierarchy(f"node {c} is not a child of {t}")
                parent[c] = s
            new_nodes.append(s)
        return Hierarchy(parent, self.leaf_vertex, self.marked), new_nodes

    def to_json(self) -> dict:
        return {
            "format": 1,
            "nodes": self.n_nodes,
            "parent": list(self.parent),
            "leafVertex": {str(t): v for t, v in sorted(self.leaf_vertex.items())},
            "marked": sorted(self.marked),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Hierarchy":
        if data.get("format", 1) != 1:
            raise InvalidHierarchy(f"unsupported hierarchy format {data.get('format')}")
        parent = data["parent"]
        if "nodes" in data and int(data["nodes"]) != len(parent):
            raise InvalidHierarchy("node count does not match the parent array")
        leaf = {int(t): int(v) for t, v in data["leafVertex"].items()}
        return cls(parent, leaf, data.get("marked", ()))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Hierarchy)
            and self.parent == other.parent
            and self.leaf_vertex == other.leaf_vertex
            and self.marked == other.marked
        )

    def __hash__(self) -> int:
        return hash((self.parent, tuple(sorted(self.leaf_vertex.items())), self.marked))

    def __repr__(self) -> str:
        return f"Hierarchy(nodes={self.n_nodes}, vertices={self.n_vertices}, root={self.root})"


def star_hierarchy(n: int) -> Hierarchy:
    """One internal node (the root, id ``n``) above leaves ``0..n-1``."""
    if n == 1:
        return Hierarchy([-1], {0: 0})
    return Hierarchy([n] * n + [-1], {i: i for i in range(n)})


def chain_hierarchy(order: Iterable[int]) -> Hierarchy:
    """Caterpillar: ``t_1`` joins the first two vertices, ``t_i`` joins ``t_(i-1)`` and the next.

    Leaves are nodes ``0..n-1`` (leaf ``i`` is vertex ``i``); the internal
    node created at step ``i`` has id ``n + i - 1``. The marked set is the
    leaves of every vertex after the first in ``order``.
    """
    order = [int(v) for v in order]
    n = len(order)
    if sorted(order) != list(range(n)) or n < 2:
        raise InvalidHierarchy("order must be a permutation of at least two vertices")
    parent = [0] * (2 * n - 1)
    parent[order[0]] = parent[order[1]] = n
    for i in range(2, n):
        parent[n + i - 2] = n + i - 1
        parent[order[i]] = n + i - 1
    parent[2 * n - 2] = -1
    return Hierarchy(parent, {i: i for i in range(n)}, order[1:])


class NodeView(NamedTuple):
    node: int
    vertices: tuple
    outgoing: tuple
    leaving: tuple
    internal: MultiGraph | None
    internal_children: tuple
    internal_edge_ids: tuple
    is_root: bool


class HierarchyIndex:
    """Per-node edge sets of a hierarchy over a fixed graph."""

    def __init__(self, g: MultiGraph, H: Hierarchy):
        if H.n_vertices != g.n:
            raise InconsistentLeafMap(f"hierarchy has {H.n_vertices} leaves but graph has {g.n} vertices")
        self.graph, self.hierarchy = g, H
        M = H.masks
        at, ah = M[:, g.tails], M[:, g.heads]
        leave = at != ah
        par = np.array([p if p >= 0 else t for t, p in enumerate(H.parent)])
        out = leave & at[par] & ah[par]
        out[H.root] = False
        self._leaving = leave
        self._outgoing = out
        self._internal = {}

    def outgoing(self, t: int) -> np.ndarray:
        return np.flatnonzero(self._outgoing[self.hierarchy.check(t)])

    def leaving(self, t: int) -> np.ndarray:
        return np.flatnonzero(self._leaving[self.hierarchy.check(t)])

    @cached_property
    def outgoing_sizes(self) -> np.ndarray:
        return self._outgoing.sum(axis=1)

    @cached_property
    def leaving_sizes(self) -> np.ndarray:
        return self._leaving.sum(axis=1)

    def outgoing_matrix(self) -> np.ndarray:
        """Boolean ``nodes x edges`` membership of ``O(t)``."""
        return self._outgoing

    def internal(self, t: int) -> tuple[MultiGraph | None, tuple]:
        """``G{t}``: the subgraph on ``V(t)`` with each child contracted.

        Vertex ``i`` of the result is the ``i``-th child of ``t``. Returns the
        graph and the original ids of its edges.
        """
        H, g = self.hierarchy, self.graph
        H.check(t)
        if t not in self._internal:
            kids = H.children[t]
            if not kids:
                self._internal[t] = (None, ())
            else:
                label = np.full(g.n, -1, dtype=np.int64)
                for i, c in enumerate(kids):
                    label[H.masks[c]] = i
                lt, lh = label[g.tails], label[g.heads]
                keep = np.flatnonzero((lt >= 0) & (lh >= 0) & (lt != lh))
                sub = MultiGraph(len(kids), tuple(zip(lt[keep].tolist(), lh[keep].tolist())))
                self._internal[t] = (sub, tuple(keep.tolist()))
        return self._internal[t]

    def view(self, t: int) -> NodeView:
        H = self.hierarchy
        internal, ids = self.internal(t)
        return NodeView(
            t,
            H.vertices(t),
            tuple(self.outgoing(t).tolist()),
            tuple(self.leaving(t).tolist()),
            internal,
            H.children[t],
            ids,
            t == H.root,
        )


def hierarchy_views(g: MultiGraph, H: Hierarchy, t: int) -> NodeView:
    return HierarchyIndex(g, H).view(t)


@dataclass
class LchReport:
    k: float
    lam: float
    tset: tuple
    valid_nodes: tuple
    violations: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "format": 1,
            "k": self.k,
            "lambda": self.lam,
            "tset": list(self.tset),
            "valid": self.ok,
            "validNodes": list(self.valid_nodes),
            "violations": [{"node": t, "condition": c, "measured": v} for t, c, v in self.violations],
            "measurements": {str(t): m for t, m in sorted(self.measurements.items())},
        }


def validate_lch(g: MultiGraph, H: Hierarchy, k: float, lam: float, tset: Iterable[int] = ()) -> LchReport:
    """Check the three LCH conditions plus the two-children rule.

    Condition 1 (every ``G(t)`` is k-edge-connected) is checked for all nodes,
    condition 2 (``|O(t)| >= k``) for non-root nodes and condition 3
    (``|O(t)| >= lam |P(t)|``) for the nodes in ``tset``.
    """
    index = HierarchyIndex(g, H)
    tset = tuple(sorted(set(int(t) for t in tset)))
    for t in tset:
        H.check(t)
    eps = 1e-9
    report = LchReport(k, lam, tset, ())
    valid = []
    for t in range(H.n_nodes):
        kids = H.children[t]
        size_o, size_p = int(index.outgoing_sizes[t]), int(index.leaving_sizes[t])
        conn = None
        if kids:
            if len(kids) < 2:
                report.violations.append((t, "children", len(kids)))
            verts = H.vertices(t)
            if len(verts) >= 2:
                conn = min_edge_connectivity(induced_subgraph(g, verts).graph)[0]
                if conn < k - eps:
                    report.violations.append((t, "connectivity", conn))
        if t != H.root:
            if size_o < k - eps:
                report.violations.append((t, "outgoing", size_o))
            if size_o >= lam * size_p - eps:
                valid.append(t)
        if t in tset and size_o < lam * size_p - eps:
            report.violations.append((t, "ratio", size_o / size_p if size_p else 0.0))
        report.measurements[t] = {"connectivity": conn, "outgoing": size_o, "leaving": size_p}
    report.valid_nodes = tuple(valid)
    return report


def planar_lch(g: MultiGraph) -> Hierarchy:
    """Binary hierarchy by repeatedly merging a low-degree contracted vertex.

    Each step takes the lowest-id active node with at most five distinct
    neighbors and merges it with the neighbor sharing the most parallel
    edges (lowest id on ties). The first node of every merge is marked.
    """
    n = g.n
    if n == 1:
        return Hierarchy([-1], {0: 0})
    size = 2 * n - 1
    C = np.zeros((size, size), dtype=np.int64)
    C[:n, :n] = g.multiplicity
    parent = [-1] * size
    active = list(range(n))
    marked = []
    nxt = n
    while len(active) > 1:
        sub = C[np.ix_(active, active)]
        nbrs = (sub > 0).sum(axis=1)
        low = np.flatnonzero(nbrs <= 5)
        if low.size == 0:
            raise NoLowDegreeVertex("every contracted vertex has more than five neighbors")
        i1 = int(low[0])
        if nbrs[i1] == 0:
            raise Disconnected(f"contracted vertex {active[i1]} has no neighbors")
        i2 = int(np.argmax(sub[i1]))
        t1, t2 = active[i1], active[i2]
        t = nxt
        nxt += 1
        parent[t1] = parent[t2] = t
        marked.append(t1)
        C[t] = C[t1] + C[t2]
        C[:, t] = C[t]
        C[t, t] = 0
        C[[t1, t2]] = 0
        C[:, [t1, t2]] = 0
        active = [a for a in active if a not in (t1, t2)] + [t]
    return Hierarchy(parent, {i: i for i in range(n)}, marked)


def check_extraction_precondition(g: MultiGraph, k: float, log_base: float = 2.0, verify: bool = True) -> None:
    if g.n < 2:
        raise PreconditionFailed("need at least two vertices")
    need = 7 * math.log(g.n, log_base)
    if k < need:
        raise PreconditionFailed(f"k = {k} is below 7 log(n) = {need:.3f}")
    if verify:
        conn = min_edge_connectivity(g)[0]
        if conn < k:
            raise PreconditionFailed(f"graph is only {conn}-edge-connected, declared k = {k}")


def _phi(g: MultiGraph, S) -> float:
    vol = int(g.degrees[list(S)].sum())
    return boundary(g, S) / vol if vol else 0.0


def expander_extract(g: MultiGraph, k: float, log_base: float = 2.0, verify: bool = True) -> tuple:
    """Find a vertex set inducing a well-connected, dense expander.

    Starting from ``U = V`` the loop strips sparse vertices, descends into a
    spectral sweep side when that side expands no better in ``g`` or when
    both sides expand poorly inside ``G[U]``, and stops once ``G[U]`` is
    ``k/20``-edge-connected. Otherwise a ``k/20`` natural decomposition of
    the better-expanding side of a small cut supplies the answer.
    """
    check_extraction_precondition(g, k, log_base, verify)
    dG = g.degrees
    U = list(range(g.n))
    while True:
        if len(U) < 2:
            raise ExtractionFailed("the working set shrank below two vertices")
        sub = induced_subgraph(g, U).graph
        weak = np.flatnonzero(sub.degrees <= 7 * dG[U] / 20)
        if weak.size:
            log.debug("strip vertex %d", U[weak[0]])
            del U[int(weak[0])]
            continue
        if is_connected(sub):
            local = list(spectral_partition(sub).side)
        else:
            local = list(components(sub)[1])
        chosen = set(local)
        S = [U[i] for i in local]
        T = [U[i] for i in range(len(U)) if i not in chosen]
        phi_u, phi_s, phi_t = _phi(g, U), _phi(g, S), _phi(g, T)
        if phi_s <= phi_u or phi_t <= phi_u:
            log.debug("descend by outer expansion: %.4g %.4g vs %.4g", phi_s, phi_t, phi_u)
            U = S if phi_s <= phi_t else T
            continue
        rest = [i for i in range(len(U)) if i not in chosen]
        inner_s, inner_t = _phi(sub, local), _phi(sub, rest)
        if max(inner_s, inner_t) < 1.0 / k:
            log.debug("descend to smaller side: inner expansions %.4g %.4g", inner_s, inner_t)
            U = S if len(S) <= len(T) else T
            continue
        value, cut = min_edge_connectivity(sub)
        if value >= k / 20:
            return tuple(U)
        side = list(cut.side)
        other = [i for i in range(len(U)) if i not in set(side)]
        if _phi(sub, other) > _phi(sub, side):
            side = other
        parts = natural_decomposition(induced_subgraph(sub, side).graph, k / 20).parts
        for part in parts:
            members = [side[i] for i in part]
            if boundary(sub, members) < k / 10:
                return tuple(sorted(U[i] for i in members))
        raise ExtractionFailed("no part of the decomposition has a small boundary")


def general_lch(g: MultiGraph, k: float, log_base: float = 2.0) -> Hierarchy:
    """Hierarchy built by repeatedly extracting an expander from the contracted graph.

    Every node is marked.
    """
    check_extraction_precondition(g, k, log_base, verify=True)
    n = g.n
    parent = [-1] * n
    W = list(range(n))
    block = np.arange(n)
    while len(W) > 1:
        contracted, _ = quotient(g, block)
        U = expander_extract(contracted, k, log_base, verify=False)
        if len(U) < 2:
            raise ExtractionFailed("extracted a single contracted vertex")
        t = len(parent)
        parent.append(-1)
        for i in U:
            parent[W[i]] = t
        picked = set(U)
        keep = [i for i in range(len(W)) if i not in picked]
        relabel = np.empty(len(W), dtype=np.int64)
        relabel[keep] = np.arange(len(keep))
        relabel[list(U)] = len(keep)
        block = relabel[block]
        W = [W[i] for i in keep] + [t]
    return Hierarchy(parent, {i: i for i in range(n)}, range(len(parent)))
