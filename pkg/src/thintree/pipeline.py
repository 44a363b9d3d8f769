"""Iterated good-edge extraction over adaptively refined hierarchies.

Each round solves the tree program on the current hierarchy, keeps the edges
whose resistance is at most ``16 eps_i``, and splits every unfinished node
whose good internal graph is not ``k/4``-edge-connected by inserting one new
node per part of its natural decomposition.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .cp import CpInstance, solve_cp
from .errors import CertificateMismatch, InvalidParameter
from .graph import MultiGraph, graph_expansion, min_edge_connectivity, natural_decomposition
from .lch import Hierarchy, HierarchyIndex
from .spectral import cut_dominance, parse_matrix, resistances_under, format_matrix

log = logging.getLogger(__name__)

THRESHOLD_FACTOR = 16.0
THRESHOLD_RULE = "tau_i = 16 * eps_i (chosen constant, not derived)"


@dataclass
class Iteration:
    index: int
    hierarchy: Hierarchy
    W: tuple
    T: tuple
    epsilon: float
    tau: float
    good: tuple
    coverage: dict
    node_averages: dict
    expansions: dict
    parts: dict
    D: np.ndarray
    solver: dict = field(default_factory=dict)

    def to_json(self, matrix_ref: str | None = None) -> dict:
        return {
            "iteration": self.index,
            "hierarchy": self.hierarchy.to_json(),
            "W": list(self.W),
            "T": list(self.T),
            "epsilon": self.epsilon,
            "tau": self.tau,
            "F": list(self.good),
            "coverage": {str(t): v for t, v in self.coverage.items()},
            "nodeAverages": {str(t): v for t, v in self.node_averages.items()},
            "expansions": {str(t): v for t, v in self.expansions.items()},
            "parts": {str(t): [list(p) for p in ps] for t, ps in self.parts.items()},
            "D": self.D.tolist() if matrix_ref is None else matrix_ref,
            "solver": self.solver,
        }

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "Iteration":
        D = data["D"]
        D = parse_matrix(((base or Path(".")) / D).read_text()) if isinstance(D, str) else np.array(D, dtype=float)
        return cls(
            index=int(data["iteration"]),
            hierarchy=Hierarchy.from_json(data["hierarchy"]),
            W=tuple(data["W"]),
            T=tuple(data["T"]),
            epsilon=float(data["epsilon"]),
            tau=float(data["tau"]),
            good=tuple(data["F"]),
            coverage={int(t): v for t, v in data["coverage"].items()},
            node_averages={int(t): v for t, v in data["nodeAverages"].items()},
            expansions={int(t): v for t, v in data["expansions"].items()},
            parts={int(t): [tuple(p) for p in ps] for t, ps in data["parts"].items()},
            D=D,
            solver=data.get("solver", {}),
        )


@dataclass
class PipelineTrace:
    k: float
    iterations: list
    F: tuple
    D_avg: np.ndarray
    connectivity: int
    max_resistance: float
    nontermination: bool
    threshold_rule: str = THRESHOLD_RULE

    def to_json(self, matrix_refs: list | None = None) -> dict:
        refs = matrix_refs or [None] * len(self.iterations)
        return {
            "format": 1,
            "k": self.k,
            "thresholdRule": self.threshold_rule,
            "iterations": [it.to_json(ref) for it, ref in zip(self.iterations, refs)],
            "F": list(self.F),
            "connectivity": self.connectivity,
            "maxResistance": self.max_resistance,
            "nonTermination": self.nontermination,
        }

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "PipelineTrace":
        its = [Iteration.from_json(d, base) for d in data["iterations"]]
        return cls(
            k=float(data["k"]),
            iterations=its,
            F=tuple(data["F"]),
            D_avg=np.mean([it.D for it in its], axis=0),
            connectivity=int(data["connectivity"]),
            max_resistance=float(data["maxResistance"]),
            nontermination=bool(data["nonTermination"]),
            threshold_rule=data.get("thresholdRule", THRESHOLD_RULE),
        )


def default_max_iters(k: float) -> int:
    return math.ceil(math.log2(k)) + 2


def _originals_below(H: Hierarchy, c: int, originals: set) -> list:
    if c in originals:
        return [c]
    out = []
    for d in H.children[c]:
        out += _originals_below(H, d, originals)
    return out


def nondominating_children(H: Hierarchy, t: int, d0: dict, originals: set) -> list:
    """Children of ``t`` holding at most half of the iteration-0 degree mass."""
    kids = H.children[t]
    mass = {c: sum(d0[o] for o in _originals_below(H, c, originals)) for c in kids}
    total = sum(mass.values())
    return [c for c in kids if mass[c] <= total / 2]


def _good_internal(index: HierarchyIndex, t: int, good: np.ndarray) -> MultiGraph:
    internal, ids = index.internal(t)
    keep = [j for j, e in enumerate(ids) if good[e]]
    return MultiGraph(internal.n, tuple(internal.edges[j] for j in keep))


def extract_good_edges(
    g: MultiGraph,
    lch0: Hierarchy,
    k: float,
    max_iters: int | None = None,
    mode: str = "box",
    seed: int = 0,
    on_iteration: Callable[[Iteration], None] | None = None,
) -> PipelineTrace:
    if k <= 0:
        raise InvalidParameter("k must be positive")
    max_iters = default_max_iters(k) if max_iters is None else int(max_iters)
    H = lch0
    index0 = HierarchyIndex(g, lch0)
    d0 = {t: int(index0.outgoing_sizes[t]) for t in lch0.non_root_nodes}
    W = list(lch0.internal_nodes)
    originals = {t: set(lch0.children[t]) for t in W}
    T = sorted(lch0.marked - {lch0.root}) or list(lch0.non_root_nodes)
    good = np.zeros(g.m, dtype=bool)
    iterations, Ds = [], []
    nontermination = False
    for i in range(max_iters):
        sol = solve_cp(CpInstance(g, "tree", mode, hierarchy=H, nodes=tuple(T), seed=seed))
        eps = sol.objective
        tau = THRESHOLD_FACTOR * eps
        r = sol.edge_resistances
        fresh = r <= tau
        good |= fresh
        index = HierarchyIndex(g, H)
        coverage, averages = {}, {}
        for t in T:
            ids = index.outgoing(t)
            coverage[t] = float(fresh[ids].mean())
            averages[t] = float(r[ids].mean())
        next_W, parts, expansions = [], {}, {}
        for t in W:
            internal, _ = index.internal(t)
            ge = graph_expansion(internal)
            expansions[t] = {"phi": ge.phi, "heuristic": ge.heuristic}
            dec = natural_decomposition(_good_internal(index, t, good), k / 4)
            kids = H.children[t]
            parts[t] = [tuple(kids[c] for c in part) for part in dec.parts]
            if len(dec.parts) > 1:
                next_W.append(t)
        it = Iteration(
            index=i,
            hierarchy=H,
            W=tuple(W),
            T=tuple(T),
            epsilon=eps,
            tau=tau,
            good=tuple(np.flatnonzero(fresh).tolist()),
            coverage=coverage,
            node_averages=averages,
            expansions=expansions,
            parts=parts,
            D=sol.D.matrix.copy(),
            solver={"rounds": len(sol.rounds), "feasibilityMargin": sol.feasibility_margin, "pdFloor": sol.pd_floor},
        )
        iterations.append(it)
        Ds.append(it.D)
        log.info("iteration %d: eps=%.6g |F_i|=%d |W_next|=%d", i, eps, len(it.good), len(next_W))
        if on_iteration is not None:
            on_iteration(it)
        if not next_W:
            break
        if i == max_iters - 1:
            nontermination = True
            break
        for t in next_W:
            H, _ = H.with_groups(t, parts[t])
        W = next_W
        T = sorted(c for t in W for c in nondominating_children(H, t, d0, originals[t]))
    F = tuple(np.flatnonzero(good).tolist())
    D_avg = np.mean(Ds, axis=0)
    conn = min_edge_connectivity(g.spanning_subgraph(F))[0] if g.n >= 2 else 0
    r_avg = resistances_under(D_avg, g)
    max_r = float(r_avg[list(F)].max()) if F else 0.0
    return PipelineTrace(k, iterations, F, D_avg, conn, max_r, nontermination)


def certify_pipeline(g: MultiGraph, trace: PipelineTrace, tol: float = 1e-6, feas_tol: float = 1e-6) -> dict:
    """Recompute every claim of a trace from its stored matrices and hierarchies."""

    def mismatch(msg):
        raise CertificateMismatch(msg)

    k4 = trace.k / 4
    good = np.zeros(g.m, dtype=bool)
    Rs = []
    retired_ok, inserted_ok, markov_ok = True, True, True
    prev_W = None
    for pos, it in enumerate(trace.iterations):
        if prev_W is not None and not set(it.W) <= set(prev_W):
            mismatch(f"iteration {it.index}: W grew")
        r = resistances_under(it.D, g)
        Rs.append(r)
        index = HierarchyIndex(g, it.hierarchy)
        avgs = {t: float(r[index.outgoing(t)].mean()) for t in it.T}
        eps = max(avgs.values())
        if abs(eps - it.epsilon) > tol:
            mismatch(f"iteration {it.index}: epsilon {it.epsilon} recomputes to {eps}")
        if abs(it.tau - THRESHOLD_FACTOR * it.epsilon) > tol:
            mismatch(f"iteration {it.index}: threshold is not 16 epsilon")
        fresh = r <= it.tau
        if tuple(np.flatnonzero(fresh).tolist()) != tuple(it.good):
            mismatch(f"iteration {it.index}: good edge set does not match")
        for t in it.T:
            ids = index.outgoing(t)
            frac = float(fresh[ids].mean())
            if abs(frac - it.coverage[t]) > tol:
                mismatch(f"iteration {it.index}: coverage of node {t} differs")
            if avgs[t] <= it.epsilon + tol and frac < 15 / 16:
                markov_ok = False
        good |= fresh
        nxt = trace.iterations[pos + 1] if pos + 1 < len(trace.iterations) else None
        still = set(nxt.W) if nxt is not None else (set(it.W) if trace.nontermination else set())
        for t in it.W:
            internal = _good_internal(index, t, good)
            if t not in still and internal.n >= 2 and min_edge_connectivity(internal)[0] < k4:
                retired_ok = False
        if nxt is not None:
            nindex = HierarchyIndex(g, nxt.hierarchy)
            for s in range(it.hierarchy.n_nodes, nxt.hierarchy.n_nodes):
                sub = _good_internal(nindex, s, good)
                if sub.n >= 2 and min_edge_connectivity(sub)[0] < k4:
                    inserted_ok = False
        prev_W = it.W
    F = tuple(np.flatnonzero(good).tolist())
    if F != tuple(trace.F):
        mismatch("union of good edges does not match F")
    D_avg = np.mean([it.D for it in trace.iterations], axis=0)
    lo = float(np.linalg.eigvalsh(D_avg)[0])
    if lo <= 0:
        mismatch("averaged matrix is not positive definite")
    dominance = None
    if g.n <= 20:
        dom = cut_dominance(D_avg, g.laplacian)
        dominance = {"holds": dom.margin >= -feas_tol, "margin": dom.margin}
        if not dominance["holds"]:
            mismatch(f"averaged matrix violates a cut by {-dom.margin}")
    conn = min_edge_connectivity(g.spanning_subgraph(F))[0]
    if conn != trace.connectivity:
        mismatch(f"connectivity of (V, F) is {conn}, trace says {trace.connectivity}")
    r_avg = resistances_under(D_avg, g)
    max_r = float(r_avg[list(F)].max()) if F else 0.0
    if abs(max_r - trace.max_resistance) > tol:
        mismatch(f"max resistance over F is {max_r}, trace says {trace.max_resistance}")
    count = len(trace.iterations)
    averaging_ok = bool((r_avg <= count * np.min(Rs, axis=0) * (1 + 1e-9) + 1e-12).all())
    bound = count * max(it.tau for it in trace.iterations)
    premise = retired_ok and inserted_ok and not trace.nontermination
    return {
        "format": 1,
        "iterations": count,
        "minEigenvalue": lo,
        "cutDominance": dominance,
        "connectivity": conn,
        "maxResistance": max_r,
        "resistanceBound": bound,
        "withinBound": max_r <= bound + tol,
        "markov": markov_ok,
        "averaging": averaging_ok,
        "retiredConnected": retired_ok,
        "insertedConnected": inserted_ok,
        "composition": not premise or conn >= k4,
        "thresholdRule": trace.threshold_rule,
    }


def write_trace(trace: PipelineTrace, path, separate_matrices: bool = True) -> list:
    """Write the trace JSON; each ``D_i`` goes to its own matrix file next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    refs = None
    if separate_matrices:
        refs = []
        for it in trace.iterations:
            name = f"{path.stem}.D{it.index}.txt"
            (path.parent / name).write_text(format_matrix(it.D))
            refs.append(name)
    path.write_text(json.dumps(trace.to_json(refs), indent=1, sort_keys=True) + "\n")
    return [path] + [path.parent / r for r in refs or []]
