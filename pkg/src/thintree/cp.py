"""Cut-preserving convex programs over PD shortcut matrices.

Three programs minimize an effective-resistance objective over PD matrices
``D`` whose cut values do not exceed those of ``L_G``:

* ``max``: the largest ``Reff_D(e)`` over edges;
* ``average``: the largest mean ``Reff_D`` over the edges of any cut;
* ``tree``: the largest mean ``Reff_D`` over ``O(t)`` for marked hierarchy nodes.

Each resistance constraint is written as ``trace(B^T D^{-1} B) <= eps`` and
handed to a conic solver; cut constraints are generated lazily by an exact
(``n <= 20``) or local-search separation oracle.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import cvxpy as cp
import numpy as np

from . import subsets
from .errors import Disconnected, InvalidInstance, InvalidParameter, SolverStalled
from .graph import MultiGraph, canonical_side, is_connected
from .lch import Hierarchy, HierarchyIndex, validate_lch
from .spectral import PsdMatrix, resistances_under, spectral_partition

log = logging.getLogger(__name__)

PROGRAMS = ("max", "average", "tree")
MODES = ("box", "psd")
SOLVER_OPTIONS = {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10, "max_iter": 500}


def default_floor(g: MultiGraph) -> float:
    return 1e-6 * float(np.trace(g.laplacian)) / g.n


@dataclass(frozen=True)
class CpInstance:
    graph: MultiGraph
    program: str
    mode: str = "box"
    hierarchy: Hierarchy | None = None
    nodes: tuple | None = None
    tol_feas: float = 1e-6
    tol_obj: float = 1e-6
    pd_floor: float | None = None
    seed: int = 0
    max_rounds: int = 50
    declared: tuple | None = None
    exhaustive_limit: int = subsets.EXHAUSTIVE_LIMIT
    cuts_per_round: int = 128

    def __post_init__(self):
        if self.program not in PROGRAMS:
            raise InvalidInstance(f"program must be one of {PROGRAMS}")
        if self.mode not in MODES:
            raise InvalidInstance(f"mode must be one of {MODES}")
        g = self.graph
        if g.n < 2 or not is_connected(g):
            raise Disconnected("the programs need a connected graph with at least two vertices")
        if self.program == "tree":
            H = self.hierarchy
            if H is None:
                raise InvalidInstance("the tree program needs a hierarchy")
            nodes = self.nodes
            if nodes is None:
                nodes = sorted(H.marked - {H.root}) or list(H.non_root_nodes)
            nodes = tuple(sorted(set(int(t) for t in nodes)))
            if H.root in nodes:
                raise InvalidInstance("the root has no outgoing edge set")
            object.__setattr__(self, "nodes", nodes)
            if self.declared is not None:
                k, lam = self.declared
                report = validate_lch(g, H, k, lam, nodes)
                if not report.ok:
                    raise InvalidInstance(f"hierarchy is not a ({k}, {lam}, T)-LCH: {report.violations[:3]}")

    @property
    def floor(self) -> float:
        return default_floor(self.graph) if self.pd_floor is None else float(self.pd_floor)

    @property
    def exhaustive(self) -> bool:
        return self.graph.n <= self.exhaustive_limit


class Group(NamedTuple):
    """Edges whose mean resistance is constrained; ``label`` names the constraint."""

    label: object
    edges: tuple


@dataclass
class CpSolution:
    D: PsdMatrix
    objective: float
    solver_objective: float
    active_cuts: list
    feasibility_margin: float
    per_constraint: dict
    edge_resistances: np.ndarray
    rounds: list = field(default_factory=list)
    heuristic: bool = False
    pd_floor: float = 0.0
    program: str = ""
    mode: str = ""

    def to_json(self, matrix_ref: str | None = None) -> dict:
        data = {
            "format": 1,
            "program": self.program,
            "mode": self.mode,
            "objective": self.objective,
            "solverObjective": self.solver_objective,
            "pdFloor": self.pd_floor,
            "feasibilityMargin": self.feasibility_margin,
            "heuristic": self.heuristic,
            "activeCuts": [list(s) for s in self.active_cuts],
            "perConstraint": [{"label": _label_json(k), "value": v} for k, v in self.per_constraint.items()],
            "edgeResistances": self.edge_resistances.tolist(),
            "trace": self.rounds,
        }
        if matrix_ref is None:
            data["D"] = self.D.matrix.tolist()
        else:
            data["D"] = matrix_ref
        return data


def _label_json(label):
    if isinstance(label, tuple):
        return [_label_json(x) for x in label]
    return label


def resistance_groups(inst: CpInstance) -> list[Group]:
    """The resistance constraints that are known up front."""
    g = inst.graph
    if inst.program == "max":
        by_pair = {}
        for e, (u, v) in enumerate(g.edges):
            by_pair.setdefault((min(u, v), max(u, v)), []).append(e)
        return [Group(pair, tuple(ids)) for pair, ids in sorted(by_pair.items())]
    if inst.program == "tree":
        index = HierarchyIndex(g, inst.hierarchy)
        groups = []
        for t in inst.nodes:
            ids = tuple(index.outgoing(t).tolist())
            if not ids:
                raise InvalidInstance(f"node {t} has an empty outgoing edge set")
            groups.append(Group(t, ids))
        return groups
    return [_cut_group(g, side) for side in _starter_sides(g)]


def _cut_group(g: MultiGraph, side) -> Group:
    from .graph import cut_edges

    side = canonical_side(g, side)
    return Group(side, tuple(cut_edges(g, side).tolist()))


def _starter_sides(g: MultiGraph) -> list[tuple]:
    """Every singleton cut plus the degree-weighted sweep cut."""
    sides = [canonical_side(g, [v]) for v in range(g.n)]
    sides.append(spectral_partition(g).side)
    out = []
    for s in sides:
        if s not in out:
            out.append(s)
    return out


def _starter_masks(g: MultiGraph) -> list[int]:
    masks = []
    full = (1 << g.n) - 1 if g.n <= 62 else None
    for side in _starter_sides(g):
        m = subsets.side_to_mask(side)
        for mm in (m, full ^ m):
            if mm not in masks:
                masks.append(mm)
    return masks


def _group_factor(g: MultiGraph, edges) -> np.ndarray:
    """``B`` with ``B B^T`` equal to the mean of ``x_e x_e^T`` over the group."""
    Bx = g.incidence[:, list(edges)]
    A = Bx @ Bx.T / len(edges)
    w, V = np.linalg.eigh(A)
    keep = w > 1e-12 * max(w.max(), 1.0)
    return V[:, keep] * np.sqrt(w[keep])


def _solve_conic(g: MultiGraph, factors, cut_masks, mode: str, delta: float):
    n = g.n
    L = g.laplacian
    D = cp.Variable((n, n), symmetric=True)
    eps = cp.Variable()
    cons = [D - delta * np.eye(n) >> 0]
    cons += [cp.matrix_frac(B, D) <= eps for B in factors]
    if mode == "box":
        if cut_masks:
            S = np.array([[(m >> v) & 1 for v in range(n)] for m in cut_masks], dtype=float)
            rhs = np.einsum("ij,jk,ik->i", S, L, S)
            cons.append(cp.sum(cp.multiply(S @ D, S), axis=1) <= rhs)
    else:
        cons.append(L + delta * np.ones((n, n)) / n - D >> 0)
    prob = cp.Problem(cp.Minimize(eps), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, **SOLVER_OPTIONS)
    if D.value is None:
        raise SolverStalled(f"conic solver returned status {prob.status}")
    Dv = (D.value + D.value.T) / 2
    return Dv, float(eps.value), prob.status


def _lift_floor(D: np.ndarray, delta: float) -> np.ndarray:
    lo = np.linalg.eigvalsh(D)[0]
    if lo < delta:
        D = D + (delta - lo) * np.eye(D.shape[0])
    return D


class Violation(NamedTuple):
    side: tuple | None
    amount: float
    heuristic: bool
    vector: np.ndarray | None = None


def local_search_max(M: np.ndarray, seed: int = 0, restarts: int = 20) -> list[tuple[float, int]]:
    """Single-flip hill climbing for ``max 1_S^T M 1_S`` over nonempty proper ``S``.

    Returns the distinct local optima as ``(value, mask)`` pairs, best first.
    """
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    diag = np.diag(M)
    found = {}
    for _ in range(restarts):
        x = rng.integers(0, 2, size=n).astype(bool)
        if x.all() or not x.any():
            x[rng.integers(n)] ^= True
        y = M @ x
        while True:
            gain = np.where(x, diag - 2 * y, diag + 2 * y)
            size = x.sum()
            gain[x & (size == 1)] = -np.inf
            gain[~x & (size == n - 1)] = -np.inf
            i = int(np.argmax(gain))
            if gain[i] <= 1e-12:
                break
            y += M[:, i] if not x[i] else -M[:, i]
            x[i] = not x[i]
        mask = int(sum(1 << int(v) for v in np.flatnonzero(x)))
        found[mask] = float(x @ M @ x)
    return sorted(((v, m) for m, v in found.items()), key=lambda p: (-p[0], subsets.mask_to_side(p[1], n)))


def _ranked_violations(M: np.ndarray, tol: float, exhaustive: bool, seed: int) -> list[tuple[float, int]]:
    n = M.shape[0]
    if exhaustive:
        q = subsets.quadratic_forms(M)
        masks = subsets.proper_masks(n)
        vals = q[masks]
        hit = np.flatnonzero(vals > tol)
        ranked = sorted(((float(vals[i]), int(masks[i])) for i in hit), key=lambda p: (-p[0], subsets.mask_to_side(p[1], n)))
        return ranked
    return [p for p in local_search_max(M, seed) if p[0] > tol]


def separation_oracle(
    g: MultiGraph,
    D,
    mode: str = "box",
    tol_feas: float = 1e-6,
    method: str = "auto",
    seed: int = 0,
    floor: float | None = None,
) -> Violation | None:
    """Most violated constraint of ``D`` against ``L_G``, or ``None``.

    In box mode this is the side ``S`` maximizing ``1_S^T (D - L_G) 1_S``;
    ``method`` is ``"exhaustive"``, ``"local"`` or ``"auto"`` (exhaustive up
    to n = 20). In psd mode the top eigenvector of ``D - L_G - floor J/n`` is
    reported instead of a side.
    """
    D = D.matrix if isinstance(D, PsdMatrix) else np.asarray(D, dtype=float)
    M = D - g.laplacian
    if mode == "psd":
        delta = default_floor(g) if floor is None else floor
        w, V = np.linalg.eigh(M - delta * np.ones_like(M) / g.n)
        return Violation(None, float(w[-1]), False, V[:, -1]) if w[-1] > tol_feas else None
    if mode != "box":
        raise InvalidParameter(f"unknown mode {mode!r}")
    if method == "auto":
        method = "exhaustive" if g.n <= subsets.EXHAUSTIVE_LIMIT else "local"
    ranked = _ranked_violations(M, tol_feas, method == "exhaustive", seed)
    if not ranked:
        return None
    value, mask = ranked[0]
    return Violation(subsets.mask_to_side(mask, g.n), value, method != "exhaustive")


def feasibility_margin(g: MultiGraph, D: np.ndarray, mode: str, floor: float, exhaustive: bool, seed: int = 0) -> float:
    """Smallest slack of the cut (box) or eigenvalue (psd) constraints."""
    M = D - g.laplacian
    if mode == "psd":
        return -float(np.linalg.eigvalsh(M - floor * np.ones_like(M) / g.n)[-1])
    if exhaustive:
        q = subsets.quadratic_forms(M)
        return -float(q[subsets.proper_masks(g.n)].max())
    return -local_search_max(M, seed)[0][0]


def cut_averages(g: MultiGraph, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``r`` over every cut, indexed by canonical mask (n <= 20)."""
    masks = subsets.canonical_masks(g.n)
    B = g.incidence
    num = subsets.quadratic_forms((B * r) @ B.T)[masks]
    den = subsets.quadratic_forms(g.laplacian)[masks]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(den > 0.5, num / den, -np.inf)
    return masks, avg


def _heavy_cuts(g: MultiGraph, r: np.ndarray, level: float, exhaustive: bool, seed: int) -> list[tuple[float, tuple]]:
    if exhaustive:
        masks, avg = cut_averages(g, r)
        hit = np.flatnonzero(avg > level)
        return sorted(((float(avg[i]), subsets.mask_to_side(masks[i], g.n)) for i in hit), key=lambda p: (-p[0], p[1]))
    B = g.incidence
    M = (B * (r - level)) @ B.T
    out = []
    for value, mask in local_search_max(M, seed):
        if value > 0:
            side = canonical_side(g, subsets.mask_to_side(mask, g.n))
            ids = np.flatnonzero((np.isin(g.tails, side)) != (np.isin(g.heads, side)))
            out.append((float(r[ids].mean()), side))
    return out


def solve_cp(inst: CpInstance) -> CpSolution:
    """Solve the program with lazily generated constraints and certify the result."""
    g = inst.graph
    delta = inst.floor
    groups = resistance_groups(inst)
    factors = [_group_factor(g, grp.edges) for grp in groups]
    masks = _starter_masks(g) if inst.mode == "box" else []
    rounds = []
    heuristic = not inst.exhaustive
    for rnd in range(inst.max_rounds):
        D, eps_solver, status = _solve_conic(g, factors, masks, inst.mode, delta)
        D = _lift_floor(D, delta)
        r = resistances_under(D, g)
        current = max(float(r[list(grp.edges)].mean()) for grp in groups)
        added_cuts, added_groups = [], []
        if inst.mode == "box":
            M = D - g.laplacian
            known = set(masks)
            for value, mask in _ranked_violations(M, inst.tol_feas, inst.exhaustive, inst.seed + rnd):
                if mask not in known:
                    added_cuts.append(mask)
                    known.add(mask)
                if len(added_cuts) >= inst.cuts_per_round:
                    break
        if inst.program == "average":
            labels = {grp.label for grp in groups}
            for value, side in _heavy_cuts(g, r, current + inst.tol_obj, inst.exhaustive, inst.seed + rnd):
                if side not in labels:
                    grp = _cut_group(g, side)
                    added_groups.append(grp)
                    labels.add(side)
                if len(added_groups) >= inst.cuts_per_round:
                    break
        rounds.append(
            {
                "round": rnd,
                "solverObjective": eps_solver,
                "status": status,
                "objective": current,
                "cutsAdded": [list(subsets.mask_to_side(m, g.n)) for m in added_cuts],
                "groupsAdded": [list(grp.label) for grp in added_groups],
            }
        )
        log.debug("round %d: eps=%.8g, +%d cuts, +%d groups", rnd, current, len(added_cuts), len(added_groups))
        if not added_cuts and not added_groups:
            break
        masks += added_cuts
        groups += added_groups
        factors += [_group_factor(g, grp.edges) for grp in added_groups]
    else:
        raise SolverStalled(f"constraints still violated after {inst.max_rounds} rounds")

    per = {grp.label: float(r[list(grp.edges)].mean()) for grp in groups}
    objective = max(per.values())
    if inst.program == "average" and inst.exhaustive:
        objective = float(cut_averages(g, r)[1].max())
    margin = feasibility_margin(g, D, inst.mode, delta, inst.exhaustive, inst.seed)
    return CpSolution(
        D=PsdMatrix.certify(D, floor=0.0),
        objective=objective,
        solver_objective=eps_solver,
        active_cuts=[subsets.mask_to_side(m, g.n) for m in masks],
        feasibility_margin=margin,
        per_constraint=per,
        edge_resistances=r,
        rounds=rounds,
        heuristic=heuristic,
        pd_floor=delta,
        program=inst.program,
        mode=inst.mode,
    )
