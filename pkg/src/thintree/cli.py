"""Command line entry point: ``thintree <command> ...``.

Numeric results are printed as JSON (stdout or ``-o``); a one-line human
summary goes to stderr. Exit status is 0 on success, 1 on a library error
(reported by name) and 2 on bad usage.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .balls import edge_values, greedy_balls, homogeneous_dominating_subset, witness_profile_inputs
from .cp import CpInstance, solve_cp
from .duals import DualWitness, dyadic_witness, eval_dual_average, eval_dual_max, eval_dual_tree, single_pair_shortcut
from .errors import FileNotFound, InvalidParameter, ThinTreeError
from .generators import amplify, complete, cycle, cycle_expander, dumbbell, dyadic, hypercube, ladder, path, random_connected
from .graph import (
    MultiGraph,
    combinatorial_thinness,
    format_graph,
    graph_expansion,
    min_edge_connectivity,
    read_graph,
)
from .lch import Hierarchy, HierarchyIndex, chain_hierarchy, general_lch, planar_lch, star_hierarchy, validate_lch
from .pipeline import PipelineTrace, certify_pipeline, extract_good_edges, write_trace
from .spectral import SpectralView, format_matrix, spectral_thinness

SEED_ENV = "THINTREE_SEED"


class Session:
    """Per-invocation bookkeeping: seed, input digests and output target."""

    def __init__(self, args):
        self.args = args
        self.seed = args.seed
        self.inputs: dict[str, str] = {}

    def read(self, path) -> bytes:
        p = Path(path)
        if not p.is_file():
            raise FileNotFound(f"no such file: {p}")
        data = p.read_bytes()
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data

    def graph(self, path) -> MultiGraph:
        self.read(path)
        return read_graph(path)

    def json(self, path) -> dict:
        try:
            return json.loads(self.read(path))
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None

    def hierarchy(self, path) -> Hierarchy:
        return Hierarchy.from_json(_unwrap(self.json(path), "hierarchy"))

    def witness(self, path) -> DualWitness:
        return DualWitness.from_json(_unwrap(self.json(path), "witness"), Path(path).parent)

    def report(self, result) -> dict:
        return {
            "format": 1,
            "tool": "thintree",
            "version": __version__,
            "command": self.args.command_name,
            "seed": self.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "result": result,
        }


def _unwrap(data: dict, key: str) -> dict:
    """Accept either a bare object or a command report that carries it under ``result[key]``."""
    inner = data.get("result")
    if isinstance(inner, dict) and key in inner:
        return inner[key]
    return data


def dumps(obj) -> str:
    return json.dumps(obj, default=_json_default)


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def emit(session: Session, result, summary: str) -> None:
    text = dumps(session.report(result)) + "\n"
    out = getattr(session.args, "output", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def parse_ids(text: str | None) -> list[int]:
    if not text:
        return []
    return [int(x) for x in text.replace(",", " ").split()]


def _edge_ids(session: Session, spec: str) -> list[int]:
    """Edge ids from a comma list or, when ``spec`` names a file, its whitespace-separated contents."""
    if Path(spec).suffix or os.sep in spec:
        return parse_ids(session.read(spec).decode())
    return parse_ids(spec)


# gen


def cmd_gen(s: Session) -> None:
    a = s.args
    marks = {}
    fam = a.family
    if fam == "hypercube":
        g = hypercube(a.d, a.mult)
    elif fam == "ladder":
        lad = ladder(a.n, a.k, a.shortcuts)
        g = lad.graph
        marks = {"shortcutEdges": list(lad.shortcut_edges), "verticalEdges": list(lad.vertical_edges)}
    elif fam == "dyadic":
        g = dyadic(a.h, a.k)
    elif fam == "cycle-expander":
        g = cycle_expander(a.m, a.k, s.seed)
    elif fam == "dumbbell":
        g = dumbbell(a.k)
    elif fam == "cycle":
        g = cycle(a.n, a.mult)
    elif fam == "complete":
        g = complete(a.n, a.mult)
    elif fam == "path":
        g = path(a.n, a.mult)
    else:
        g = random_connected(a.n, a.extra, s.seed, a.mult)
    if a.amplify > 1:
        c = a.amplify
        g = amplify(g, c)
        marks = {key: [e * c + j for e in ids for j in range(c)] for key, ids in marks.items()}
    text = format_graph(g)
    digest = hashlib.sha256(text.encode()).hexdigest()
    result = {"family": fam, "n": g.n, "m": g.m, "sha256": digest, "marks": marks}
    if a.graph_out:
        Path(a.graph_out).write_text(text)
        if marks:
            side = Path(str(a.graph_out) + ".json")
            side.write_text(dumps({"format": 1, **marks}) + "\n")
            result["sidecar"] = str(side)
        result["graph"] = str(a.graph_out)
        emit(s, result, f"{fam}: n={g.n} m={g.m} -> {a.graph_out}")
    else:
        sys.stdout.write(text)
        print(f"{fam}: n={g.n} m={g.m}", file=sys.stderr)


# analyze


def cmd_analyze(s: Session) -> None:
    g = s.graph(s.args.graph)
    view = SpectralView(g)
    r = view.resistances()
    conn, cut = min_edge_connectivity(g)
    exp = graph_expansion(g)
    result = {
        "n": g.n,
        "m": g.m,
        "resistances": r,
        "resistanceSum": float(r.sum()),
        "components": view.component_count,
        "connectivity": conn,
        "minCut": list(cut.side),
        "expansion": {"phi": exp.phi, "side": list(exp.witness.side), "heuristic": exp.heuristic},
    }
    emit(s, result, f"n={g.n} m={g.m} sum Reff={r.sum():.6g} connectivity={conn} phi={exp.phi:.6g}")


# lch


def cmd_lch_build(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    if a.method == "planar":
        H = planar_lch(g)
    elif a.method == "general":
        if a.k is None:
            raise InvalidParameter("--k is required for the general method")
        H = general_lch(g, a.k, a.log_base)
    elif a.method == "star":
        H = star_hierarchy(g.n)
    else:
        order = parse_ids(a.order) or list(range(g.n))
        H = chain_hierarchy(order)
    data = H.to_json()
    if a.lch_out:
        Path(a.lch_out).write_text(dumps(data) + "\n")
    emit(s, {"method": a.method, "hierarchy": data}, f"{a.method} hierarchy: {H.n_nodes} nodes, {len(H.marked)} marked")


def cmd_lch_check(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    H = s.hierarchy(a.lch)
    tset = sorted(H.marked) if a.tset is None else parse_ids(a.tset)
    report = validate_lch(g, H, a.k, a.lam, tset)
    emit(s, report.to_json(), f"LCH ({a.k}, {a.lam}) valid={report.ok} violations={len(report.violations)}")


# cp


def _instance(s: Session, g: MultiGraph) -> CpInstance:
    a = s.args
    H = s.hierarchy(a.lch) if a.lch else None
    nodes = tuple(parse_ids(a.nodes)) or None
    declared = tuple(a.declared) if a.declared else None
    return CpInstance(g, a.program, a.mode, hierarchy=H, nodes=nodes, seed=s.seed, declared=declared)


def cmd_cp_solve(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    sol = solve_cp(_instance(s, g))
    ref = None
    if a.matrix_out:
        Path(a.matrix_out).write_text(format_matrix(sol.D.matrix))
        ref = str(a.matrix_out)
    emit(s, sol.to_json(ref), f"{a.program}/{a.mode}: objective={sol.objective:.8g} margin={sol.feasibility_margin:.3g}")


def cmd_cp_dual(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    w = s.witness(a.witness)
    if a.program == "tree":
        if not a.lch:
            raise InvalidParameter("--lch is required for the tree program")
        H = s.hierarchy(a.lch)
        tset = parse_ids(a.nodes) or sorted(H.marked - {H.root})
        val = eval_dual_tree(g, H, tset, w)
        result = {"program": "tree", "ratio": val.ratio, "weighted": val.weighted, "nuclear": val.nuclear}
        value = val.ratio
    elif a.program == "average":
        value = eval_dual_average(g, w)
        result = {"program": "average", "value": value}
    else:
        value = eval_dual_max(g, w)
        result = {"program": "max", "value": value}
    emit(s, result, f"{a.program} dual value={value:.8g}")


def cmd_cp_witness(s: Session) -> None:
    a = s.args
    if a.kind == "dyadic":
        w = dyadic_witness(a.h, a.k)
        data = w.to_json()
        if a.witness_out:
            Path(a.witness_out).write_text(dumps(data) + "\n")
        emit(s, {"kind": "dyadic", "h": a.h, "k": a.k, "witness": data}, f"dyadic witness h={a.h} k={a.k}")
        return
    if a.graph is None or a.a is None or a.b is None:
        raise InvalidParameter("the pair witness needs a graph and --a/--b")
    g = s.graph(a.graph)
    D, k = single_pair_shortcut(g, a.a, a.b)
    from .spectral import effective_resistance

    ref = None
    if a.matrix_out:
        Path(a.matrix_out).write_text(format_matrix(D.matrix))
        ref = str(a.matrix_out)
    reff = effective_resistance(D, (a.a, a.b))
    result = {"kind": "pair", "a": a.a, "b": a.b, "k": k, "resistance": reff, "D": ref or D.matrix.tolist()}
    emit(s, result, f"pair shortcut k={k} Reff_D={reff:.8g}")


# pipeline


def cmd_pipeline_run(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    H = s.hierarchy(a.lch)

    def stream(it):
        line = {"iteration": it.index, "epsilon": it.epsilon, "tau": it.tau, "W": list(it.W), "T": list(it.T), "good": len(it.good)}
        sys.stdout.write(dumps(line) + "\n")
        sys.stdout.flush()

    trace = extract_good_edges(g, H, a.k, a.max_iters, a.mode, s.seed, on_iteration=stream)
    written = []
    if a.trace:
        written = [str(p) for p in write_trace(trace, a.trace)]
    result = {
        "iterations": len(trace.iterations),
        "F": list(trace.F),
        "connectivity": trace.connectivity,
        "maxResistance": trace.max_resistance,
        "nonTermination": trace.nontermination,
        "files": written,
    }
    emit(s, result, f"pipeline: {len(trace.iterations)} iterations, |F|={len(trace.F)}, connectivity={trace.connectivity}")


def cmd_pipeline_certify(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    data = s.json(a.trace)
    base = Path(a.trace).parent
    for it in data.get("iterations", []):
        if isinstance(it.get("D"), str):
            s.read(base / it["D"])
    trace = PipelineTrace.from_json(data, base)
    report = certify_pipeline(g, trace)
    emit(s, report, f"certificate: composition={report.get('composition')}")


# thin


def cmd_thin_check(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    T = parse_ids(s.read(a.tree).decode())
    if not T:
        raise InvalidParameter("the tree file lists no edges")
    spec = spectral_thinness(g, T)
    r = SpectralView(g).resistances()
    result = {"edges": len(T), "spectral": spec, "maxTreeResistance": float(r[T].max())}
    if g.n <= 20:
        comb, cut = combinatorial_thinness(g, T)
        result["combinatorial"] = comb
        result["witness"] = list(cut.side)
    emit(s, result, f"spectral thinness={spec:.6g}" + (f" combinatorial={result['combinatorial']:.6g}" if "combinatorial" in result else ""))


# balls


def cmd_balls_greedy(s: Session) -> None:
    a = s.args
    g = s.graph(a.graph)
    w = s.witness(a.witness)
    F = _edge_ids(s, a.edges) if a.edges else list(range(g.m))
    points, edges, coords = witness_profile_inputs(g, w, F)
    res = greedy_balls(points, edges, coords, a.eps)
    emit(s, res.to_json(), f"greedy: b={res.b} r={res.r:.6g} target={res.target} alpha={res.alpha:.4g}")


def cmd_balls_bucket(s: Session) -> None:
    a = s.args
    if a.values:
        data = s.json(a.values)
        av, bv = np.asarray(data["a"], dtype=float), np.asarray(data["b"], dtype=float)
        ids = data.get("edges")
    else:
        if not (a.graph and a.witness and a.lch and a.node is not None):
            raise InvalidParameter("give --values, or a graph with --witness, --lch and --node")
        g = s.graph(a.graph)
        w = s.witness(a.witness)
        H = s.hierarchy(a.lch)
        ids = HierarchyIndex(g, H).outgoing(a.node).tolist()
        av, bv = edge_values(g, w, ids)
    out = homogeneous_dominating_subset(av, bv, a.alpha, ids)
    result = {
        "edges": out.edges,
        "i": out.i,
        "j": out.j,
        "mu": out.mu,
        "q": out.q,
        "C2": out.c2,
        "dominating": out.dominating,
        "flipped": out.flipped,
    }
    emit(s, result, f"bucket: {len(out.edges)} edges, dominating={out.dominating:.4g} (bound {1 / out.c2:.3g})")


# parser


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(2)


def _seed_default() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        print(f"ignoring non-integer {SEED_ENV}={raw!r}", file=sys.stderr)
        return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
    common.add_argument("-o", "--output", help="write the JSON report here instead of stdout")

    p = Parser(prog="thintree", description="Thin-tree experiments on multigraphs.")
    p.add_argument("--version", action="version", version=f"thintree {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    gen = sub.add_parser("gen", parents=[common], help="generate a graph")
    gen.add_argument("family", choices=["hypercube", "ladder", "dyadic", "cycle-expander", "dumbbell", "cycle", "complete", "path", "random"])
    gen.add_argument("--d", type=int, default=3)
    gen.add_argument("--n", type=int, default=8)
    gen.add_argument("--k", type=int, default=4)
    gen.add_argument("--h", type=int, default=3)
    gen.add_argument("--m", type=int, default=6)
    gen.add_argument("--mult", type=int, default=1)
    gen.add_argument("--extra", type=int, default=4)
    gen.add_argument("--shortcuts", action="store_true")
    gen.add_argument("--amplify", type=int, default=1)
    gen.add_argument("--report", dest="report_out", help="write the JSON report here")
    gen.set_defaults(func=cmd_gen, command_name="gen")

    an = sub.add_parser("analyze", parents=[common], help="resistances, connectivity, expansion")
    an.add_argument("graph")
    an.set_defaults(func=cmd_analyze, command_name="analyze")

    lch = sub.add_parser("lch", help="locally connected hierarchies").add_subparsers(dest="action", required=True, parser_class=Parser)
    b = lch.add_parser("build", parents=[common])
    b.add_argument("graph")
    b.add_argument("--method", choices=["planar", "general", "star", "chain"], default="general")
    b.add_argument("--k", type=float)
    b.add_argument("--log-base", type=float, default=2.0)
    b.add_argument("--order", help="vertex order for the chain method")
    b.add_argument("--save", dest="lch_out", help="write the hierarchy JSON here")
    b.set_defaults(func=cmd_lch_build, command_name="lch build")
    c = lch.add_parser("check", parents=[common])
    c.add_argument("graph")
    c.add_argument("lch")
    c.add_argument("--k", type=float, required=True)
    c.add_argument("--lam", type=float, required=True)
    c.add_argument("--tset", help="nodes to check for the ratio condition (default: marked)")
    c.set_defaults(func=cmd_lch_check, command_name="lch check")

    cpp = sub.add_parser("cp", help="convex programs and dual witnesses").add_subparsers(dest="action", required=True, parser_class=Parser)
    sv = cpp.add_parser("solve", parents=[common])
    sv.add_argument("graph")
    sv.add_argument("--program", choices=["max", "average", "tree"], required=True)
    sv.add_argument("--mode", choices=["box", "psd"], default="box")
    sv.add_argument("--lch")
    sv.add_argument("--nodes")
    sv.add_argument("--declared", type=float, nargs=2, metavar=("K", "LAM"))
    sv.add_argument("--matrix-out")
    sv.set_defaults(func=cmd_cp_solve, command_name="cp solve")
    du = cpp.add_parser("dual", parents=[common])
    du.add_argument("graph")
    du.add_argument("witness")
    du.add_argument("--program", choices=["max", "average", "tree"], required=True)
    du.add_argument("--lch")
    du.add_argument("--nodes")
    du.set_defaults(func=cmd_cp_dual, command_name="cp dual")
    wi = cpp.add_parser("witness", parents=[common])
    wi.add_argument("kind", choices=["dyadic", "pair"])
    wi.add_argument("graph", nargs="?")
    wi.add_argument("--h", type=int, default=3)
    wi.add_argument("--k", type=int, default=4)
    wi.add_argument("--a", type=int)
    wi.add_argument("--b", type=int)
    wi.add_argument("--save", dest="witness_out", help="write the witness JSON here")
    wi.add_argument("--matrix-out")
    wi.set_defaults(func=cmd_cp_witness, command_name="cp witness")

    pl = sub.add_parser("pipeline", help="iterated good-edge extraction").add_subparsers(dest="action", required=True, parser_class=Parser)
    run = pl.add_parser("run", parents=[common])
    run.add_argument("graph")
    run.add_argument("--lch", required=True)
    run.add_argument("--k", type=float, required=True)
    run.add_argument("--max-iters", type=int)
    run.add_argument("--mode", choices=["box", "psd"], default="box")
    run.add_argument("--trace", help="write the trace JSON (and matrix files) here")
    run.set_defaults(func=cmd_pipeline_run, command_name="pipeline run")
    ce = pl.add_parser("certify", parents=[common])
    ce.add_argument("graph")
    ce.add_argument("trace")
    ce.set_defaults(func=cmd_pipeline_certify, command_name="pipeline certify")

    th = sub.add_parser("thin", help="thinness of a spanning tree").add_subparsers(dest="action", required=True, parser_class=Parser)
    tc = th.add_parser("check", parents=[common])
    tc.add_argument("graph")
    tc.add_argument("--tree", required=True, help="file of edge ids")
    tc.set_defaults(func=cmd_thin_check, command_name="thin check")

    bl = sub.add_parser("balls", help="disjoint balls and bucketing").add_subparsers(dest="action", required=True, parser_class=Parser)
    gr = bl.add_parser("greedy", parents=[common])
    gr.add_argument("graph")
    gr.add_argument("witness")
    gr.add_argument("--edges", help="edge ids (comma list or file); default all edges")
    gr.add_argument("--eps", type=float, default=0.25)
    gr.set_defaults(func=cmd_balls_greedy, command_name="balls greedy")
    bu = bl.add_parser("bucket", parents=[common])
    bu.add_argument("graph", nargs="?")
    bu.add_argument("--values", help='JSON file with "a", "b" (and optional "edges") arrays')
    bu.add_argument("--witness")
    bu.add_argument("--lch")
    bu.add_argument("--node", type=int)
    bu.add_argument("--alpha", type=float, required=True)
    bu.set_defaults(func=cmd_balls_bucket, command_name="balls bucket")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = _seed_default()
    if args.command == "gen":
        # gen's -o names the graph file; the report goes to --report or stdout
        args.graph_out, args.output = args.output, args.report_out
    s = Session(args)
    try:
        args.func(s)
    except ThinTreeError as exc:
        err = {"format": 1, "error": exc.name, "message": str(exc), "version": __version__}
        sys.stdout.write(dumps(err) + "\n")
        print(f"error: {exc.name}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
