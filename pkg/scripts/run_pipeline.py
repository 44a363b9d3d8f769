"""Run good-edge extraction on an amplified hypercube or a dyadic graph and certify the trace."""
import argparse
import json
import time

from thintree.generators import amplify, dyadic, hypercube
from thintree.graph import min_edge_connectivity
from thintree.lch import chain_hierarchy, general_lch
from thintree.pipeline import certify_pipeline, extract_good_edges, write_trace


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("family", choices=["hypercube", "dyadic"])
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--c", type=int, default=14, help="amplification factor")
    p.add_argument("--h", type=int, default=3)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--trace", help="write the trace JSON here")
    args = p.parse_args()
    if args.family == "hypercube":
        g = amplify(hypercube(args.d), args.c)
        k = min_edge_connectivity(g)[0]
        H = general_lch(g, k)
    else:
        g = dyadic(args.h, args.k)
        k = args.k
        H = chain_hierarchy(range(g.n))
    start = time.perf_counter()

    def progress(it):
        print(f"iteration {it.index}: |W|={len(it.W)} |T|={len(it.T)} eps={it.epsilon:.4g} good={len(it.good)}", flush=True)

    trace = extract_good_edges(g, H, k, on_iteration=progress)
    cert = certify_pipeline(g, trace)
    if args.trace:
        write_trace(trace, args.trace)
    summary = {key: cert[key] for key in ("connectivity", "maxResistance", "markov", "composition", "withinBound")}
    summary["seconds"] = round(time.perf_counter() - start, 1)
    print(json.dumps(summary))


if __name__ == "__main__":
    main()
