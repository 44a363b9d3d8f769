"""Tree-CP objective on dyadic(h, k) with the chain hierarchy, for a sweep of k."""
import argparse
import json
import time

from thintree.cp import CpInstance, solve_cp
from thintree.duals import dyadic_witness, eval_dual_average
from thintree.generators import dyadic
from thintree.lch import chain_hierarchy


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--h", type=int, default=3)
    p.add_argument("--ks", type=int, nargs="+", default=[4, 8, 16, 32])
    args = p.parse_args()
    rows = []
    for k in args.ks:
        g = dyadic(args.h, k)
        start = time.perf_counter()
        sol = solve_cp(CpInstance(g, "tree", hierarchy=chain_hierarchy(range(g.n)), nodes=range(1, 2**args.h + 1)))
        rows.append(
            {
                "k": k,
                "tree": sol.objective,
                "kTimesTree": k * sol.objective,
                "averageDual": eval_dual_average(g, dyadic_witness(args.h, k)),
                "seconds": round(time.perf_counter() - start, 2),
            }
        )
        print(json.dumps(rows[-1]), flush=True)


if __name__ == "__main__":
    main()
