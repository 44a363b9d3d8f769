"""Effective resistances on ladders with and without shortcut edges."""
import argparse
import json

import numpy as np

from thintree.generators import ladder
from thintree.spectral import SpectralView


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ns", type=int, nargs="+", default=[40, 80, 160, 320])
    p.add_argument("--ks", type=int, nargs="+", default=[4, 9, 16, 25])
    args = p.parse_args()
    for n in args.ns:
        lad = ladder(n, 4)
        r = SpectralView(lad.graph).resistances()[list(lad.vertical_edges)]
        print(json.dumps({"ladder": n, "k": 4, "minVertical": r.min(), "meanVertical": r.mean()}), flush=True)
    for k in args.ks:
        lad = ladder(16 * k, k, with_shortcuts=True)
        r = SpectralView(lad.graph).resistances()
        keep = np.ones(lad.graph.m, dtype=bool)
        keep[list(lad.shortcut_edges)] = False
        print(json.dumps({"ladder": 16 * k, "k": k, "maxBlack": r[keep].max(), "sqrtKTimesMax": np.sqrt(k) * r[keep].max()}), flush=True)


if __name__ == "__main__":
    main()
