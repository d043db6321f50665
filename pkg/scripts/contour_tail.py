"""Tail of the contour length under the killed random walk against the
exponential bound 4 c pi exp(-2 c (beta - 2) R) on leftmost-vertex intensity."""

import argparse
import math

import numpy as np

from polyfield.contour import sample_free_contour
from polyfield.linespace import Homogeneous
from polyfield.rng import Stream, make_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100000)
    ap.add_argument("--beta", type=float, default=3.0)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    st = Stream(make_generator(args.seed))
    M = Homogeneous(args.c)
    lengths = np.full(args.n, -1.0)
    for i in range(args.n):
        cont = sample_free_contour(M, args.beta, (0.0, 0.0), st)
        if cont is not None:
            lengths[i] = cont.length()
    print(f"success fraction {np.mean(lengths >= 0):.4f}")
    print(f"{'R':>5} {'intensity':>10} {'se':>8} {'bound':>8}")
    scale = 4 * math.pi * args.c ** 2
    for R in (0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
        p = float(np.mean(lengths > R))
        se = math.sqrt(max(p * (1 - p), 1.0 / args.n) / args.n)
        bound = 4 * args.c * math.pi * math.exp(-2 * args.c * (args.beta - 2) * R)
        print(f"{R:5.2f} {scale * p:10.5f} {scale * se:8.5f} {bound:8.4f}")


if __name__ == "__main__":
    main()
