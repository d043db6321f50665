"""Contour-count law of the perfect sampler against direct rejection sampling
of disjoint Poisson contour ensembles, plus clan-size statistics."""

import argparse
from collections import Counter

import numpy as np
from scipy import stats

from polyfield.contour import Diverged, perfect_sample, sample_disjoint_by_rejection
from polyfield.geometry import Polygon
from polyfield.linespace import Homogeneous
from polyfield.rng import Stream, make_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--beta", type=float, default=3.0)
    ap.add_argument("--side", type=float, default=1.5)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    st = Stream(make_generator(args.seed))
    M, D = Homogeneous(args.c), Polygon.square(args.side)
    draws = [perfect_sample(M, args.beta, D, st) for _ in range(args.n)]
    done = [d for d in draws if not isinstance(d, Diverged)]
    rej = [sample_disjoint_by_rejection(M, args.beta, D, st) for _ in range(args.n)]
    a = Counter(min(len(d.contours), 3) for d in done)
    b = Counter(min(len(c), 3) for c in rej)
    keys = [k for k in range(4) if a[k] + b[k]]
    p = stats.chi2_contingency(np.array([[a[k] for k in keys], [b[k] for k in keys]]))[1]
    clans = np.array([d.clan_size for d in done])
    print(f"terminated {len(done)}/{args.n}")
    print("count   perfect  rejection")
    for k in keys:
        print(f"{k if k < 3 else '3+':>5} {a[k]:9d} {b[k]:10d}")
    print(f"chi-square p = {p:.4f}")
    print(f"clan size mean {clans.mean():.2f}, max {clans.max()}, horizon max {max(d.horizon for d in done)}")


if __name__ == "__main__":
    main()
