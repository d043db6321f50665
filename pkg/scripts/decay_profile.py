"""Factorisation deviation of the stacked probe template against the
separation between the head probe and the rest, for the rectangular field."""

import argparse

from polyfield.correlations import decay_profile, stacked_template
from polyfield.dynrep import sample_field_dynrep
from polyfield.geometry import Polygon
from polyfield.linespace import RectangularStandard
from polyfield.rng import Stream, make_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--separations", type=float, nargs="+", default=[0.1, 0.25, 0.4, 0.6])
    args = ap.parse_args()
    st = Stream(make_generator(args.seed))
    D = Polygon.rectangle(0.0, 0.0, 1.0, 1.5)
    M = RectangularStandard()
    fields = [sample_field_dynrep(M, D, st) for _ in range(args.n)]
    prof = decay_profile(fields, stacked_template(0.5, 0.4, 0.2), args.separations, args.eps)
    print(f"{'sep':>6} {'ratio':>8} {'se':>7} {'deviation':>10}")
    for s, r, se, d in zip(prof.separations, prof.ratios, prof.ses, prof.deviations):
        print(f"{s:6.3f} {r:8.4f} {se:7.4f} {d:10.4f}")
    print(f"log-linear slope {prof.slope:.3f}, monotone {prof.monotone}")


if __name__ == "__main__":
    main()
