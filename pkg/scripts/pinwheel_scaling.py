"""Edge-correlation ratio of cyclic probe collections as they shrink.

Prints, per scale, the exact (Mecke-formula) estimate of the joint edge
correlation over the product of line activities for the rectangular square
pinwheel (configuration count N = 2) and the homogeneous triangle pinwheel
(N = 0). Small scales approach N; an acyclic pair is shown for reference.
"""

import argparse
import math

from polyfield.correlations import ProbeCollection, count_configs, palm_edge_correlation, pinwheel
from polyfield.geometry import Polygon
from polyfield.linespace import Homogeneous, Line, RectangularStandard
from polyfield.rng import Stream, make_generator


def square(c, h):
    return [(c[0] - h, c[1] - h), (c[0] + h, c[1] - h), (c[0] + h, c[1] + h), (c[0] - h, c[1] + h)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scales", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.02])
    args = ap.parse_args()
    st = Stream(make_generator(args.seed))
    c = (0.5, 0.5)
    print(f"{'scale':>7} {'case':<22} {'N':>2} {'ratio':>8} {'se':>7}")
    for r in args.scales:
        window = Polygon.square(2 * r, (c[0] - r, c[1] - r))
        tri = [(c[0] + r / 2 * math.cos(a), c[1] + r / 2 * math.sin(a)) for a in (0.0, 2.1, 4.2)]
        pair = ProbeCollection([(Line.vertical(c[0] - r / 4), (c[0] - r / 4, c[1] - r / 4)),
                                (Line.horizontal(c[1] + r / 4), (c[0] + r / 8, c[1] + r / 4))])
        cases = [("rect square pinwheel", RectangularStandard(), pinwheel(square(c, r / 2))),
                 ("homog triangle", Homogeneous(1.0), pinwheel(tri)),
                 ("rect acyclic pair", RectangularStandard(), pair)]
        for name, M, coll in cases:
            est = palm_edge_correlation(M, window, coll, args.n, st)
            print(f"{r:7.3f} {name:<22} {count_configs(coll):2d} {est.ratio:8.4f} {est.se:7.4f}")


if __name__ == "__main__":
    main()
