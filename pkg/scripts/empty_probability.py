"""Empirical probability of an empty field against exp(-<<M>>(D) - M([[D]]))
for several measures and domains, using the sweep sampler."""

import argparse
import math

from polyfield.dynrep import sample_field_dynrep
from polyfield.geometry import Disk, Polygon, unit_square
from polyfield.linespace import Homogeneous, OffsetMeasure, Rectangular, RectangularStandard
from polyfield.rng import Stream, make_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    st = Stream(make_generator(args.seed))
    measures = {
        "rect-standard": RectangularStandard(),
        "rect-warped": Rectangular(OffsetMeasure([(0, 0), (0.5, 2.0), (1, 2.4)]), OffsetMeasure.linear(1.0)),
        "homogeneous(0.7)": Homogeneous(0.7),
    }
    domains = {"unit square": unit_square(), "disk r=0.5": Disk((0.5, 0.5), 0.5),
               "triangle": Polygon(((0.0, 0.0), (1.0, 0.0), (0.3, 0.9)))}
    print(f"{'measure':<18} {'domain':<12} {'empirical':>9} {'target':>8} {'se':>7}")
    for mn, M in measures.items():
        for dn, D in domains.items():
            emp = sum(sample_field_dynrep(M, D, st).is_empty() for _ in range(args.n)) / args.n
            target = math.exp(-M.birth_intensity_total(D) - M.hitting_mass(D))
            se = math.sqrt(target * (1 - target) / args.n)
            print(f"{mn:<18} {dn:<12} {emp:9.5f} {target:8.5f} {se:7.5f}")


if __name__ == "__main__":
    main()
