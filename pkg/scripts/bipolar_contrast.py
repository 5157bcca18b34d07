"""Bipolar scans over random wedges in R^3 for several gauges.

Prints, per gauge, the scan verdict and (for the 4-norm) the first
certified nonconvex wedge with its midpoint witness.

    python3 scripts/bipolar_contrast.py --wedges 50 --seed 0
"""
import argparse
import time

import numpy as np

from conekernel import Ellipsoidal, Euclidean, MeridianArc, WeightedP
from conekernel.analysis import bipolar_scan, coherence_test
from conekernel.sphere import normalize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wedges", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    M = rng.standard_normal((3, 3))
    gauges = {
        "euclidean": Euclidean(3),
        "ellipsoidal": Ellipsoidal(M @ M.T + np.eye(3)),
        "weighted p=3": WeightedP(3, [1.0, 2.0, 0.5]),
        "p=4": WeightedP.uniform(4, 3),
    }
    for label, g in gauges.items():
        t0 = time.perf_counter()
        rep = bipolar_scan(g, args.wedges, args.seed)
        print(f"{label:>14}: {rep.verdict} after {rep.wedges_tested} wedges "
              f"({time.perf_counter() - t0:.1f}s)")
        if rep.counterexample is not None:
            w = rep.report.witness
            print(f"{'':>16}a1 = {np.round(rep.counterexample.a1, 4).tolist()}")
            print(f"{'':>16}a2 = {np.round(rep.counterexample.a2, 4).tolist()}")
            print(f"{'':>16}midpoint margin {w['margin']:.2e}, |P(mid)| = {w['projection_norm']:.2e}")

    g = gauges["p=4"]
    print("\nmeridian ranks under the 4-norm:")
    for b1, b2 in [([1, 0, 0], [0, 1, 1]), ([1, 1, 1], [1, -1, 0]), ([1, 0, 0], [0, 1, 0])]:
        arc = MeridianArc.from_vectors(normalize(b1), normalize(b2), 0, np.pi / 2, 41)
        rep = coherence_test(g, arc)
        print(f"  span{{{b1}, {b2}}}: rank {rep.rank} ({rep.verdict})")


if __name__ == "__main__":
    main()
