"""Closed-form kernel of a weighted p-norm projection onto L(xi, k) vs the membership test.

    python3 scripts/power_cone_kernel.py --xi 1 2 --k 2 --p 4
"""
import argparse

import numpy as np

from conekernel import PowerCone, WeightedP, kernel_membership
from conekernel.analysis import power_cone_kernel_analytic
from conekernel.sphere import sphere_directions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--xi", type=float, nargs="+", default=[1.0, 2.0])
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--p", type=float, default=4.0)
    ap.add_argument("--omega", type=float, nargs="+", help="length m + 1 (default all ones)")
    ap.add_argument("--directions", type=int, default=2000)
    ap.add_argument("--band", type=float, default=1e-4)
    args = ap.parse_args()

    xi = np.asarray(args.xi)
    omega = np.ones(xi.size + 1) if args.omega is None else np.asarray(args.omega)
    g, c = WeightedP(args.p, omega), PowerCone(xi, args.k)
    kern = power_cone_kernel_analytic(xi, args.k, omega, args.p)
    print(f"kernel: {kern.to_record()}")
    D = sphere_directions(c.dim, args.directions, np.random.default_rng(0))
    agree = total = 0
    for d in D:
        if abs(kern.margin(d)) < args.band:
            continue
        total += 1
        agree += kern.contains(d, 0.0) == kernel_membership(g, c, d).member
    print(f"agreement {agree}/{total} outside a {args.band:g} band")


if __name__ == "__main__":
    main()
