"""Compare closed-form dual weights of a weighted p-norm with a brute-force sup.

    python3 scripts/dual_weight_check.py --p 4 --omega 2 1 --trials 5
"""
import argparse

import numpy as np

from conekernel import WeightedP
from conekernel.oracle import brute_force_dual_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=4.0)
    ap.add_argument("--omega", type=float, nargs="+", default=[2.0, 1.0])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = WeightedP(args.p, args.omega)
    q = g.conjugate_exponent
    w = np.asarray(args.omega)
    rng = np.random.default_rng(args.seed)
    print(f"p = {args.p}, q = {q:.4f}, omega = {w.tolist()}")
    print(f"{'oracle':>12} {'w^(1-q)':>12} {'1/w':>12}")
    for _ in range(args.trials):
        y = rng.standard_normal(w.size)
        ref = brute_force_dual_norm(g, y)
        naive = float(np.sum(np.abs(y) ** q / w) ** (1 / q))
        print(f"{ref.value:12.8f} {g.dual_norm(y):12.8f} {naive:12.8f}")


if __name__ == "__main__":
    main()
