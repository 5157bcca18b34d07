"""Slow brute-force references used to certify derived values.

Nothing here touches the projector: only gauge evaluation, cone membership
and the cones' Euclidean projections are shared.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cone import Cone
from .gauge import Gauge
from .sphere import normalize, sphere_directions

MAX_DIM = 4


@dataclass(frozen=True, eq=False)
class OracleResult:
    value: object
    budget: int
    accuracy: float
    low_confidence: bool = False

    def to_record(self):
        v = self.value.tolist() if isinstance(self.value, np.ndarray) else self.value
        return {"value": v, "budget": self.budget, "accuracy": self.accuracy,
                "low_confidence": self.low_confidence}


def _check_dim(n):
    if n > MAX_DIM:
        raise ValueError(f"oracles are limited to n <= {MAX_DIM}")


def _pattern_search(f, y0, h0, h_min, dirs_fn, retract, max_evals):
    """Compass search with a shrinking step; moves are retracted onto the feasible set."""
    y = retract(y0)
    fy = f(y)
    h = h0
    evals = 1
    while h >= h_min and evals < max_evals:
        improved = False
        for d in dirs_fn():
            z = retract(y + h * d)
            fz = f(z)
            evals += 1
            if fz < fy:
                y, fy, improved = z, fz, True
                break
        if not improved:
            h *= 0.5
    return y, fy, h, evals


def _flat_width(f, y, fy, dirs, retract, h_min, h_max):
    """Largest move from ``y`` that leaves ``f`` within rounding of ``fy``.

    Points inside this width cannot be told apart by function values, so it
    bounds how well the minimizer is located.
    """
    level = fy + 16 * np.finfo(float).eps * max(abs(fy), 1.0)
    width = 0.0
    for d in dirs:
        s = h_min
        while s < h_max:
            z = retract(y + 2 * s * d)
            if f(z) > level:
                break
            s *= 2
        width = max(width, float(np.linalg.norm(retract(y + s * d) - y)) if f(retract(y + s * d)) <= level else 0.0)
    return width


def brute_force_project(g: Gauge, c: Cone, x, starts=32, rng=None, h_min=1e-9,
                        objective: Optional[Callable] = None, refine=4, max_evals=200_000):
    """Minimize ``eval(x - y)`` over ``y in c`` by multi-start compass search.

    All ``starts`` feasible points are run to a coarse step; the ``refine`` best
    are continued down to ``h_min``. The accuracy bound combines the final step
    and the spread between the refined minimizers. Flat valleys (quartic
    gauges along a vanishing residual component) make this spread reach
    ~1e-4 even though the minimal values agree to rounding; minima that
    disagree in value, or spread beyond 1e-3, are flagged low-confidence. ``objective`` replaces the
    gauge as the function of the residual ``x - y`` (e.g. ``eval**2``).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    _check_dim(n)
    rng = np.random.default_rng(12345) if rng is None else rng
    f = (lambda y: g.eval(x - y)) if objective is None else (lambda y: objective(x - y))
    scale = max(1.0, float(np.linalg.norm(x)))
    if c.contains(x, 0.0):
        return OracleResult(x.copy(), 1, 0.0)
    eye = np.vstack([np.eye(n), -np.eye(n)])

    def dirs():
        r = rng.standard_normal((2 * n, n))
        r /= np.linalg.norm(r, axis=1, keepdims=True)
        return np.vstack([eye, r, -r])

    seeds = [c.euclidean_project(x), np.zeros(n)]
    while len(seeds) < starts:
        seeds.append(c.euclidean_project(x + scale * rng.standard_normal(n)))
    coarse, used = [], 0
    for y0 in seeds:
        y, fy, h, e = _pattern_search(f, y0, 0.5 * scale, 1e-3 * scale, dirs, c.euclidean_project, max_evals)
        used += e
        coarse.append((fy, y, h))
    coarse.sort(key=lambda t: t[0])
    fine = []
    for fy, y, h in coarse[:refine]:
        y, fy, h, e = _pattern_search(f, y, h, h_min * scale, dirs, c.euclidean_project, max_evals)
        used += e
        fine.append((fy, y, h))
    fine.sort(key=lambda t: t[0])
    best = fine[0][1]
    spread = max(float(np.linalg.norm(y - best)) for _, y, _ in fine)
    gap = fine[-1][0] - fine[0][0]
    width = _flat_width(f, best, fine[0][0], dirs(), c.euclidean_project, h_min * scale, 1e-2 * scale)
    acc = max(spread, width, 2.0 * np.sqrt(n) * h_min * scale)
    low = spread > 1e-3 or gap > 1e-9 * max(1.0, fine[0][0])
    return OracleResult(best, used, acc, bool(low))


def brute_force_dual_norm(g: Gauge, y, directions=10_000, refine=10, rng=None, h_min=1e-10):
    """``sup{<y, x> : eval(x) <= 1}`` by a dense direction sweep plus local refinement."""
    y = np.asarray(y, dtype=float)
    n = y.size
    _check_dim(n)
    rng = np.random.default_rng(54321) if rng is None else rng
    if n == 1:
        # the unit sphere is {-1, +1}; enumerate it
        vals = [float(y[0] * s) / g.eval(np.array([s])) for s in (1.0, -1.0)]
        return OracleResult(max(vals), 2, float(4 * np.finfo(float).eps * max(1.0, abs(y[0]))))
    D = sphere_directions(n, int(directions), rng)
    vals = np.array([float(y @ d) / g.eval(d) for d in D])
    order = np.argsort(vals)[::-1][:refine]

    def f(d):
        return -float(y @ d) / g.eval(d)

    eye = np.vstack([np.eye(n), -np.eye(n)])
    results, used = [], len(D)
    for i in order:
        d, fd, h, e = _pattern_search(f, D[i], 0.05, h_min, lambda: eye, normalize, 100_000)
        used += e
        results.append(-fd)
    results.sort(reverse=True)
    best = results[0]
    # the maximizer is unique, so all refined starts should agree
    acc = max(best - results[-1], 10 * h_min * max(1.0, float(np.linalg.norm(y))))
    return OracleResult(float(best), used, float(acc))


def brute_force_kernel(g: Gauge, c: Cone, directions, threshold=1e-4, rng=None, starts=32):
    """Unit directions ``u`` whose brute-force projection has norm <= ``threshold``.

    ``directions`` is a count (quasi-uniform sweep) or an explicit array.
    """
    rng = np.random.default_rng(777) if rng is None else rng
    if np.isscalar(directions):
        D = sphere_directions(c.dim, int(directions), rng)
    else:
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        D = D / np.linalg.norm(D, axis=1, keepdims=True)
    _check_dim(D.shape[1])
    keep = []
    for u in D:
        res = brute_force_project(g, c, u, starts=starts, rng=rng)
        if np.linalg.norm(res.value) <= threshold:
            keep.append(u)
    return np.array(keep).reshape(-1, D.shape[1])
