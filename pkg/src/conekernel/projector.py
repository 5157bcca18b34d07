"""Gauge projection onto closed convex cones.

``project`` returns ``argmin{gauge(x - y) : y in cone}``. Dispatch order:

* ``x`` already in the cone;
* halfspace with a smooth gauge: closed form through the sigma-ray;
* Euclidean gauge: the cone's own Euclidean projection;
* separable gauge on an orthant: componentwise clamp;
* polyhedral cone: face enumeration, Newton on each face subspace, stopping at
  the first candidate that passes the KKT certificate;
* power cone: Newton over the boundary parametrization, apex checked first;
* anything else: projected descent with Armijo backtracking.

All Newton solves minimize ``0.5 * gauge**2``, which has the same minimizer as
the gauge itself.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cone import Cone, Halfspace, Orthant, PowerCone, nnls
from .errors import DimensionError, UnsupportedOperation
from .gauge import Euclidean, Gauge
from .sphere import null_space

CLOSED_FORM = "closed_form"
CONVERGED = "converged"
MAX_ITER = "max_iter"


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 10_000
    membership_tol: float = 1e-9
    # face enumeration is skipped above this many candidate faces
    max_faces: int = 5000


@dataclass(frozen=True, eq=False)
class ProjectionOutcome:
    point: np.ndarray
    residual: np.ndarray
    distance: float
    status: str
    iterations: int = 0
    stationarity: float = 0.0
    method: str = ""

    def to_record(self):
        return {
            "Px": self.point.tolist(),
            "Rx": self.residual.tolist(),
            "d": self.distance,
            "status": self.status,
            "iterations": self.iterations,
            "stationarity": self.stationarity,
            "method": self.method,
        }


@dataclass(frozen=True, eq=False)
class Membership:
    """Kernel-membership verdict with the gradient evidence behind it."""

    member: bool
    gradient: Optional[np.ndarray]
    margin: float

    def __bool__(self):
        return self.member


def _outcome(g, x, p, status, iterations=0, stationarity=0.0, method=""):
    r = x - p
    return ProjectionOutcome(p, r, g.eval(r), status, iterations, stationarity, method)


def project(g: Gauge, c: Cone, x, opts: Optional[SolverOptions] = None) -> ProjectionOutcome:
    opts = opts or SolverOptions()
    x = np.asarray(x, dtype=float)
    if g.dim != c.dim or x.shape != (c.dim,):
        raise DimensionError("gauge, cone and point dimensions must agree")
    scale = max(1.0, float(np.linalg.norm(x)))
    if c.margin(x) <= 1e-13 * scale:
        return _outcome(g, x, x.copy(), CLOSED_FORM, method="inside")
    if isinstance(c, Halfspace) and g.smooth and g.strictly_convex:
        return project_halfspace(g, c, x)
    if isinstance(g, Euclidean):
        return _outcome(g, x, c.euclidean_project(x), CLOSED_FORM, method="euclidean")
    if g.separable and isinstance(c, Orthant):
        return _outcome(g, x, c.euclidean_project(x), CLOSED_FORM, method="clamp")
    if not g.smooth:
        raise UnsupportedOperation("iterative projection needs a smooth gauge")
    N = c.facet_normals()
    if N is not None:
        out = _project_polyhedral(g, c, x, N, opts)
        if out is not None:
            return out
    elif isinstance(c, PowerCone):
        out = _project_power_cone(g, c, x, opts)
        if out is not None:
            return out
    return projected_descent(g, c, x, opts)


def project_halfspace(g: Gauge, h: Halfspace, x) -> ProjectionOutcome:
    """Closed form: the residual lies on the sigma-ray of the halfspace."""
    x = np.asarray(x, dtype=float)
    ax = float(np.dot(h.a, x))
    if ax <= 0:
        return _outcome(g, x, x.copy(), CLOSED_FORM, method="inside")
    u = g.sigma_ray(h.a)
    t = ax / float(np.dot(h.a, u))
    p = x - t * u
    return _outcome(g, x, p, CLOSED_FORM, method="halfspace")


def residual_retraction(g, c, x, opts=None) -> np.ndarray:
    return project(g, c, x, opts).residual


def gauge_distance(g, c, x, opts=None) -> float:
    return project(g, c, x, opts).distance


def kernel_membership(g: Gauge, c: Cone, x, tol=1e-9, polar: Optional[Cone] = None) -> Membership:
    """``x`` is in the kernel iff ``x = 0`` or the gauge gradient at ``x`` lies in the polar cone."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return Membership(True, None, 0.0)
    v = g.grad(x)
    polar = c.polar() if polar is None else polar
    m = polar.margin(v)
    return Membership(bool(m <= tol), v, float(m))


# --- KKT certificate ---------------------------------------------------------


def _polyhedral_kkt(g, x, y, N, scale):
    """Residual of ``grad(x - y) in cone(active normals)``; 0 means optimal."""
    r = x - y
    if not np.any(r):
        return 0.0
    v = g.grad(r)
    act = N @ y >= -1e-9 * scale
    if not np.any(act):
        return float(np.linalg.norm(v))
    _, res = nnls(N[act].T, v)
    return float(res)


def stationarity(g: Gauge, c: Cone, x, p) -> float:
    """Generic optimality residual: polar violation of the gradient plus complementarity."""
    r = np.asarray(x, float) - np.asarray(p, float)
    if not np.any(r):
        return 0.0
    v = g.grad(r)
    viol = max(c.polar().margin(v), 0.0)
    return float(viol + abs(np.dot(v, p)) / max(1.0, np.linalg.norm(p)))


# --- Newton core -------------------------------------------------------------


def _newton(fun, grad, hess, z0, max_iter=300, xtol=4e-15):
    """Damped Newton for a smooth convex objective.

    Near minimizers where the objective is flat to rounding (degenerate
    curvature, e.g. quartic terms), steps are accepted on gradient decrease.
    """
    z = np.array(z0, dtype=float)
    f = fun(z)
    gz = grad(z)
    it = 0
    for it in range(1, max_iter + 1):
        if not np.all(np.isfinite(gz)):
            break
        H = hess(z)
        step = np.linalg.lstsq(H, -gz, rcond=None)[0]
        slope = float(gz @ step)
        if not slope < 0:
            step = -gz
            slope = -float(gz @ gz)
            if slope == 0:
                break
        t = 1.0
        gn = np.linalg.norm(gz)
        accepted = False
        while t >= 1e-12:
            zn = z + t * step
            fn = fun(zn)
            if np.isfinite(fn):
                if fn <= f + 1e-4 * t * slope:
                    accepted = True
                    break
                if fn <= f + 8 * np.finfo(float).eps * abs(f):
                    gzn = grad(zn)
                    if np.linalg.norm(gzn) < gn:
                        accepted = True
                        break
            t *= 0.5
        if not accepted:
            break
        z, f = zn, fn
        gz = grad(z)
        if np.linalg.norm(t * step) <= xtol * max(1.0, np.linalg.norm(z)):
            break
    return z, it


def _q(g, r):
    return 0.5 * g.eval(r) ** 2


def _qgrad(g, r):
    if not np.any(r):
        return np.zeros_like(r)
    return g.eval(r) * g.grad(r)


def _qhess(g, r):
    if not np.any(r):
        return np.eye(r.size)
    return g.sq_hessian(r)


def _minimize_on_subspace(g, x, B):
    """Minimize 0.5*gauge(x - B z)^2 over z; returns (y, iterations)."""
    if B.shape[1] == 0:
        return np.zeros_like(x), 0
    z0 = B.T @ x
    if np.linalg.norm(x - B @ z0) <= 1e-15 * max(1.0, np.linalg.norm(x)):
        return B @ z0, 0

    def fun(z):
        return _q(g, x - B @ z)

    def grad(z):
        return -B.T @ _qgrad(g, x - B @ z)

    def hess(z):
        return B.T @ _qhess(g, x - B @ z) @ B

    z, it = _newton(fun, grad, hess, z0)
    return B @ z, it


# --- polyhedral: face enumeration -------------------------------------------


def _faces(N, n):
    """Index subsets of linearly independent normals of size 1..n-1."""
    m = N.shape[0]
    for size in range(1, min(n - 1, m) + 1):
        for S in itertools.combinations(range(m), size):
            if np.linalg.matrix_rank(N[list(S)], tol=1e-10) == size:
                yield S


def _face_count(m, n):
    from math import comb

    return sum(comb(m, s) for s in range(1, min(n - 1, m) + 1))


def _project_polyhedral(g, c, x, N, opts):
    N = np.asarray(N, dtype=float)
    N = N[np.linalg.norm(N, axis=1) > 0]
    N = N / np.linalg.norm(N, axis=1, keepdims=True)
    n = x.size
    scale = max(1.0, float(np.linalg.norm(x)))
    kkt_tol = max(opts.tol * 1e-2, 1e-10)
    if _face_count(N.shape[0], n) > opts.max_faces:
        return None

    # apex: optimal iff grad(x) in cone(N)
    res0 = _polyhedral_kkt(g, x, np.zeros(n), N, scale)
    if res0 <= kkt_tol:
        return _outcome(g, x, np.zeros(n), CONVERGED, 0, res0, "faces")

    best, best_val, best_res, total_it = np.zeros(n), g.eval(x), res0, 0
    for S in _faces(N, n):
        B = null_space(N[list(S)])
        y, it = _minimize_on_subspace(g, x, B)
        total_it += it
        if np.max(N @ y) > 1e-10 * scale:
            continue
        val = g.eval(x - y)
        res = _polyhedral_kkt(g, x, y, N, scale)
        if val < best_val:
            best, best_val, best_res = y, val, res
        if res <= kkt_tol:
            return _outcome(g, x, y, CONVERGED, total_it, res, "faces")
    if best_res <= opts.tol:
        return _outcome(g, x, best, CONVERGED, total_it, best_res, "faces")
    return None


# --- power cone: boundary parametrization ------------------------------------


def _project_power_cone(g, c: PowerCone, x, opts):
    n = x.size
    polar = c.polar()
    res0 = max(polar.margin(g.grad(x)), 0.0)
    apex = _outcome(g, x, np.zeros(n), CONVERGED, 0, res0, "power_apex")
    if res0 <= 1e-12:
        return apex
    if c.k == 1 or c.m == 1:
        return None
    fallback = apex if res0 <= opts.tol else None
    s = c.sign

    def point(w):
        return s * np.append(w, c.base_norm(w))

    def jac(w):
        return s * np.vstack([np.eye(c.m), c.base_norm_grad(w)[None, :]])

    def fun(w):
        if not np.any(w):
            return np.inf
        return _q(g, x - point(w))

    def grad(w):
        return -jac(w).T @ _qgrad(g, x - point(w))

    def hess(w):
        r = x - point(w)
        J = jac(w)
        qg = _qgrad(g, r)
        return J.T @ _qhess(g, r) @ J - s * qg[-1] * _base_norm_hessian(c, w)

    def polish(w0):
        if np.linalg.norm(w0) <= 1e-12 * max(1.0, np.linalg.norm(x)):
            return None
        w, it = _newton(fun, grad, hess, w0)
        p = point(w)
        r = x - p
        if not np.all(np.isfinite(p)) or g.eval(x) <= g.eval(r):
            return None
        v = g.grad(r)
        nrm = s * np.append(c.base_norm_grad(w), -1.0)
        mu = float(v @ nrm) / float(nrm @ nrm)
        res = float(np.linalg.norm(v - mu * nrm)) + max(-mu, 0.0)
        return p, res, it

    e = c.euclidean_project(x)
    total_it = 0
    best = None
    for w0 in (s * e[:-1], s * x[:-1]):
        out = polish(w0)
        if out is None:
            continue
        total_it += out[2]
        if best is None or out[1] < best[1]:
            best = out
        if best[1] <= opts.tol:
            break
    if best is None or best[1] > opts.tol:
        # seed from a short projected descent (handles solutions near the apex)
        seed = projected_descent(g, c, x, SolverOptions(tol=1e-6, max_iter=500))
        total_it += seed.iterations
        out = polish(s * seed.point[:-1])
        if out is not None:
            total_it += out[2]
            if best is None or out[1] < best[1]:
                best = out
    if best is None or best[1] > opts.tol:
        return fallback
    return _outcome(g, x, best[0], CONVERGED, total_it, best[1], "power_boundary")


def _base_norm_hessian(c: PowerCone, w):
    k = c.k
    gw = c.base_norm(w)
    z = w / gw
    u = c.xi * np.sign(z) * np.abs(z) ** (k - 1)
    d = c.xi * np.abs(z) ** (k - 2) if k >= 2 else c.xi * np.maximum(np.abs(z), 1e-12) ** (k - 2)
    return (k - 1) / gw * (np.diag(d) - np.outer(u, u))


# --- generic fallback ----------------------------------------------------------


def projected_descent(g: Gauge, c: Cone, x, opts: Optional[SolverOptions] = None, y0=None):
    """Projected gradient on 0.5*gauge(x - y)^2 with Armijo backtracking.

    The cone's Euclidean projection is the feasibility retraction. The trial
    step is 1 on the first iteration and Barzilai-Borwein afterwards.
    """
    opts = opts or SolverOptions()
    x = np.asarray(x, dtype=float)
    y = c.euclidean_project(x if y0 is None else y0)
    scale = max(1.0, float(np.linalg.norm(x)))
    f = _q(g, x - y)
    G = -_qgrad(g, x - y)
    alpha = 1.0
    status = MAX_ITER
    it = 0
    for it in range(1, opts.max_iter + 1):
        if f <= (opts.tol * 1e-3) ** 2:
            status = CONVERGED
            break
        pg = y - c.euclidean_project(y - G)
        if np.linalg.norm(pg) <= opts.tol * scale:
            status = CONVERGED
            break
        t = alpha
        while True:
            yn = c.euclidean_project(y - t * G)
            fn = _q(g, x - yn)
            if fn <= f + 1e-4 * float(G @ (yn - y)) or t < 1e-16:
                break
            t *= 0.5
        if t < 1e-16:
            status = CONVERGED
            break
        Gn = -_qgrad(g, x - yn)
        sy, gy = yn - y, Gn - G
        denom = float(sy @ gy)
        alpha = float(sy @ sy) / denom if denom > 0 else 1.0
        y, f, G = yn, fn, Gn
    return _outcome(g, x, y, status, it, stationarity(g, c, x, y), "projected_descent")
