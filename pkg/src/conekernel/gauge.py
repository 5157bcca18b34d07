"""Gauges (asymmetric norms and norms) on R^n.

A gauge is nonnegative, positively homogeneous of degree one and subadditive.
Every concrete gauge here exposes evaluation, gradient, the Hessian of
``0.5 * eval**2`` (used by the Newton solvers), sigma-rays, dual norms and
meridian sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionError,
    NoUniqueRayError,
    UndefinedGradientError,
    UnsupportedOperation,
)
from .sphere import normalize, orthonormal_pair, sphere_directions

_FD_STEP = 1e-6


def _vec(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class MeridianArc:
    """Arc of the meridian ``Sigma ∩ span(b1, b2)`` between two angles."""

    b1: np.ndarray
    b2: np.ndarray
    theta0: float
    theta1: float
    count: int = 20

    def __post_init__(self):
        b1, b2 = orthonormal_pair(self.b1, self.b2)
        if not abs(np.dot(self.b1, self.b1) - 1) < 1e-10 or abs(np.dot(self.b1, self.b2)) > 1e-10:
            raise ValueError("meridian plane vectors must be orthonormal; use MeridianArc.from_vectors")
        if not self.theta0 < self.theta1:
            raise ValueError("theta0 must be < theta1")
        if self.count < 1:
            raise ValueError("count must be positive")
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)

    @classmethod
    def from_vectors(cls, v1, v2, theta0=0.0, theta1=np.pi / 2, count=20):
        b1, b2 = orthonormal_pair(v1, v2)
        return cls(b1, b2, float(theta0), float(theta1), int(count))

    @classmethod
    def through(cls, u, v, count=20):
        """The shorter meridian arc from direction ``u`` to direction ``v``."""
        b1, b2 = orthonormal_pair(u, v)
        theta = float(np.arctan2(np.dot(v, b2), np.dot(v, b1)))
        return cls(b1, b2, 0.0, theta, int(count))

    @property
    def dim(self):
        return self.b1.shape[0]

    def directions(self):
        theta = np.linspace(self.theta0, self.theta1, self.count)
        return np.outer(np.cos(theta), self.b1) + np.outer(np.sin(theta), self.b2)

    def to_record(self):
        return {
            "b1": self.b1.tolist(),
            "b2": self.b2.tolist(),
            "theta0": self.theta0,
            "theta1": self.theta1,
            "count": self.count,
        }


class Gauge:
    """Base class. Subclasses implement ``eval`` and usually ``grad``."""

    dim: int
    symmetric = True
    smooth = True
    strictly_convex = True
    # separable gauges reduce orthant projection to a componentwise clamp
    separable = False

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        x = self._nonzero(x)
        return _fd_gradient(self.eval, x)

    def sq_hessian(self, r) -> np.ndarray:
        """Hessian of ``0.5 * eval(r)**2`` at ``r != 0``."""
        r = self._nonzero(r)
        return _fd_jacobian(lambda z: self.eval(z) * self.grad(z), r)

    def dual_norm(self, y) -> float:
        """``sup{<y, x> : eval(x) <= 1}``; only defined here for norms."""
        if not self.symmetric:
            raise UnsupportedOperation("dual norm requires a symmetric gauge")
        y = _vec(y, self.dim)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        u = self.sigma_ray(y / ny)
        return float(np.dot(y, u))

    def sigma_ray(self, a) -> np.ndarray:
        """Unit-gauge point ``u`` spanning the kernel ray of projection onto ``{<a,x> <= 0}``.

        ``u`` satisfies ``eval(u) = 1`` and ``grad(u) = lam * a`` with ``lam > 0``;
        equivalently it maximizes ``<a, x>`` over the unit ball.
        """
        a = self._unit_normal(a)
        return _sigma_ray_numeric(self, a)

    def meridian_points(self, arc: MeridianArc) -> np.ndarray:
        if arc.dim != self.dim:
            raise DimensionError("meridian plane lives in a different dimension")
        d = arc.directions()
        scale = np.array([self.eval(v) for v in d])
        return d / scale[:, None]

    def image(self, A) -> "Gauge":
        """Gauge ``y -> eval(A^{-1} y)`` whose unit sphere is ``A(Sigma)``."""
        return LinearImage(self, A)

    def to_record(self) -> dict:
        raise UnsupportedOperation(f"{type(self).__name__} has no scenario record")

    # helpers

    def _check(self, x):
        return _vec(x, self.dim)

    def _nonzero(self, x):
        x = self._check(x)
        if not np.any(x):
            raise UndefinedGradientError("gauge gradient is undefined at 0")
        return x

    def _unit_normal(self, a):
        a = self._check(a)
        if abs(np.linalg.norm(a) - 1) > 1e-8:
            raise ValueError("halfspace normal must have Euclidean norm 1")
        if not (self.smooth and self.strictly_convex):
            raise NoUniqueRayError("sigma-ray needs a smooth, strictly convex gauge")
        return a


@dataclass(frozen=True, eq=False)
class Euclidean(Gauge):
    dim: int
    separable = True

    def eval(self, x):
        return float(np.linalg.norm(self._check(x)))

    def grad(self, x):
        x = self._nonzero(x)
        return x / np.linalg.norm(x)

    def sq_hessian(self, r):
        return np.eye(self.dim)

    def dual_norm(self, y):
        return float(np.linalg.norm(self._check(y)))

    def sigma_ray(self, a):
        return self._unit_normal(a).copy()

    def image(self, A):
        Ainv = np.linalg.inv(np.asarray(A, dtype=float))
        return Ellipsoidal(Ainv.T @ Ainv)

    def to_record(self):
        return {"type": "euclidean", "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Ellipsoidal(Gauge):
    """``sqrt(<A x, x>)`` for a symmetric positive-definite ``A``."""

    A: np.ndarray
    A_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("A must be square")
        if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        A = 0.5 * (A + A.T)
        if np.linalg.eigvalsh(A).min() <= 0:
            raise ValueError("A must be positive definite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A_inv", np.linalg.inv(A))

    @property
    def dim(self):
        return self.A.shape[0]

    def eval(self, x):
        x = self._check(x)
        return float(np.sqrt(max(x @ self.A @ x, 0.0)))

    def grad(self, x):
        x = self._nonzero(x)
        Ax = self.A @ x
        return Ax / np.sqrt(x @ Ax)

    def sq_hessian(self, r):
        return self.A

    def dual_norm(self, y):
        y = self._check(y)
        return float(np.sqrt(max(y @ self.A_inv @ y, 0.0)))

    def sigma_ray(self, a):
        a = self._unit_normal(a)
        u = self.A_inv @ a
        return u / self.eval(u)

    def image(self, A):
        Ainv = np.linalg.inv(np.asarray(A, dtype=float))
        return Ellipsoidal(Ainv.T @ self.A @ Ainv)

    def to_record(self):
        return {"type": "ellipsoidal", "A": self.A.tolist()}


@dataclass(frozen=True, eq=False)
class WeightedP(Gauge):
    """``(sum_i omega_i |x_i|^p)^(1/p)`` with ``p > 1`` and positive weights.

    Smooth and strictly convex away from 0 for every ``p > 1``; the Newton
    solvers degrade near coordinate hyperplanes when ``p < 2`` because the
    second derivative of ``|t|^p`` blows up at 0.
    """

    p: float
    omega: np.ndarray
    separable = True

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).ravel()
        if not float(self.p) > 1:
            raise ValueError("weighted p-norm needs p > 1")
        if omega.size == 0 or np.any(omega <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "omega", omega)

    @classmethod
    def uniform(cls, p, n):
        return cls(p, np.ones(n))

    @property
    def dim(self):
        return self.omega.shape[0]

    @property
    def conjugate_exponent(self):
        return self.p / (self.p - 1)

    def dual_weights(self):
        """Weights of the dual norm: ``omega_i^(1 - q)`` with ``1/p + 1/q = 1``."""
        return self.omega ** (1 - self.conjugate_exponent)

    def dual_gauge(self):
        return WeightedP(self.conjugate_exponent, self.dual_weights())

    def eval(self, x):
        x = self._check(x)
        m = np.abs(x).max()
        if m == 0:
            return 0.0
        # scale out the max entry to avoid overflow in |x|^p
        return float(m * np.sum(self.omega * (np.abs(x) / m) ** self.p) ** (1 / self.p))

    def grad(self, x):
        x = self._nonzero(x)
        s = self.eval(x)
        z = x / s
        return self.omega * np.sign(z) * np.abs(z) ** (self.p - 1)

    def sq_hessian(self, r):
        r = self._nonzero(r)
        p = self.p
        s = self.eval(r)
        z = r / s
        w = self.omega * np.sign(z) * np.abs(z) ** (p - 1)
        d = self.omega * np.abs(z) ** (p - 2) if p >= 2 else self.omega * np.maximum(np.abs(z), 1e-12) ** (p - 2)
        return (p - 1) * np.diag(d) + (2 - p) * np.outer(w, w)

    def dual_norm(self, y):
        return self.dual_gauge().eval(self._check(y))

    def sigma_ray(self, a):
        a = self._unit_normal(a)
        u = np.sign(a) * (np.abs(a) / self.omega) ** (1 / (self.p - 1))
        return u / self.eval(u)

    def to_record(self):
        return {"type": "weighted_p", "p": self.p, "omega": self.omega.tolist()}


@dataclass(frozen=True, eq=False)
class CustomGauge(Gauge):
    """User gauge from callbacks. ``grad_func`` defaults to central differences."""

    dim: int
    func: Callable[[np.ndarray], float]
    grad_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    symmetric: bool = False
    smooth: bool = True
    strictly_convex: bool = True
    name: str = "custom"

    def eval(self, x):
        return float(self.func(self._check(x)))

    def grad(self, x):
        x = self._nonzero(x)
        if self.grad_func is None:
            return _fd_gradient(self.eval, x)
        return np.asarray(self.grad_func(x), dtype=float)


@dataclass(frozen=True, eq=False)
class LinearImage(Gauge):
    """``y -> base(A^{-1} y)``; unit sphere ``A(Sigma_base)``."""

    base: Gauge
    A: np.ndarray
    A_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.shape != (self.base.dim, self.base.dim):
            raise DimensionError("A must be square with the gauge dimension")
        if abs(np.linalg.det(A)) < 1e-14 * max(1.0, np.abs(A).max()) ** A.shape[0]:
            raise np.linalg.LinAlgError("A is singular")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A_inv", np.linalg.inv(A))

    @property
    def dim(self):
        return self.base.dim

    @property
    def symmetric(self):
        return self.base.symmetric

    @property
    def smooth(self):
        return self.base.smooth

    @property
    def strictly_convex(self):
        return self.base.strictly_convex

    def eval(self, y):
        return self.base.eval(self.A_inv @ self._check(y))

    def grad(self, y):
        y = self._nonzero(y)
        return self.A_inv.T @ self.base.grad(self.A_inv @ y)

    def sq_hessian(self, r):
        r = self._nonzero(r)
        return self.A_inv.T @ self.base.sq_hessian(self.A_inv @ r) @ self.A_inv

    def sigma_ray(self, a):
        a = self._unit_normal(a)
        x = self.base.sigma_ray(normalize(self.A.T @ a))
        return self.A @ x


def gauge_from_record(rec: dict) -> Gauge:
    kind = rec.get("type")
    if kind == "euclidean":
        return Euclidean(int(rec["dim"]))
    if kind == "ellipsoidal":
        return Ellipsoidal(np.array(rec["A"], dtype=float))
    if kind == "weighted_p":
        return WeightedP(float(rec["p"]), np.array(rec["omega"], dtype=float))
    raise ValueError(f"unknown gauge type {kind!r}")


def _fd_gradient(f, x, h=_FD_STEP):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return g


def _fd_jacobian(F, x, h=_FD_STEP):
    n = x.size
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h * max(1.0, abs(x[i]))
        J[:, i] = (F(x + e) - F(x - e)) / (2 * e[i])
    return 0.5 * (J + J.T)


def _sigma_ray_numeric(g: Gauge, a, tol=1e-10, max_iter=100):
    """Bordered Newton on ``grad(u) = lam * a, eval(u) = 1``; falls back to direct maximization."""
    n = g.dim
    u = a / g.eval(a)
    lam = 1.0 / float(np.dot(a, u))

    def residual(u, lam):
        return np.concatenate([g.grad(u) - lam * a, [g.eval(u) - 1.0]])

    F = residual(u, lam)
    for _ in range(max_iter):
        if np.linalg.norm(F) <= tol:
            break
        H = _fd_jacobian(g.grad, u)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = H
        J[:n, n] = -a
        J[n, :n] = g.grad(u)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t > 1e-8:
            u_new = u + t * step[:n]
            if np.any(u_new):
                F_new = residual(u_new, lam + t * step[n])
                if np.linalg.norm(F_new) < np.linalg.norm(F):
                    break
            t *= 0.5
        else:
            break
        u, lam, F = u_new, lam + t * step[n], F_new
    if np.linalg.norm(F) <= tol and lam > 0:
        return u
    return _sigma_ray_by_ascent(g, a, tol)


def _sigma_ray_by_ascent(g: Gauge, a, tol):
    from scipy.optimize import minimize

    dirs = sphere_directions(g.dim, 2000, np.random.default_rng(0))
    vals = [np.dot(a, d) / g.eval(d) for d in dirs]
    d0 = dirs[int(np.argmax(vals))]
    res = minimize(lambda d: -np.dot(a, d) / g.eval(d), d0, method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 20000})
    u = res.x / g.eval(res.x)
    F = g.grad(u) - a / np.dot(a, u)
    if np.linalg.norm(F) > 1e3 * tol:
        raise NoUniqueRayError(f"sigma-ray solve did not converge (residual {np.linalg.norm(F):.2e})")
    return u
