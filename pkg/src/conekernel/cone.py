"""Closed convex cones: membership, polars, Euclidean projection, lattice parts.

Every cone exposes a signed ``margin`` (<= 0 inside, > 0 outside) that the
kernel tests use both for membership and for the boundary band.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import brentq, lsq_linear, nnls as _scipy_nnls

from .errors import DimensionError, UnsupportedOperation
from .sphere import null_space

DEFAULT_TOL = 1e-9
# brute-force double description limits
DD_MAX_DIM = 6
DD_MAX_ITEMS = 32


def _vec(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def _unit(a, what="normal"):
    a = np.asarray(a, dtype=float).ravel()
    if abs(np.linalg.norm(a) - 1) > 1e-8:
        raise ValueError(f"{what} must have Euclidean norm 1")
    return a / np.linalg.norm(a)


class Cone:
    dim: int

    def margin(self, x) -> float:
        raise NotImplementedError

    def contains(self, x, tol=DEFAULT_TOL) -> bool:
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        return self.margin(x) <= tol

    def polar(self) -> "Cone":
        raise NotImplementedError

    def euclidean_project(self, x) -> np.ndarray:
        raise NotImplementedError

    def facet_normals(self) -> Optional[np.ndarray]:
        """Rows ``n_j`` with ``cone = {x : N x <= 0}``, or None when not polyhedral."""
        return None

    @property
    def is_polyhedral(self):
        return self.facet_normals() is not None

    def sample_directions(self, count, rng) -> np.ndarray:
        """Unit vectors of the cone (Euclidean projections of Gaussian samples)."""
        out = []
        tries = 0
        while len(out) < count and tries < 50 * count:
            tries += 1
            y = self.euclidean_project(rng.standard_normal(self.dim))
            ny = np.linalg.norm(y)
            if ny > 1e-9:
                out.append(y / ny)
        return np.asarray(out).reshape(-1, self.dim)

    def supporting_halfspaces_at_zero(self, count=32, rng=None) -> np.ndarray:
        """Unit normals ``a`` with ``<a, x> <= 0`` on the cone, i.e. unit vectors of the polar."""
        rng = np.random.default_rng(0) if rng is None else rng
        return self.polar().sample_directions(count, rng)

    def to_record(self) -> dict:
        raise NotImplementedError

    def _check(self, x):
        return _vec(x, self.dim)


@dataclass(frozen=True, eq=False)
class Halfspace(Cone):
    """``{x : <a, x> <= 0}``."""

    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _unit(self.a))

    @property
    def dim(self):
        return self.a.shape[0]

    def margin(self, x):
        return float(np.dot(self.a, self._check(x)))

    def polar(self):
        return Polyhedral(generators=self.a[None, :])

    def euclidean_project(self, x):
        x = self._check(x)
        return x - max(np.dot(self.a, x), 0.0) * self.a

    def facet_normals(self):
        return self.a[None, :]

    def supporting_halfspaces_at_zero(self, count=1, rng=None):
        return self.a[None, :].copy()

    def to_record(self):
        return {"type": "halfspace", "a": self.a.tolist()}


@dataclass(frozen=True, eq=False)
class Wedge(Cone):
    """Minimal wedge ``{<a1,x> <= 0} ∩ {<a2,x> <= 0}``."""

    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1, a2 = _unit(self.a1), _unit(self.a2)
        if a1.shape != a2.shape:
            raise DimensionError("wedge normals differ in dimension")
        if np.linalg.matrix_rank(np.vstack([a1, a2]), tol=1e-10) < 2:
            raise ValueError("wedge normals must be linearly independent")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def dim(self):
        return self.a1.shape[0]

    @cached_property
    def _normal_basis(self):
        q, _ = np.linalg.qr(np.column_stack([self.a1, self.a2]))
        return q

    def margin(self, x):
        x = self._check(x)
        return float(max(np.dot(self.a1, x), np.dot(self.a2, x)))

    def polar(self):
        return Polyhedral(generators=np.vstack([self.a1, self.a2]))

    def euclidean_project(self, x):
        x = self._check(x)
        if self.margin(x) <= 0:
            return x.copy()
        best = None
        for a in (self.a1, self.a2):
            y = x - max(np.dot(a, x), 0.0) * a
            if self.margin(y) <= 1e-12 * max(1.0, np.linalg.norm(x)):
                if best is None or np.linalg.norm(x - y) < np.linalg.norm(x - best):
                    best = y
        if best is not None:
            return best
        Q = self._normal_basis
        return x - Q @ (Q.T @ x)

    def facet_normals(self):
        return np.vstack([self.a1, self.a2])

    def supporting_halfspaces_at_zero(self, count=32, rng=None):
        lam = np.linspace(0.0, 1.0, max(count, 2))[:, None]
        v = (1 - lam) * self.a1 + lam * self.a2
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def to_record(self):
        return {"type": "wedge", "a1": self.a1.tolist(), "a2": self.a2.tolist()}


@dataclass(frozen=True, eq=False)
class Orthant(Cone):
    """``sign * R^n_+``."""

    n: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def dim(self):
        return self.n

    def margin(self, x):
        return float(np.max(-self.sign * self._check(x)))

    def polar(self):
        return Orthant(self.n, -self.sign)

    def euclidean_project(self, x):
        x = self._check(x)
        return self.sign * np.maximum(self.sign * x, 0.0)

    def facet_normals(self):
        return -self.sign * np.eye(self.n)

    def sample_directions(self, count, rng):
        g = self.sign * np.abs(rng.standard_normal((count, self.n)))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def to_record(self):
        return {"type": "orthant", "dim": self.n, "sign": self.sign}


@dataclass(frozen=True, eq=False)
class Simplicial(Cone):
    """Cone generated by the columns of an invertible ``G``."""

    G: np.ndarray
    G_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DimensionError("generator matrix must be square")
        if np.linalg.matrix_rank(G) < G.shape[0]:
            raise np.linalg.LinAlgError("singular generator matrix")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "G_inv", np.linalg.inv(G))

    @classmethod
    def from_generators(cls, gens):
        """Rows of ``gens`` are the generators."""
        return cls(np.asarray(gens, dtype=float).T)

    @property
    def dim(self):
        return self.G.shape[0]

    def coordinates(self, x):
        return self.G_inv @ self._check(x)

    def margin(self, x):
        lam = self.coordinates(x)
        # scale coordinates back to a length so the margin is comparable to x
        return float(np.max(-lam * np.linalg.norm(self.G, axis=0)))

    def polar(self):
        return Simplicial(-self.G_inv.T)

    def euclidean_project(self, x):
        lam, _ = nnls(self.G, self._check(x))
        return self.G @ lam

    def facet_normals(self):
        return -self.G_inv

    def sample_directions(self, count, rng):
        lam = np.abs(rng.standard_normal((count, self.dim)))
        v = lam @ self.G.T
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def lattice_positive_part(self, x):
        """Riesz-space positive part ``G (G^{-1} x)^+`` for the order induced by the cone."""
        return self.G @ np.maximum(self.coordinates(x), 0.0)

    def lattice_negative_part(self, x):
        return self.G @ np.maximum(-self.coordinates(x), 0.0)

    def to_record(self):
        return {"type": "simplicial", "generators": self.G.T.tolist()}


@dataclass(frozen=True, eq=False)
class Polyhedral(Cone):
    """Finitely generated cone, by generators (rows) and/or facet normals (rows)."""

    generators: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.generators is None and self.normals is None:
            raise ValueError("polyhedral cone needs generators or facet normals")
        dims = set()
        for name in ("generators", "normals"):
            M = getattr(self, name)
            if M is not None:
                M = np.atleast_2d(np.array(M, dtype=float))
                dims.add(M.shape[1])
                object.__setattr__(self, name, M)
        if len(dims) != 1:
            raise DimensionError("generators and normals disagree on dimension")

    @property
    def dim(self):
        M = self.generators if self.generators is not None else self.normals
        return M.shape[1]

    @cached_property
    def _facets(self):
        if self.normals is not None:
            return self.normals
        return facets_from_generators(self.generators)

    @cached_property
    def _gens(self):
        if self.generators is not None:
            return self.generators
        return generators_from_facets(self.normals)

    def generator_matrix(self):
        return self._gens

    def margin(self, x):
        x = self._check(x)
        if self.normals is not None or self._dd_ok(self.generators):
            N = self._facets
            if N.shape[0] == 0:
                return 0.0 if self._in_span(x) else float(np.linalg.norm(x))
            Nn = N / np.linalg.norm(N, axis=1, keepdims=True)
            return float(np.max(Nn @ x))
        _, res = nnls(self.generators.T, x)
        return float(res)

    def contains(self, x, tol=DEFAULT_TOL):
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        x = self._check(x)
        if self.generators is not None:
            _, res = nnls(self.generators.T, x)
            return bool(res <= tol)
        return self.margin(x) <= tol

    def polar(self):
        if self.generators is not None:
            return Polyhedral(normals=self.generators)
        return Polyhedral(generators=self.normals)

    def euclidean_project(self, x):
        x = self._check(x)
        if self.generators is not None:
            lam, _ = nnls(self.generators.T, x)
            return self.generators.T @ lam
        # Moreau: x minus its projection onto cone(normals)
        lam, _ = nnls(self.normals.T, x)
        return x - self.normals.T @ lam

    def facet_normals(self):
        if self.normals is not None:
            return self.normals
        if not self._dd_ok(self.generators):
            return None
        return self._facets

    def sample_directions(self, count, rng):
        if self.generators is None:
            return super().sample_directions(count, rng)
        G = self.generators
        G = G[np.linalg.norm(G, axis=1) > 0]
        lam = rng.dirichlet(np.ones(G.shape[0]) * 0.5, size=count)
        v = np.vstack([G, lam @ G])[:count] if count > G.shape[0] else lam @ G
        nv = np.linalg.norm(v, axis=1)
        v = v[nv > 1e-12]
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def consistent(self, samples=200, rng=None, tol=1e-7):
        """When both representations are given, check they describe the same set."""
        if self.generators is None or self.normals is None:
            return True
        rng = np.random.default_rng(0) if rng is None else rng
        a = Polyhedral(generators=self.generators)
        b = Polyhedral(normals=self.normals)
        for x in rng.standard_normal((samples, self.dim)):
            if a.contains(x, tol) != b.contains(x, tol):
                return False
        for x in a.sample_directions(samples // 4, rng):
            if not b.contains(x, tol):
                return False
        return True

    def _in_span(self, x):
        G = self._gens
        if G.shape[0] == 0:
            return not np.any(x)
        coef = np.linalg.lstsq(G.T, x, rcond=None)[0]
        return np.linalg.norm(G.T @ coef - x) <= 1e-10 * max(1.0, np.linalg.norm(x))

    @staticmethod
    def _dd_ok(M):
        return M is not None and M.shape[1] <= DD_MAX_DIM and M.shape[0] <= DD_MAX_ITEMS

    def to_record(self):
        rec = {"type": "polyhedral"}
        if self.generators is not None:
            rec["generators"] = self.generators.tolist()
        if self.normals is not None:
            rec["normals"] = self.normals.tolist()
        return rec


@dataclass(frozen=True, eq=False)
class PowerCone(Cone):
    """``sign * {(x, t) in R^m x R : t >= (sum_i xi_i |x_i|^k)^(1/k)}``."""

    xi: np.ndarray
    k: float = 2.0
    sign: int = 1

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).ravel()
        if xi.size == 0 or np.any(xi <= 0):
            raise ValueError("power-cone weights must be positive")
        if not float(self.k) >= 1:
            raise ValueError("power-cone exponent must be >= 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "k", float(self.k))

    @property
    def m(self):
        return self.xi.shape[0]

    @property
    def dim(self):
        return self.m + 1

    def base_norm(self, y):
        y = np.asarray(y, dtype=float)
        mx = np.abs(y).max() if y.size else 0.0
        if mx == 0:
            return 0.0
        return float(mx * np.sum(self.xi * (np.abs(y) / mx) ** self.k) ** (1 / self.k))

    def base_norm_grad(self, y):
        g = self.base_norm(y)
        z = y / g
        return self.xi * np.sign(z) * np.abs(z) ** (self.k - 1)

    @property
    def conjugate_exponent(self):
        return np.inf if self.k == 1 else self.k / (self.k - 1)

    def dual_weights(self):
        """Weights of the dual of the base norm: ``xi_i^(1 - l)`` with ``1/k + 1/l = 1``."""
        return self.xi ** (1 - self.conjugate_exponent)

    def margin(self, x):
        z = self.sign * self._check(x)
        return float(self.base_norm(z[:-1]) - z[-1])

    def polar(self):
        if self.k == 1:
            return self.as_polyhedral().polar()
        return PowerCone(self.dual_weights(), self.conjugate_exponent, -self.sign)

    def as_polyhedral(self):
        if self.k != 1 and self.m != 1:
            raise UnsupportedOperation("power cone is polyhedral only for k = 1 or m = 1")
        gens = []
        for i in range(self.m):
            for s in (1.0, -1.0):
                g = np.zeros(self.dim)
                g[i] = s * self.xi[i] ** (-1 / self.k)
                g[-1] = 1.0
                gens.append(self.sign * g)
        return Polyhedral(generators=np.array(gens))

    def facet_normals(self):
        if self.m == 1:
            c = self.xi[0] ** (1 / self.k)
            N = np.array([[c, -1.0], [-c, -1.0]]) * self.sign
            return N / np.linalg.norm(N, axis=1, keepdims=True)
        if self.k == 1:
            return self.as_polyhedral().facet_normals()
        return None

    def euclidean_project(self, x):
        x = self._check(x)
        # the projection is homogeneous; work at unit scale to dodge under/overflow
        s = np.abs(x).max()
        if s == 0 or not np.isfinite(s):
            return np.zeros_like(x) if s == 0 else np.full_like(x, np.nan)
        z = self.sign * x / s
        return s * self.sign * self._project_upper(z[:-1], z[-1])

    def _project_upper(self, y, t):
        if self.base_norm(y) <= t:
            return np.append(y, t)
        if self.k == 1:
            return PowerCone(self.xi, 1.0).as_polyhedral().euclidean_project(np.append(y, t))
        if self.polar_norm(y) <= -t:
            return np.zeros(self.dim)
        if self.k == 2 and np.all(self.xi == self.xi[0]):
            c = np.sqrt(self.xi[0])
            ny = np.linalg.norm(y)
            # circular cone t >= c |y|: project onto the boundary ray (1, c) in the (|y|, t) plane
            rho = (ny + c * t) / (1 + c * c)
            return np.append(y * (rho / ny), c * rho)
        absy = np.abs(y)

        def inner(c):
            if self.k == 2:
                return absy / (1 + c * self.xi)
            return _solve_shrink(absy, c * self.xi, self.k)

        def F(c):
            w = inner(c)
            g = self.base_norm(w)
            return g - t - c * g ** (self.k - 1)

        hi = 1.0
        while F(hi) > 0:
            hi *= 2.0
            if hi > 1e300:
                raise RuntimeError("power-cone projection bracket failed")
        c = brentq(F, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        w = np.sign(y) * inner(c)
        return np.append(w, self.base_norm(w))

    def polar_norm(self, y):
        l = self.conjugate_exponent
        if np.isinf(l):
            return float(np.max(np.abs(y) / self.xi))
        return PowerCone(self.dual_weights(), l).base_norm(y)

    def sample_directions(self, count, rng):
        y = rng.standard_normal((count, self.m))
        g = np.array([self.base_norm(v) for v in y])
        t = g * (1 + np.abs(rng.standard_normal(count)) * (rng.random(count) < 0.7))
        v = self.sign * np.column_stack([y, t])
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def to_record(self):
        return {"type": "power_cone", "xi": self.xi.tolist(), "k": self.k, "sign": self.sign}


def nnls(A, b):
    """Nonnegative least squares ``min |A x - b|, x >= 0`` with a KKT check.

    scipy's active-set ``nnls`` occasionally stops at a non-optimal point on
    degenerate column sets (and reports a residual that does not match its
    own solution); in that case we fall back to bounded-variable least squares.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        x, _ = _scipy_nnls(A, b, maxiter=50 * max(A.shape))
    except RuntimeError:
        x = None
    if x is None or not _nnls_kkt(A, b, x):
        x = lsq_linear(A, b, bounds=(0, np.inf), method="bvls", tol=1e-15).x
        x = np.maximum(x, 0.0)
    return x, float(np.linalg.norm(A @ x - b))


def _nnls_kkt(A, b, x):
    w = A.T @ (b - A @ x)
    tol = 1e-10 * max(1.0, np.linalg.norm(A)) * max(1.0, np.linalg.norm(b))
    return bool(np.all(w <= tol) and np.all(np.abs(w[x > 0]) <= tol))


def _solve_shrink(absy, cw, k, iters=100):
    """Componentwise root of ``w + cw * w^(k-1) = absy`` on ``[0, absy]``.

    Newton safeguarded by a bisection bracket; the map is increasing in w.
    """
    lo = np.zeros_like(absy)
    hi = absy.copy()
    w = 0.5 * hi
    for _ in range(iters):
        f = w + cw * w ** (k - 1) - absy
        lo = np.where(f < 0, w, lo)
        hi = np.where(f < 0, hi, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            wn = w - f / (1 + cw * (k - 1) * w ** (k - 2))
        bad = ~np.isfinite(wn) | (wn < lo) | (wn > hi)
        wn = np.where(bad, 0.5 * (lo + hi), wn)
        if np.all(np.abs(wn - w) <= 1e-15 * np.maximum(absy, 1e-300)) or np.all(hi - lo <= 4e-16 * hi):
            return wn
        w = wn
    return w


def facets_from_generators(G, tol=1e-10):
    """Facet normals of ``cone(rows of G)`` by brute-force enumeration (small n only).

    Works for cones that are not full-dimensional by adding +/- normals of the
    orthogonal complement of the span, and for cones with lineality.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    m, n = G.shape
    if n > DD_MAX_DIM or m > DD_MAX_ITEMS:
        raise UnsupportedOperation(
            f"double description limited to n <= {DD_MAX_DIM} and <= {DD_MAX_ITEMS} items")
    G = G[np.linalg.norm(G, axis=1) > tol]
    if G.shape[0] == 0:
        return np.vstack([np.eye(n), -np.eye(n)])
    comp = null_space(G)  # orthogonal complement of span(G), as columns
    span = null_space(comp.T) if comp.shape[1] else np.eye(n)
    normals = [c for c in comp.T] + [-c for c in comp.T]
    d = span.shape[1]
    Gs = G @ span  # coordinates within the span
    scale = np.linalg.norm(Gs, axis=1).max()
    found = []
    if d == 1:
        if np.all(Gs[:, 0] >= -tol * scale):
            found.append(-np.ones(1))
        elif np.all(Gs[:, 0] <= tol * scale):
            found.append(np.ones(1))
    else:
        for subset in itertools.combinations(range(Gs.shape[0]), d - 1):
            sub = Gs[list(subset)]
            if np.linalg.matrix_rank(sub, tol=tol * scale) < d - 1:
                continue
            ns = null_space(sub)
            if ns.shape[1] != 1:
                continue
            v = ns[:, 0]
            for cand in (v, -v):
                vv = Gs @ cand
                if np.all(vv <= tol * scale) and np.any(vv < -tol * scale):
                    found.append(cand)
    out = []
    for f in found:
        w = span @ f
        w = w / np.linalg.norm(w)
        if all(np.linalg.norm(w - o) > 1e-9 for o in out):
            out.append(w)
    normals.extend(out)
    return np.array(normals).reshape(-1, n)


def generators_from_facets(N, tol=1e-10):
    """Generators of ``{x : N x <= 0}``: the facets of ``cone(rows of N)`` (Farkas)."""
    return facets_from_generators(N, tol)


def cone_from_record(rec: dict) -> Cone:
    kind = rec.get("type")
    if kind == "halfspace":
        return Halfspace(np.array(rec["a"], dtype=float))
    if kind == "wedge":
        return Wedge(np.array(rec["a1"], dtype=float), np.array(rec["a2"], dtype=float))
    if kind == "orthant":
        return Orthant(int(rec["dim"]), int(rec.get("sign", 1)))
    if kind == "simplicial":
        return Simplicial.from_generators(rec["generators"])
    if kind == "polyhedral":
        return Polyhedral(
            generators=None if rec.get("generators") is None else np.array(rec["generators"], float),
            normals=None if rec.get("normals") is None else np.array(rec["normals"], float),
        )
    if kind == "power_cone":
        return PowerCone(np.array(rec["xi"], dtype=float), float(rec.get("k", 2)), int(rec.get("sign", 1)))
    raise ValueError(f"unknown cone type {kind!r}")
