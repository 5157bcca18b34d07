"""Direction sets on the Euclidean unit sphere and small linear-algebra helpers."""
import numpy as np


def sphere_directions(n, count, rng=None):
    """Quasi-uniform unit vectors in R^n.

    n=2 gives equally spaced angles, n=3 a Fibonacci lattice; higher dimensions
    fall back to normalized Gaussian samples (``rng`` required for determinism).
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        rho = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    rng = np.random.default_rng(0) if rng is None else rng
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def normalize(v):
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / nv


def angle(u, v):
    """Angle between two nonzero vectors, robust near 0 and pi."""
    u = normalize(u)
    v = normalize(v)
    return float(2 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def orthonormal_pair(v1, v2, tol=1e-12):
    """Gram-Schmidt on two vectors; raises if they are (nearly) dependent."""
    b1 = np.asarray(v1, dtype=float)
    n1 = np.linalg.norm(b1)
    if n1 <= tol:
        raise ValueError("degenerate plane: first vector is zero")
    b1 = b1 / n1
    w = np.asarray(v2, dtype=float) - np.dot(b1, v2) * b1
    nw = np.linalg.norm(w)
    if nw <= tol * max(1.0, np.linalg.norm(v2)):
        raise ValueError("degenerate plane: vectors are linearly dependent")
    return b1, w / nw


def null_space(M, rtol=1e-10):
    """Orthonormal basis (columns) of the null space of M (rows x n)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > rtol * max(s[0], 1e-300))) if s.size else 0
    return vt[rank:].T.copy()


def dedupe_directions(dirs, threshold=1e-6):
    """Drop unit directions within ``threshold`` (radians) of an earlier one."""
    dirs = np.asarray(dirs, dtype=float)
    if dirs.size == 0:
        return dirs.reshape(0, dirs.shape[-1] if dirs.ndim == 2 else 0)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    kept = [dirs[0]]
    for d in dirs[1:]:
        K = np.asarray(kept)
        gap = 2 * np.arctan2(np.linalg.norm(K - d, axis=1), np.linalg.norm(K + d, axis=1))
        if gap.min() > threshold:
            kept.append(d)
    return np.asarray(kept)
