"""Kernel geometry: sampling ker(P), wedge kernels, coherence and convexity tests."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cone import Cone, Polyhedral, PowerCone, Wedge
from .errors import ConeKernelError, DimensionError, UnsupportedOperation
from .gauge import Ellipsoidal, Gauge, MeridianArc
from .projector import kernel_membership, project
from .sphere import angle, dedupe_directions, normalize, sphere_directions

RANK_TOL = 1e-6
DEDUPE = 1e-6
# sigma-ray directions must pass the sweep predicate at this (looser) level
SUBSET_TOL = 1e-7

CONVEX = "convex"
NONCONVEX = "nonconvex"
INCONCLUSIVE = "inconclusive"
COHERENT = "coherent"
INCOHERENT = "incoherent"


def _label(obj):
    try:
        return obj.to_record()
    except ConeKernelError:
        return {"type": type(obj).__name__}


@dataclass(eq=False)
class KernelSample:
    """Unit directions certified to lie in ker(P), with their membership margins.

    ``labels`` tags each direction with the strategy that produced it.
    """

    gauge: dict
    cone: dict
    directions: np.ndarray
    margins: np.ndarray
    method: str
    labels: list = field(default_factory=list)
    # worst membership margin of the sigma-ray family under the sweep predicate
    subset_margin: float = 0.0

    def __len__(self):
        return len(self.directions)

    def by_label(self, label):
        mask = np.array([l == label for l in self.labels], dtype=bool)
        return self.directions[mask] if mask.size else self.directions[:0]

    def to_record(self):
        return {
            "gauge": self.gauge,
            "cone": self.cone,
            "method": self.method,
            "directions": self.directions.tolist(),
            "margins": self.margins.tolist(),
            "labels": list(self.labels),
            "subset_margin": self.subset_margin,
        }


@dataclass(eq=False)
class CoherenceReport:
    arc: dict
    rank: int
    singular_values: np.ndarray
    verdict: str
    rank_tol: float = RANK_TOL

    @property
    def coherent(self):
        return self.verdict == COHERENT

    def to_record(self):
        return {
            "arc": self.arc,
            "rank": self.rank,
            "singular_values": self.singular_values.tolist(),
            "verdict": self.verdict,
            "rank_tol": self.rank_tol,
        }


@dataclass(eq=False)
class ConvexityReport:
    """Midpoint-convexity verdict for a kernel, cross-checked against coherence.

    A nonconvex verdict carries ``witness``: two kernel directions ``u, v`` and
    their normalized midpoint, whose membership margin exceeds 10x tolerance.
    """

    verdict: str
    pairs_tested: int
    midpoint_verdict: str
    max_margin: float
    witness: Optional[dict] = None
    coherence: Optional[CoherenceReport] = None
    agreement: bool = True
    notes: list = field(default_factory=list)

    @property
    def certified(self):
        """True when the witness is also confirmed by a direct projection."""
        return self.witness is not None and self.witness["projection_norm"] > 1e-4

    def to_record(self):
        w = None
        if self.witness is not None:
            w = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.witness.items()}
        return {
            "verdict": self.verdict,
            "pairs_tested": self.pairs_tested,
            "midpoint_verdict": self.midpoint_verdict,
            "max_margin": self.max_margin,
            "witness": w,
            "coherence": None if self.coherence is None else self.coherence.to_record(),
            "agreement": self.agreement,
            "notes": list(self.notes),
        }


@dataclass(eq=False)
class BipolarReport:
    verdict: str
    wedges_tested: int
    inconclusive: int
    counterexample: Optional[Wedge] = None
    report: Optional[ConvexityReport] = None
    note: str = "all-convex on a finite sample of wedges is evidence, not proof"

    def to_record(self):
        return {
            "verdict": self.verdict,
            "wedges_tested": self.wedges_tested,
            "inconclusive": self.inconclusive,
            "counterexample": None if self.counterexample is None else self.counterexample.to_record(),
            "report": None if self.report is None else self.report.to_record(),
            "note": self.note,
        }


# --- sampling ------------------------------------------------------------------


def kernel_sample(g: Gauge, c: Cone, directions=500, rng=None, tol=1e-9) -> KernelSample:
    """Kernel directions from a sphere sweep and from the sigma-rays of supporting halfspaces.

    Every sigma-ray direction must pass the same gradient-in-polar predicate
    used by the sweep; a violation raises, since it means the two descriptions
    of the kernel disagree.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if g.dim != c.dim:
        raise DimensionError("gauge and cone dimensions differ")
    polar = c.polar()
    sweep, sweep_m = [], []
    for d in sphere_directions(c.dim, int(directions), rng):
        m = kernel_membership(g, c, d, tol, polar)
        if m.member:
            sweep.append(d)
            sweep_m.append(m.margin)

    normals = c.supporting_halfspaces_at_zero(max(int(directions) // 10, 2), rng)
    rays, ray_m = [], []
    for a in normals:
        u = normalize(g.sigma_ray(normalize(a)))
        rays.append(u)
        ray_m.append(kernel_membership(g, c, u, tol, polar).margin)
    worst = max(ray_m) if ray_m else 0.0
    if worst > SUBSET_TOL:
        raise ConeKernelError(f"sigma-ray direction fails kernel membership (margin {worst:.3e})")

    dirs = np.array(sweep + rays).reshape(-1, c.dim)
    margins = np.array(sweep_m + ray_m)
    labels = ["sweep"] * len(sweep) + ["sigma_ray"] * len(rays)
    dirs, margins, labels = _dedupe_with(dirs, margins, labels)
    return KernelSample(_label(g), _label(c), dirs, margins, "sphere-sweep+sigma-ray-family",
                        labels, float(worst))


def _dedupe_with(dirs, margins, labels, threshold=DEDUPE):
    if len(dirs) == 0:
        return dirs, margins, labels
    keep = []
    for i, d in enumerate(dirs):
        if all(angle(d, dirs[j]) > threshold for j in keep):
            keep.append(i)
    return dirs[keep], margins[keep], [labels[i] for i in keep]


def wedge_kernel_arc(g: Gauge, w: Wedge, count=41) -> np.ndarray:
    """Sigma-rays ``x_lam`` of the normals ``normalize((1-lam) a1 + lam a2)``, lam in [0, 1]."""
    lam = np.linspace(0.0, 1.0, int(count))
    return np.array([g.sigma_ray(normalize((1 - t) * w.a1 + t * w.a2)) for t in lam])


# --- coherence ---------------------------------------------------------------


def coherence_test(g: Gauge, arc, rank_tol=RANK_TOL) -> CoherenceReport:
    """Numerical rank of the gradient image of an arc; coherent iff rank <= 2.

    ``arc`` is a MeridianArc or an explicit array of points on the unit sphere.
    """
    if isinstance(arc, MeridianArc):
        pts = g.meridian_points(arc)
        desc = {"kind": "meridian", **arc.to_record()}
    else:
        pts = np.atleast_2d(np.asarray(arc, dtype=float))
        desc = {"kind": "points", "count": int(len(pts))}
    if len(pts) < 3:
        return CoherenceReport(desc, 0, np.zeros(0), INCONCLUSIVE, rank_tol)
    G = np.array([g.grad(x) for x in pts])
    s = np.linalg.svd(G, compute_uv=False)
    rank = int(np.sum(s > rank_tol * s[0]))
    return CoherenceReport(desc, rank, s, COHERENT if rank <= 2 else INCOHERENT, rank_tol)


def linear_image_coherence_check(A, g: Gauge, arc, rank_tol=RANK_TOL):
    """Coherence of an arc under ``g`` and of its image ``A x`` under ``g o A^{-1}``.

    Returns ``(report, image_report, same_verdict)``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (g.dim, g.dim) or np.linalg.cond(A) > 1e12:
        raise ValueError("A must be a nonsingular square matrix of the gauge dimension")
    pts = g.meridian_points(arc) if isinstance(arc, MeridianArc) else np.asarray(arc, float)
    base = coherence_test(g, arc, rank_tol)
    image = coherence_test(g.image(A), pts @ A.T, rank_tol)
    return base, image, base.verdict == image.verdict


# --- convexity -----------------------------------------------------------------


def _pairs(k, limit, rng):
    if k * (k - 1) // 2 <= limit * (limit - 1) // 2 and k <= limit:
        return [(i, j) for i in range(k) for j in range(i + 1, k)]
    count = limit * (limit - 1) // 2
    i = rng.integers(0, k, count)
    j = rng.integers(0, k, count)
    return [(a, b) for a, b in zip(i, j) if a != b]


def midpoint_convexity(g, c, dirs, tol=1e-9, rng=None, pair_limit=200, opts=None):
    """Midpoint test on kernel directions; returns (verdict, pairs, max margin, witness)."""
    rng = np.random.default_rng(0) if rng is None else rng
    polar = c.polar()
    band = 10 * tol
    pairs = _pairs(len(dirs), pair_limit, rng)
    best, best_m, tested = None, -np.inf, 0
    for i, j in pairs:
        s = dirs[i] + dirs[j]
        if np.linalg.norm(s) < 1e-8:
            continue
        mid = normalize(s)
        tested += 1
        m = kernel_membership(g, c, mid, tol, polar).margin
        if m > best_m:
            best, best_m = (i, j, mid), m
    if tested == 0:
        return INCONCLUSIVE, 0, 0.0, None
    if best_m <= band:
        return CONVEX, tested, float(best_m), None
    i, j, mid = best
    pn = float(np.linalg.norm(project(g, c, mid, opts).point))
    witness = {"u": dirs[i], "v": dirs[j], "midpoint": mid, "margin": float(best_m),
               "projection_norm": pn}
    return NONCONVEX, tested, float(best_m), witness


def wedge_convexity_verdict(g: Gauge, w: Wedge, count=41, tol=1e-9, rng=None, sweep=0,
                            rank_tol=RANK_TOL, opts=None) -> ConvexityReport:
    """Midpoint convexity of ker(P) for a wedge, checked against meridian coherence.

    Kernel directions are the sigma-ray arc (plus sweep members if ``sweep``
    directions are requested). Coherence is tested on the meridian through the
    arc endpoints, since the arc itself has gradients in span(a1, a2) by
    construction. A disagreement downgrades the verdict to inconclusive.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if not isinstance(w, Wedge):
        raise UnsupportedOperation("wedge_convexity_verdict needs a wedge")
    arc = wedge_kernel_arc(g, w, count)
    dirs = arc / np.linalg.norm(arc, axis=1, keepdims=True)
    ends = dirs[0], dirs[-1]
    if sweep:
        ks = kernel_sample(g, w, sweep, rng, tol)
        dirs = np.vstack([dirs, ks.by_label("sweep")])
    dirs = dedupe_directions(dirs, DEDUPE)
    mv, tested, max_m, witness = midpoint_convexity(g, w, dirs, tol, rng, opts=opts)
    notes = []
    try:
        coh = coherence_test(g, MeridianArc.through(*ends, 20), rank_tol)
    except ValueError as exc:
        coh = CoherenceReport({"kind": "meridian", "error": str(exc)}, 0, np.zeros(0), INCONCLUSIVE, rank_tol)
    expected = {COHERENT: CONVEX, INCOHERENT: NONCONVEX}.get(coh.verdict)
    agree = expected is not None and expected == mv
    verdict = mv if agree else INCONCLUSIVE
    if not agree:
        notes.append(f"midpoint test says {mv}, coherence says {coh.verdict} (rank {coh.rank})")
    if mv == NONCONVEX and witness is not None and witness["projection_norm"] <= 1e-4:
        notes.append("witness midpoint projects close to 0; treat as weak")
    return ConvexityReport(verdict, tested, mv, max_m, witness, coh, agree, notes)


def random_wedge(n, rng, min_angle=0.1):
    """Two random unit normals with angle in [min_angle, pi - min_angle]."""
    while True:
        a1, a2 = (normalize(v) for v in rng.standard_normal((2, n)))
        if min_angle <= angle(a1, a2) <= np.pi - min_angle:
            return Wedge(a1, a2)


def bipolar_scan(g: Gauge, wedge_count=50, seed=0, count=41, tol=1e-9) -> BipolarReport:
    """Convexity over random minimal wedges; stops at the first certified counterexample."""
    rng = np.random.default_rng(seed)
    inconclusive = 0
    for i in range(int(wedge_count)):
        w = random_wedge(g.dim, rng)
        rep = wedge_convexity_verdict(g, w, count, tol, rng)
        if rep.verdict == NONCONVEX and rep.certified:
            return BipolarReport("counterexample", i + 1, inconclusive, w, rep)
        if rep.verdict != CONVEX:
            inconclusive += 1
    verdict = "all-convex" if inconclusive == 0 else INCONCLUSIVE
    return BipolarReport(verdict, int(wedge_count), inconclusive)


# --- analytic kernels ----------------------------------------------------------


def power_cone_kernel_analytic(xi, k, omega, p) -> Cone:
    """Closed-form kernel of the weighted p-norm projection onto L(xi, k).

    With ``1/k + 1/l = 1`` and dual weights ``zeta = xi**(1 - l)``, the kernel is
    ``-L(beta, r)`` with ``r = (p - 1) l`` and
    ``beta_i = zeta_i * (omega_i / omega_{m+1})**l``. For ``k = 1`` the kernel
    is polyhedral.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    m = xi.size
    if k < 1 or not p > 2 - 1 / k:
        raise ValueError("need k >= 1 and p > 2 - 1/k")
    if omega.size != m + 1 or np.any(omega <= 0) or np.any(xi <= 0):
        raise ValueError("xi must be positive of length m, omega positive of length m + 1")
    ratio = omega[:m] / omega[m]
    if k == 1:
        # |x_{m+1}| >= max_i (ratio_i / xi_i)^(1/(p-1)) |x_i|, x_{m+1} <= 0
        c = (ratio / xi) ** (1 / (p - 1))
        rows = []
        for i in range(m):
            for s in (1.0, -1.0):
                r = np.zeros(m + 1)
                r[i] = s * c[i]
                r[m] = 1.0
                rows.append(r)
        return Polyhedral(normals=np.array(rows))
    l = k / (k - 1)
    beta = xi ** (1 - l) * ratio ** l
    return PowerCone(beta, (p - 1) * l, sign=-1)


def ellipsoid_kernel_analytic(A, c: Cone, count=200, rng=None, tol=1e-9) -> KernelSample:
    """Directions of ``A^{-1}(C°)`` with kernel-membership margins under ``||.||_A``."""
    g = Ellipsoidal(A)
    if g.dim != c.dim:
        raise DimensionError("matrix and cone dimensions differ")
    rng = np.random.default_rng(0) if rng is None else rng
    polar = c.polar()
    ys = c.supporting_halfspaces_at_zero(count, rng)
    dirs = np.array([normalize(g.A_inv @ y) for y in ys])
    dirs = dedupe_directions(dirs, DEDUPE)
    margins = np.array([kernel_membership(g, c, d, tol, polar).margin for d in dirs])
    return KernelSample(_label(g), _label(c), dirs, margins, "analytic", ["analytic"] * len(dirs))


def in_ellipsoid_kernel(A, c: Cone, x, tol=1e-9) -> bool:
    """``x in A^{-1}(C°)``, i.e. ``A x`` in the polar cone."""
    return c.polar().contains(np.asarray(A, float) @ np.asarray(x, float), tol)
