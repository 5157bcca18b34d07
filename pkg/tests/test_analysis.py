import numpy as np
import pytest

from conekernel import Ellipsoidal, Euclidean, Halfspace, MeridianArc, Orthant, PowerCone, Wedge, WeightedP
from conekernel.analysis import (
    CONVEX, NONCONVEX, bipolar_scan, coherence_test, ellipsoid_kernel_analytic, in_ellipsoid_kernel,
    kernel_sample, linear_image_coherence_check, midpoint_convexity, power_cone_kernel_analytic,
    random_wedge, wedge_convexity_verdict, wedge_kernel_arc,
)
from conekernel.oracle import brute_force_dual_norm, brute_force_kernel, brute_force_project
from conekernel.projector import kernel_membership, project
from conekernel.sphere import angle, normalize, sphere_directions

from conftest import random_spd


def agreement(pred_a, pred_b, margins, band=1e-4):
    keep = np.abs(margins) >= band
    return float(np.mean(pred_a[keep] == pred_b[keep])), int(keep.sum())


# --- kernel samples ---------------------------------------------------------------


def test_halfspace_kernel_is_one_ray():
    g = WeightedP.uniform(4, 2)
    h = Halfspace(normalize([1.0, 1.0]))
    ks = kernel_sample(g, h, 500)
    u = normalize(g.sigma_ray(h.a))
    assert len(ks) >= 1
    assert all(angle(d, u) <= 1e-6 for d in ks.directions)
    assert ks.subset_margin <= 1e-7


def test_orthant_kernel_euclidean(rng):
    ks = kernel_sample(Euclidean(2), Orthant(2), 400, rng)
    assert len(ks.by_label("sweep")) > 50
    assert np.all(ks.directions <= 1e-12)
    rec = ks.to_record()
    assert rec["method"] == "sphere-sweep+sigma-ray-family" and len(rec["directions"]) == len(ks)


def test_wedge_kernel_arc_examples():
    w = Wedge([1, 0, 0], [0, 1, 0])
    arc = wedge_kernel_arc(Euclidean(3), w, 5)
    assert np.allclose(arc[0], [1, 0, 0]) and np.allclose(arc[-1], [0, 1, 0])
    assert np.allclose(arc[:, 2], 0)
    g = WeightedP.uniform(4, 3)
    arc = wedge_kernel_arc(g, w, 9)
    for u in arc:
        assert g.eval(u) == pytest.approx(1)
        assert np.linalg.norm(project(g, w, u).point) <= 1e-8


def test_sigma_rays_in_sweep_kernel(rng):
    # every sigma ray of a supporting halfspace passes the sweep predicate
    for g in [WeightedP.uniform(4, 3), Ellipsoidal(random_spd(rng, 3))]:
        for c in [Orthant(3), random_wedge(3, rng), PowerCone([1.0, 2.0], 2)]:
            ks = kernel_sample(g, c, 300, rng)
            assert ks.subset_margin <= 1e-7
            assert len(ks.by_label("sigma_ray")) >= 1


def test_sigma_rays_project_to_zero(rng):
    g = WeightedP.uniform(4, 3)
    c = PowerCone([1.0, 2.0], 2)
    ks = kernel_sample(g, c, 200, rng)
    for u in ks.by_label("sigma_ray")[:5]:
        assert np.linalg.norm(project(g, c, u).point) <= 1e-6


# --- coherence --------------------------------------------------------------------


def test_euclidean_meridians_coherent(rng):
    for g in [Euclidean(3), Ellipsoidal(random_spd(rng, 3))]:
        for _ in range(5):
            arc = MeridianArc.from_vectors(rng.standard_normal(3), rng.standard_normal(3), 0, 2.0, 30)
            rep = coherence_test(g, arc)
            assert rep.coherent and rep.rank == 2


def test_p4_coherence_matches_gradient_geometry():
    """Rank is decided by whether the gradients of the meridian stay in one plane.

    The expected rank comes from the cross products of sampled gradients.
    """
    g = WeightedP.uniform(4, 3)
    for b1, b2 in [([1, 0, 0], normalize([0, 1, 1])), (normalize([1, 1, 1]), normalize([1, -1, 0]))]:
        arc = MeridianArc.from_vectors(b1, b2, 0, np.pi / 2, 25)
        G = np.array([g.grad(x) for x in g.meridian_points(arc)])
        n = np.cross(G[0], G[-1])
        planar = np.max(np.abs(G @ normalize(n))) <= 1e-9 * np.max(np.abs(G))
        assert coherence_test(g, arc).rank == (2 if planar else 3)


def test_coherence_degenerate_input():
    rep = coherence_test(Euclidean(3), np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    assert rep.verdict == "inconclusive"


def test_linear_image_preserves_verdict(rng):
    for g in [Euclidean(3), WeightedP.uniform(4, 3)]:
        for _ in range(5):
            A = rng.standard_normal((3, 3)) + 2 * np.eye(3)
            arc = MeridianArc.from_vectors(rng.standard_normal(3), rng.standard_normal(3), 0, 1.5, 25)
            base, image, same = linear_image_coherence_check(A, g, arc)
            assert same and base.rank == image.rank
    with pytest.raises(ValueError):
        linear_image_coherence_check(np.zeros((3, 3)), Euclidean(3), arc)


# --- convexity ----------------------------------------------------------------------


def test_orthant_midpoint_convex(rng):
    ks = kernel_sample(Euclidean(3), Orthant(3), 300, rng)
    verdict, tested, _, witness = midpoint_convexity(Euclidean(3), Orthant(3), ks.directions, rng=rng)
    assert verdict == CONVEX and tested > 0 and witness is None


def test_wedge_verdicts(rng):
    for g in [Euclidean(3), Ellipsoidal(random_spd(rng, 3))]:
        rep = wedge_convexity_verdict(g, random_wedge(3, rng), rng=rng)
        assert rep.verdict == CONVEX and rep.agreement
    g = WeightedP.uniform(4, 3)
    w = Wedge(normalize([1.0, 1.0, 1.0]), normalize([1.0, -1.0, 0.0]))
    rep = wedge_convexity_verdict(g, w, rng=rng)
    assert rep.verdict == NONCONVEX and rep.certified
    mid = rep.witness["midpoint"]
    # the oracle confirms that the midpoint does not project to 0
    ref = brute_force_project(g, w, mid, starts=16)
    assert np.linalg.norm(ref.value) > 1e-4
    rec = rep.to_record()
    assert rec["coherence"]["verdict"] == "incoherent"


def test_bipolar_scans():
    rep = bipolar_scan(Euclidean(3), 10, seed=3)
    assert rep.verdict == "all-convex" and rep.counterexample is None and "evidence" in rep.note
    rep = bipolar_scan(WeightedP.uniform(4, 3), 50, seed=0)
    assert rep.verdict == "counterexample" and rep.report.certified
    assert rep.to_record()["counterexample"]["type"] == "wedge"


def test_monotonicity_wedge_contains_halfspace_kernel(rng):
    for g in [WeightedP.uniform(4, 3), Ellipsoidal(random_spd(rng, 3))]:
        for _ in range(5):
            w = random_wedge(3, rng)
            h = Halfspace(w.a1)
            ks = kernel_sample(g, h, 200, rng)
            for d in ks.directions:
                assert kernel_membership(g, w, d, 1e-9).margin <= 1e-7


# --- analytic kernels -----------------------------------------------------------------


def test_power_cone_kernel_ice_cream_p4():
    k = power_cone_kernel_analytic([1.0], 2, [1.0, 1.0], 4)
    assert isinstance(k, PowerCone) and k.sign == -1
    assert k.k == pytest.approx(6) and np.allclose(k.xi, 1)


def test_power_cone_kernel_p2_is_polar():
    # Euclidean case: the kernel is the polar cone
    xi = np.array([1.0, 2.0])
    k = power_cone_kernel_analytic(xi, 3, np.ones(3), 2)
    pol = PowerCone(xi, 3).polar()
    rng = np.random.default_rng(5)
    for z in rng.standard_normal((200, 3)):
        if abs(pol.margin(z)) > 1e-6:
            assert k.contains(z, 1e-9) == pol.contains(z, 1e-9)


@pytest.mark.parametrize("xi,k,omega,p", [
    ([1.0, 2.0], 2, [1.0, 1.0, 1.0], 4),
    ([0.5, 1.5], 3, [2.0, 1.0, 0.7], 3),
    ([1.0, 2.0], 1, [1.0, 2.0, 1.0], 4),
])
def test_power_cone_kernel_numeric(xi, k, omega, p):
    g = WeightedP(p, omega)
    c = PowerCone(xi, k)
    an = power_cone_kernel_analytic(xi, k, omega, p)
    D = sphere_directions(3, 200, np.random.default_rng(2))
    num = np.array([kernel_membership(g, c, d).member for d in D])
    ana = np.array([an.contains(d, 0.0) for d in D])
    margins = np.array([an.margin(d) for d in D])
    frac, used = agreement(num, ana, margins)
    assert used > 150 and frac == 1.0


def test_power_cone_kernel_needs_certified_weights():
    """Reciprocal dual weights give a different (wrong) kernel unless the conjugate exponent is 2."""
    xi, k = np.array([2.0]), 4.0
    c = PowerCone(xi, k)
    y = np.array([1.0])
    ref = brute_force_dual_norm(WeightedP(k, xi), y, directions=2000)
    assert c.polar_norm(y) == pytest.approx(ref.value, abs=1e-4)
    l = k / (k - 1)
    assert abs(float((1 / xi[0]) ** (1 / l)) - ref.value) > 1e-2


def test_power_cone_kernel_validation():
    with pytest.raises(ValueError):
        power_cone_kernel_analytic([1.0], 2, [1.0], 4)
    with pytest.raises(ValueError):
        power_cone_kernel_analytic([1.0], 2, [1.0, 1.0], 1.2)


def test_ellipsoid_kernel_examples(rng):
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    ks = ellipsoid_kernel_analytic(A, Orthant(2), 50, rng)
    assert np.all(ks.margins <= 1e-9)
    assert in_ellipsoid_kernel(A, Orthant(2), [-1, -1])
    # A x = (1, -1) is not in the negative orthant
    assert not in_ellipsoid_kernel(A, Orthant(2), [1, -1])
    A = np.diag([1.0, 4.0])
    ks = ellipsoid_kernel_analytic(A, Halfspace([0, 1]), 10, rng)
    assert len(ks) == 1 and np.allclose(ks.directions[0], [0, 1])


def test_ellipsoid_kernel_numeric_against_oracle(rng):
    A = random_spd(rng, 2)
    c = Wedge(normalize([1.0, 0.2]), normalize([-0.3, 1.0]))
    g = Ellipsoidal(A)
    D = sphere_directions(2, 40, rng)
    kern = brute_force_kernel(g, c, D, threshold=1e-4, starts=8)
    for d in kern:
        assert in_ellipsoid_kernel(A, c, d, 1e-3)
