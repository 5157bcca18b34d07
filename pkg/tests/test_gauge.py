import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conekernel import CustomGauge, Ellipsoidal, Euclidean, MeridianArc, WeightedP
from conekernel.errors import DimensionError, NoUniqueRayError, UndefinedGradientError, UnsupportedOperation
from conekernel.gauge import _fd_gradient, _fd_jacobian, gauge_from_record
from conekernel.oracle import brute_force_dual_norm
from conekernel.sphere import normalize

from conftest import random_spd

vec3 = arrays(np.float64, 3, elements=st.floats(-5, 5, allow_nan=False)).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


def gauges3():
    rng = np.random.default_rng(1)
    return [Euclidean(3), Ellipsoidal(random_spd(rng, 3)), WeightedP.uniform(4, 3),
            WeightedP(3, [1.0, 2.0, 0.5])]


# --- evaluation -------------------------------------------------------------


def test_eval_examples():
    assert Euclidean(2).eval([3, 4]) == pytest.approx(5)
    assert WeightedP(4, [1, 1]).eval([1, 1]) == pytest.approx(2 ** 0.25)
    assert Ellipsoidal(np.diag([1.0, 4.0])).eval([1, 1]) == pytest.approx(np.sqrt(5))


def test_eval_zero_and_dimension():
    for g in gauges3():
        assert g.eval(np.zeros(3)) == 0
        with pytest.raises(DimensionError):
            g.eval([1.0, 2.0])


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(0, 10))
def test_homogeneity(x, t):
    for g in gauges3():
        assert abs(g.eval(t * x) - t * g.eval(x)) <= 1e-10 * max(1.0, t * np.linalg.norm(x))


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_subadditivity(x, y):
    for g in gauges3():
        assert g.eval(x + y) <= g.eval(x) + g.eval(y) + 1e-12


def test_weighted_p_no_overflow():
    g = WeightedP(8, [1.0, 1.0])
    assert g.eval([1e60, 1e60]) == pytest.approx(1e60 * 2 ** (1 / 8))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        WeightedP(1.0, [1, 1])
    with pytest.raises(ValueError):
        WeightedP(3, [1, -1])
    with pytest.raises(ValueError):
        Ellipsoidal(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        Ellipsoidal(np.array([[1.0, 0.5], [0.0, 1.0]]))


# --- gradients ---------------------------------------------------------------


def test_grad_examples():
    assert np.allclose(Euclidean(2).grad([0, 2]), [0, 1])
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = np.array([0.3, -1.2])
    assert np.allclose(Ellipsoidal(A).grad(x), A @ x / np.sqrt(x @ A @ x))
    g = WeightedP(4, [1, 1])
    s = g.eval([1, 1])
    assert np.allclose(g.grad([1, 1]), np.array([1, 1]) / s ** 3)
    assert np.allclose(g.grad([1, 1]), _fd_gradient(g.eval, np.array([1.0, 1.0]), 1e-6), atol=1e-8)


def test_grad_at_zero_raises():
    for g in gauges3():
        with pytest.raises(UndefinedGradientError):
            g.grad(np.zeros(3))


@settings(max_examples=100, deadline=None)
@given(vec3)
def test_euler_identity(x):
    for g in gauges3():
        assert abs(g.grad(x) @ x - g.eval(x)) <= 1e-8 * max(1.0, g.eval(x))


def test_grad_matches_finite_differences(rng):
    for g in gauges3():
        for _ in range(100):
            x = rng.standard_normal(3)
            x[np.abs(x) < 0.05] += 0.1  # stay away from the axes
            fd = _fd_gradient(g.eval, x, 1e-6)
            assert np.max(np.abs(g.grad(x) - fd)) <= 1e-5


def test_sq_hessian_matches_finite_differences(rng):
    for g in gauges3():
        for _ in range(20):
            x = rng.standard_normal(3) + 0.2
            fd = _fd_jacobian(lambda z: g.eval(z) * g.grad(z), x, 1e-6)
            assert np.allclose(g.sq_hessian(x), fd, atol=1e-5)


# --- dual norms ---------------------------------------------------------------


def test_dual_norm_examples():
    assert Euclidean(2).dual_norm([3, 4]) == pytest.approx(5)
    assert WeightedP(2, [1, 1]).dual_norm([1, 0]) == pytest.approx(1)


def test_dual_norm_self_duality(rng):
    g = Euclidean(3)
    for _ in range(100):
        y = rng.standard_normal(3)
        assert abs(g.dual_norm(y) - g.eval(y)) <= 1e-10


def test_dual_weights_certified_by_oracle():
    g = WeightedP(4, [2.0, 1.0])
    y = np.array([1.0, 1.0])
    ref = brute_force_dual_norm(g, y)
    assert abs(g.dual_norm(y) - ref.value) <= 1e-4
    assert abs(g.dual_gauge().eval(y) - ref.value) <= 1e-4
    # reciprocal weights only work in the self-dual exponent
    q = g.conjugate_exponent
    naive = float(np.sum(y ** q / g.omega) ** (1 / q))
    assert abs(naive - ref.value) > 1e-2


def test_dual_norm_matches_oracle_random(rng):
    for _ in range(3):
        g = WeightedP(rng.uniform(1.5, 5), rng.uniform(0.3, 3, 3))
        y = rng.standard_normal(3)
        ref = brute_force_dual_norm(g, y, directions=4000)
        assert abs(g.dual_norm(y) - ref.value) <= 1e-4 + ref.accuracy


def test_dual_norm_numeric_for_ellipsoid(rng):
    A = random_spd(rng, 3)
    g = Ellipsoidal(A)
    y = rng.standard_normal(3)
    assert g.dual_norm(y) == pytest.approx(np.sqrt(y @ np.linalg.solve(A, y)))
    ref = brute_force_dual_norm(g, y, directions=4000)
    assert abs(g.dual_norm(y) - ref.value) <= 1e-4


def test_dual_norm_asymmetric_unsupported():
    g = CustomGauge(2, lambda x: np.linalg.norm(x) + 0.5 * x[0], symmetric=False)
    with pytest.raises(UnsupportedOperation):
        g.dual_norm([1, 0])


# --- sigma rays ----------------------------------------------------------------


def _tangent(g, u, a, rng, count=400):
    """eval(u - h) >= 1 for sampled h in the hyperplane a^perp."""
    H = rng.standard_normal((count, a.size))
    H -= np.outer(H @ a, a)
    H *= rng.uniform(0, 2, (count, 1))
    return min(g.eval(u - h) for h in H) >= 1 - 1e-12


def test_sigma_ray_examples(rng):
    assert np.allclose(Euclidean(2).sigma_ray([0, 1]), [0, 1])
    A = random_spd(rng, 3)
    g = Ellipsoidal(A)
    a = normalize(rng.standard_normal(3))
    u = g.sigma_ray(a)
    v = np.linalg.solve(A, a)
    assert np.allclose(u, v / g.eval(v))
    assert _tangent(g, u, a, rng)
    g = WeightedP(4, [1, 1])
    a = normalize([1.0, 1.0])
    u = g.sigma_ray(a)
    v = np.sign(a) * np.abs(a) ** (1 / 3)
    assert np.allclose(u, v / g.eval(v))
    assert _tangent(g, u, a, rng)


@settings(max_examples=40, deadline=None)
@given(vec3)
def test_sigma_ray_properties(a):
    a = normalize(a)
    for g in gauges3():
        u = g.sigma_ray(a)
        assert g.eval(u) == pytest.approx(1, abs=1e-12)
        assert u @ a > 0
        gu = g.grad(u)
        assert np.linalg.norm(gu - (gu @ a) * a) <= 1e-8 * np.linalg.norm(gu)


def test_sigma_ray_numeric_asymmetric(rng):
    # shifted Euclidean ball: eval(x) = |x| + <b, x> with |b| < 1
    b = np.array([0.3, -0.2, 0.1])
    g = CustomGauge(3, lambda x: np.linalg.norm(x) + b @ x,
                    grad_func=lambda x: x / np.linalg.norm(x) + b, symmetric=False)
    for _ in range(5):
        a = normalize(rng.standard_normal(3))
        u = g.sigma_ray(a)
        assert g.eval(u) == pytest.approx(1, abs=1e-9)
        assert _tangent(g, u, a, rng)
        # argmax of <a, x> over the unit ball
        assert a @ u >= max(a @ (d / g.eval(d)) for d in rng.standard_normal((2000, 3))) - 1e-9


def test_sigma_ray_needs_smooth_strictly_convex():
    g = CustomGauge(2, lambda x: np.abs(x).sum(), smooth=False)
    with pytest.raises(NoUniqueRayError):
        g.sigma_ray([0.0, 1.0])
    with pytest.raises(ValueError):
        Euclidean(2).sigma_ray([0.0, 2.0])


# --- meridians ------------------------------------------------------------------


def test_meridian_examples():
    arc = MeridianArc.from_vectors([1, 0, 0], [0, 1, 0], 0, np.pi / 2, 3)
    pts = Euclidean(3).meridian_points(arc)
    assert np.allclose(pts, [[1, 0, 0], [np.sqrt(0.5), np.sqrt(0.5), 0], [0, 1, 0]])
    pts = WeightedP.uniform(4, 3).meridian_points(arc)
    assert np.allclose(pts[1], [2 ** -0.25, 2 ** -0.25, 0])
    pts = Ellipsoidal(np.diag([1.0, 4.0, 1.0])).meridian_points(arc)
    assert np.allclose(pts[2], [0, 0.5, 0])


def test_meridian_points_on_sphere(rng):
    for g in gauges3():
        arc = MeridianArc.from_vectors(rng.standard_normal(3), rng.standard_normal(3), 0.1, 2.5, 15)
        pts = g.meridian_points(arc)
        assert np.allclose([g.eval(p) for p in pts], 1)
        normal = np.cross(arc.b1, arc.b2)
        assert np.allclose(pts @ normal, 0)


def test_meridian_validation():
    with pytest.raises(ValueError):
        MeridianArc.from_vectors([1, 0, 0], [2, 0, 0])
    with pytest.raises(ValueError):
        MeridianArc.from_vectors([1, 0, 0], [0, 1, 0], 1.0, 0.5)
    with pytest.raises(ValueError):
        MeridianArc(np.array([1.0, 1, 0]), np.array([0.0, 0, 1]), 0, 1)


def test_through_endpoints():
    u, v = normalize([1, 2, 0]), normalize([0, 1, 3])
    d = MeridianArc.through(u, v, 7).directions()
    assert np.allclose(d[0], u) and np.allclose(d[-1], v)


# --- images and records -------------------------------------------------------------


def test_linear_image(rng):
    g = WeightedP.uniform(4, 3)
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    h = g.image(A)
    x = rng.standard_normal(3)
    assert h.eval(A @ x) == pytest.approx(g.eval(x))
    assert np.allclose(h.grad(A @ x), _fd_gradient(h.eval, A @ x, 1e-6), atol=1e-6)
    a = normalize(rng.standard_normal(3))
    u = h.sigma_ray(a)
    assert h.eval(u) == pytest.approx(1)
    assert _tangent(h, u, a, rng)
    e = Euclidean(3).image(A)
    assert isinstance(e, Ellipsoidal)
    assert e.eval(A @ x) == pytest.approx(np.linalg.norm(x))


def test_records_round_trip(rng):
    for g in gauges3()[:3]:
        h = gauge_from_record(g.to_record())
        x = rng.standard_normal(3)
        assert h.eval(x) == pytest.approx(g.eval(x))
    with pytest.raises(ValueError):
        gauge_from_record({"type": "bogus"})
