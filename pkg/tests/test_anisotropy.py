import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffcurv._sphere import tangent_basis
from wulffcurv.anisotropy import (AnisotropyModel, check_convexity, eval_A_F, eval_F,
                                  eval_sphere_gradient, wulff_point)
from wulffcurv.errors import (ConvexityViolation, NonOrthonormalFrame, NonPositiveValue,
                              NonUnitInput)

from conftest import CATALOG, random_unit

E1, E2, E3 = np.eye(3)


def _geodesic(x, v, t):
    return np.cos(t) * x + np.sin(t) * v


def fd_hessian(f, x, frame, eps=1e-4):
    """Second geodesic differences of f at x along the frame, written independently."""
    n = frame.shape[1]
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        vi = frame[:, i]
        H[i, i] = (f(_geodesic(x, vi, eps)) - 2 * f0 + f(_geodesic(x, vi, -eps))) / eps ** 2
        for j in range(i + 1, n):
            vj = frame[:, j]
            wp = (vi + vj) / np.sqrt(2)
            wm = (vi - vj) / np.sqrt(2)
            dp = (f(_geodesic(x, wp, eps)) - 2 * f0 + f(_geodesic(x, wp, -eps))) / eps ** 2
            dm = (f(_geodesic(x, wm, eps)) - 2 * f0 + f(_geodesic(x, wm, -eps))) / eps ** 2
            H[i, j] = H[j, i] = 0.5 * (dp - dm)
    return H


def plain_F(model):
    """One-line formulas for the catalog, independent of the package."""
    if model.kind == "const":
        return lambda x: model.c
    if model.kind == "linear":
        return lambda x: 1.0 + np.dot(model.vec, x)
    if model.kind == "norm":
        return lambda x: np.linalg.norm(np.asarray(model.vec) * x)
    return lambda x: 1.0 + model.c * np.dot(model.vec, x) ** 2


class TestEvalF:
    def test_constant(self):
        assert eval_F(CATALOG["const"], np.array([0.6, 0.8, 0.0])) == 1.0

    def test_linear(self):
        assert eval_F(CATALOG["linear"], E1) == pytest.approx(1.3, abs=1e-15)

    def test_norm(self):
        assert eval_F(CATALOG["norm"], E1) == pytest.approx(2.0, abs=1e-15)

    def test_non_unit_input(self):
        with pytest.raises(NonUnitInput):
            eval_F(CATALOG["norm"], np.array([1.0, 1e-6, 0.0]) * 1.001)

    def test_non_positive(self):
        with pytest.raises(NonPositiveValue):
            eval_F(AnisotropyModel.linear([1.5, 0, 0]), -E1)

    def test_matches_plain_formula(self, catalog_model, rng):
        x = random_unit(rng, 50)
        f = plain_F(catalog_model)
        np.testing.assert_allclose(catalog_model.value(x), [f(p) for p in x], rtol=1e-14)


class TestSphereGradient:
    def test_constant_is_zero(self, rng):
        x = random_unit(rng, 10)
        assert np.max(np.abs(eval_sphere_gradient(CATALOG["const"], x))) < 1e-14

    def test_linear_closed_form(self, rng):
        a = np.array([0.3, 0.0, 0.0])
        x = random_unit(rng, 20)
        expected = a - (x @ a)[:, None] * x
        np.testing.assert_allclose(eval_sphere_gradient(CATALOG["linear"], x), expected,
                                   atol=1e-14)

    def test_norm_axis_is_critical(self):
        g = eval_sphere_gradient(CATALOG["norm"], E2)
        assert np.max(np.abs(g)) < 1e-14
        g_fd = CATALOG["norm"].with_mode("fd").sphere_gradient(E2)
        assert np.max(np.abs(g_fd)) < 1e-9

    def test_tangency(self, catalog_model, rng):
        x = random_unit(rng, 1000)
        g = catalog_model.sphere_gradient(x)
        assert np.max(np.abs(np.sum(g * x, axis=1))) < 1e-10

    def test_fd_route_agrees(self, catalog_model, rng):
        x = random_unit(rng, 30)
        g = catalog_model.sphere_gradient(x)
        g_fd = catalog_model.with_mode("fd").sphere_gradient(x)
        assert np.max(np.abs(g - g_fd)) < 1e-8


class TestAF:
    def test_constant_identity(self, rng):
        x = random_unit(rng, 5)
        A = eval_A_F(CATALOG["const"], x, tangent_basis(x))
        np.testing.assert_allclose(A, np.broadcast_to(np.eye(2), A.shape), atol=1e-14)

    def test_linear_identity(self, rng):
        x = random_unit(rng, 20)
        A = eval_A_F(CATALOG["linear"], x, tangent_basis(x))
        np.testing.assert_allclose(A, np.broadcast_to(np.eye(2), A.shape), atol=1e-13)

    def test_norm_at_pole(self):
        frame = np.column_stack([E2, E3])
        A = eval_A_F(CATALOG["norm"], E1, frame)
        # oracle: geodesic second differences of |Bx| plus F
        H = fd_hessian(plain_F(CATALOG["norm"]), E1, frame) + 2.0 * np.eye(2)
        np.testing.assert_allclose(H, np.diag([0.5, 0.5]), atol=1e-6)
        np.testing.assert_allclose(A, np.diag([0.5, 0.5]), atol=1e-14)

    def test_rejects_bad_frame(self):
        with pytest.raises(NonOrthonormalFrame):
            eval_A_F(CATALOG["norm"], E1, np.column_stack([E2, E2]))
        with pytest.raises(NonOrthonormalFrame):
            eval_A_F(CATALOG["norm"], E1, np.column_stack([E1, E2]))

    def test_hessian_cross_validation(self, catalog_model, rng):
        x = random_unit(rng, 100)
        frames = tangent_basis(x)
        A = catalog_model.A_F(x, frames)
        f = plain_F(catalog_model)
        tol = max(1e-6, 10 * catalog_model.fd_step ** (2 / 3))
        for k in range(len(x)):
            ref = fd_hessian(f, x[k], frames[k]) + f(x[k]) * np.eye(2)
            assert np.max(np.abs(A[k] - ref)) < tol

    def test_fd_mode_within_tolerance(self, catalog_model, rng):
        x = random_unit(rng, 40)
        frames = tangent_basis(x)
        A = catalog_model.A_F(x, frames)
        A_fd = catalog_model.with_mode("fd").A_F(x, frames)
        assert np.max(np.abs(A - A_fd)) < max(1e-6, 10 * 1e-5 ** (2 / 3))

    @settings(max_examples=40, deadline=None)
    @given(angle=st.floats(0.0, 2 * np.pi), seed=st.integers(0, 10_000))
    def test_frame_covariance(self, angle, seed):
        rng = np.random.default_rng(seed)
        x = random_unit(rng, 1)[0]
        frame = tangent_basis(x[None])[0]
        R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        for model in CATALOG.values():
            A = model.A_F(x, frame)
            A_rot = model.A_F(x, frame @ R)
            np.testing.assert_allclose(A_rot, R.T @ A @ R, atol=1e-10)

    def test_symmetric(self, catalog_model, rng):
        x = random_unit(rng, 200)
        A = catalog_model.A_F(x, tangent_basis(x))
        assert np.max(np.abs(A - np.swapaxes(A, 1, 2))) < 1e-10


class TestConvexity:
    def test_constant(self):
        rep = check_convexity(CATALOG["const"], 1)
        assert rep.passed and rep.min_eigenvalue_of_A_F == pytest.approx(1.0, abs=1e-14)
        assert rep.sample_count >= 100

    def test_linear_strong(self):
        rep = check_convexity(AnisotropyModel.linear([0.9, 0, 0]), 2)
        assert rep.passed
        assert rep.min_eigenvalue_of_A_F == pytest.approx(1.0, abs=1e-12)
        assert rep.sample_count >= 400

    def test_quad_scan_first_failure(self):
        # For F = 1 + c<d,x>^2 the smallest eigenvalue of A_F is 1 - c<d,x>^2,
        # so over the sample the minimum is 1 - c * max <d,x>^2.
        first_fail = None
        for c in np.arange(0.0, 2.0001, 0.05):
            rep = AnisotropyModel.quad(c, [0, 0, 1]).check_convexity(2)
            if not rep.passed:
                first_fail = round(float(c), 2)
                break
        assert first_fail == 1.05
        rep = AnisotropyModel.quad(1.5, [0, 0, 1]).check_convexity(2)
        from wulffcurv._sphere import sample_sphere

        t2 = np.max(sample_sphere(2, rep.sample_count)[:, 2] ** 2)
        assert rep.min_eigenvalue_of_A_F == pytest.approx(1 - 1.5 * t2, abs=1e-12)
        assert abs(rep.argmin_point[2]) == pytest.approx(np.sqrt(t2), abs=1e-12)

    def test_report_dict(self):
        d = check_convexity(CATALOG["norm"], 1).as_dict()
        assert set(d) == {"sample_count", "min_eigenvalue_of_A_F", "argmin_point", "pass"}


class TestWulffPoint:
    def test_constant_is_identity(self, rng):
        x = random_unit(rng, 10)
        np.testing.assert_allclose(wulff_point(CATALOG["const"], x), x, atol=1e-15)

    def test_linear_translates(self, rng):
        x = random_unit(rng, 10)
        np.testing.assert_allclose(wulff_point(CATALOG["linear"], x), x + [0.3, 0, 0],
                                   atol=1e-14)

    def test_norm_pole_and_ellipsoid(self, rng):
        np.testing.assert_allclose(wulff_point(CATALOG["norm"], E1), [2, 0, 0], atol=1e-15)
        phi = wulff_point(CATALOG["norm"], random_unit(rng, 100))
        np.testing.assert_allclose(np.sum((phi / [2, 1, 1]) ** 2, axis=1), 1.0, rtol=1e-13)

    def test_euler_relation(self, catalog_model, rng):
        x = random_unit(rng, 50)
        fd = catalog_model.with_mode("fd")
        direct = fd.value(x)[:, None] * x + fd.sphere_gradient(x)
        assert np.max(np.abs(catalog_model.wulff_point(x) - direct)) < 1e-8

    def test_nonconvex_raises(self):
        with pytest.raises(ConvexityViolation) as info:
            wulff_point(AnisotropyModel.quad(2.0, [0, 0, 1]), E1)
        assert info.value.min_eigenvalue < 0
        assert info.value.argmin is not None


def test_labels_round_trip():
    from wulffcurv.specs import parse_anisotropy

    for model in list(CATALOG.values()) + [AnisotropyModel.constant(2.0, 1)]:
        assert parse_anisotropy(model.label) == model


def test_curve_dimension():
    model = AnisotropyModel.norm([2.0, 1.0])
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(model.wulff_point(x), [[2, 0], [0, 1]], atol=1e-15)
    A = model.A_F(x, tangent_basis(x))
    # F(theta) = sqrt(4 cos^2 + sin^2): F'' + F at theta=0 equals 1/2
    assert A[0, 0, 0] == pytest.approx(0.5, abs=1e-14)
