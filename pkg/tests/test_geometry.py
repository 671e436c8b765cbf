import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffcurv.errors import DegenerateParametrization, NonTangentField, SizeMismatch
from wulffcurv.functionals import random_vector_field
from wulffcurv.geometry import (Ellipsoid, RadialGraph, Sphere, Transformed, WulffSurface,
                                build_grid, frame_at, frames, integrate, orient_check,
                                surface_divergence, tangential_gradient, unit_normal)

from conftest import CATALOG, cached_grid, random_unit

# Area of the (1,1,2) spheroid: 2 pi (1 + (c^2/sqrt(c^2-1)) asin(sqrt(c^2-1)/c)) with
# c = 2, i.e. 2 pi (1 + 4 pi / (3 sqrt 3)); the value also agrees with scipy dblquad.
SPHEROID_112_AREA = 21.478435327883737


def test_spheroid_area_oracle():
    c = 2.0
    e = np.sqrt(c * c - 1) / c
    closed = 2 * np.pi * (1 + c / e * np.arcsin(e))
    assert closed == pytest.approx(SPHEROID_112_AREA, rel=1e-15)


class TestFrameAt:
    def test_unit_sphere(self, rng):
        for u in random_unit(rng, 5):
            pf = frame_at(Sphere(), u)
            np.testing.assert_allclose(pf.h, np.eye(2), atol=1e-12)
            np.testing.assert_allclose(pf.nu, -pf.position, atol=1e-14)

    @pytest.mark.parametrize("R", [0.5, 3.0])
    def test_sphere_radius(self, R):
        pf = frame_at(Sphere(R), np.array([0.0, 0.6, 0.8]))
        np.testing.assert_allclose(pf.h, np.eye(2) / R, atol=1e-12)

    def test_sphere_radius_fd_mode(self):
        pf = frame_at(Sphere(2.0).with_mode("fd"), np.array([0.0, 0.6, 0.8]))
        np.testing.assert_allclose(pf.h, np.eye(2) / 2, atol=1e-6)

    def test_ellipsoid_pole(self):
        pf = frame_at(Ellipsoid([1, 1, 2]), np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(pf.position, [0, 0, 2], atol=1e-15)
        np.testing.assert_allclose(pf.h, np.diag([2.0, 2.0]), atol=1e-12)

    def test_frame_invariants(self, rng):
        surf = Ellipsoid([1, 1.5, 2])
        fs = frames(surf, random_unit(rng, 100))
        gram = np.einsum("pai,paj->pij", fs.E, fs.E)
        assert np.max(np.abs(gram - np.eye(2))) < 1e-10
        assert np.max(np.abs(np.einsum("pai,pa->pi", fs.E, fs.nu))) < 1e-10
        assert np.max(np.abs(np.linalg.norm(fs.nu, axis=1) - 1)) < 1e-10
        assert np.max(np.abs(fs.h - np.swapaxes(fs.h, 1, 2))) < 1e-8

    def test_s_is_product(self):
        pf = frame_at(Ellipsoid([1, 1.5, 2]), np.array([0.6, 0.0, 0.8]), CATALOG["norm"])
        assert np.array_equal(pf.s, pf.A @ pf.h)

    def test_wulff_normal_is_minus_parameter(self, catalog_model, rng):
        x = random_unit(rng, 50)
        nu = unit_normal(WulffSurface(catalog_model), x)
        assert np.max(np.abs(nu + x)) < 1e-8

    def test_degenerate(self):
        with pytest.raises(DegenerateParametrization):
            frames(Ellipsoid([1, 1, 1e-12]), np.array([[1.0, 0.0, 0.0]]))

    @settings(max_examples=25, deadline=None)
    @given(c=st.floats(0.2, 5.0), seed=st.integers(0, 1000))
    def test_scaling(self, c, seed):
        rng = np.random.default_rng(seed)
        u = random_unit(rng, 3)
        base = Ellipsoid([1, 1.5, 2])
        h0 = frames(base, u).h
        h1 = frames(Transformed(base, scale=c), u).h
        assert np.max(np.abs(h1 - h0 / c)) < 1e-8


class TestOrientation:
    def test_unit_sphere(self):
        assert orient_check(Sphere()) == pytest.approx(-4 * np.pi / 3, abs=1e-10)

    def test_unit_circle(self):
        assert orient_check(Sphere(1.0, n=1)) == pytest.approx(-np.pi, abs=1e-10)

    def test_translated(self):
        surf = Transformed(Sphere(), translate=[0.4, -1.0, 2.0])
        assert orient_check(surf) == pytest.approx(-4 * np.pi / 3, abs=1e-10)

    @pytest.mark.parametrize("surf", [
        Ellipsoid([1, 1, 2]), Ellipsoid([3, 1]), WulffSurface(CATALOG["norm"]),
        WulffSurface(CATALOG["quad"]), RadialGraph([0.2], ["x1*x2"]),
        Transformed(Sphere(), scale=0.5, translate=[1, 1, 1]),
    ], ids=repr)
    def test_catalog_negative(self, surf):
        assert orient_check(surf) < 0

    def test_ellipsoid_volume(self):
        assert orient_check(Ellipsoid([1, 1.5, 2])) == pytest.approx(-4 * np.pi, rel=1e-10)


class TestGrid:
    def test_sphere_area(self):
        g = build_grid(Sphere(), 3)
        assert integrate(g, np.ones(len(g.weights))) == pytest.approx(4 * np.pi, abs=1e-10)
        assert np.all(g.weights > 0)

    def test_sphere_moment(self):
        g = build_grid(Sphere(), 3)
        x3 = g.frames.X[:, 2]
        assert integrate(g, x3 ** 2) == pytest.approx(4 * np.pi / 3, abs=1e-10)

    def test_spheroid_area(self):
        g = cached_grid("ellipsoid:a=1,b=1,c=2", 5)
        assert g.area == pytest.approx(SPHEROID_112_AREA, abs=1e-8)

    def test_node_counts(self):
        assert len(build_grid(Sphere(), 2).weights) == 16 * 32
        assert len(build_grid(Sphere(1.0, 1), 2).weights) == 32

    def test_ellipse_perimeter(self):
        from scipy.special import ellipe

        g = build_grid(Ellipsoid([2, 1]), 4)
        # perimeter of x^2/4 + y^2 = 1 is 4 a E(1 - b^2/a^2)
        assert g.area == pytest.approx(4 * 2 * ellipe(1 - 1 / 4), rel=1e-12)

    def test_size_mismatch(self):
        g = build_grid(Sphere(), 1)
        with pytest.raises(SizeMismatch):
            integrate(g, np.ones(3))

    def test_level_zero_rejected(self):
        with pytest.raises(ValueError):
            build_grid(Sphere(), 0)

    def test_spacing(self):
        assert build_grid(Sphere(), 2).spacing == pytest.approx(np.pi / 16)


class TestTangentialCalculus:
    def test_gradient_of_constant(self, rng):
        u = random_unit(rng, 10)
        g = tangential_gradient(Ellipsoid([1, 2, 3]), lambda q: np.ones(len(q)), u)
        assert np.max(np.abs(g)) < 1e-12

    def test_gradient_of_linear(self, rng):
        a = np.array([0.3, -1.0, 0.5])
        u = random_unit(rng, 20)
        g = tangential_gradient(Sphere(), lambda q: q @ a, u, ambient=True)
        expected = a - (u @ a)[:, None] * u
        assert np.max(np.abs(g - expected)) < 1e-9

    def test_sigma1_constant_on_wulff(self, catalog_model, rng):
        surf = WulffSurface(catalog_model)
        from wulffcurv.curvature import bundle_for_frames

        def sigma1(q):
            return bundle_for_frames(frames(surf, q), catalog_model).sigma[:, 1]

        g = tangential_gradient(surf, sigma1, random_unit(rng, 10))
        assert np.max(np.abs(g)) < 1e-6

    def test_divergence_position_on_sphere(self, rng):
        u = random_unit(rng, 10)
        assert np.max(np.abs(surface_divergence(Sphere(), lambda q: 0 * q, u))) < 1e-14

    def test_divergence_projected_constant(self, rng):
        # on the unit sphere div(a - <a,x>x) = -2 <a,x> = 2 <a,nu>
        a = np.array([0.7, 0.2, -0.4])
        u = random_unit(rng, 30)
        d = surface_divergence(Sphere(), lambda q: a - (q @ a)[:, None] * q, u)
        assert np.max(np.abs(d + 2 * (u @ a))) < 1e-9

    def test_non_tangent(self):
        with pytest.raises(NonTangentField):
            surface_divergence(Sphere(), lambda q: q, np.array([[0.0, 0.0, 1.0]]))

    @pytest.mark.parametrize("seed", range(10))
    def test_divergence_theorem_grid(self, seed):
        surf = Ellipsoid([1, 1.5, 2])
        g = cached_grid("ellipsoid:a=1,b=1.5,c=2", 4)
        W = random_vector_field(2, seed)

        def V(q):
            w = W(q)
            nu = unit_normal(surf, q)
            return w - np.sum(w * nu, axis=-1, keepdims=True) * nu

        div = surface_divergence(surf, V, g.nodes, step=1e-3)
        assert abs(integrate(g, div)) < 1e-6
