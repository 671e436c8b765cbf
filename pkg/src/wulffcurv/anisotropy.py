"""Anisotropy functions F: S^n -> R^+ and their Wulff maps.

Every catalog function is handled through its degree-one homogeneous
extension ``Fh(y) = |y| F(y / |y|)``.  On the unit sphere

* the Euclidean gradient of ``Fh`` equals the Wulff map ``F x + grad F``,
* the tangential part of that gradient is the sphere gradient of ``F``,
* the Euclidean Hessian restricted to ``x^perp`` equals ``D^2F + F 1``.

The finite-difference derivative mode ignores all of this and works with
geodesic central differences of ``F`` itself, which is what the tests use to
cross-check the analytic route.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ._sphere import check_unit, exp_map, sample_sphere, tangent_basis
from .errors import ConvexityViolation, NonOrthonormalFrame, NonPositiveValue

KINDS = ("const", "linear", "norm", "quad")
FRAME_TOL = 1e-10


def _sym_delta(y):
    """delta_ij y_k + delta_ik y_j + delta_jk y_i, batched over leading axes."""
    m = y.shape[-1]
    eye = np.eye(m)
    return (np.einsum("ij,...k->...ijk", eye, y)
            + np.einsum("ik,...j->...ijk", eye, y)
            + np.einsum("jk,...i->...ijk", eye, y))


def _norm_jet(y, order):
    """Jet of y -> |y| up to ``order`` (0..3)."""
    rho = np.linalg.norm(y, axis=-1)
    out = [rho]
    if order >= 1:
        out.append(y / rho[..., None])
    if order >= 2:
        m = y.shape[-1]
        out.append(np.eye(m) / rho[..., None, None]
                   - np.einsum("...i,...j->...ij", y, y) / rho[..., None, None] ** 3)
    if order >= 3:
        r3 = rho[..., None, None, None]
        out.append(-_sym_delta(y) / r3 ** 3
                   + 3 * np.einsum("...i,...j,...k->...ijk", y, y, y) / r3 ** 5)
    return out


def _inv_norm_jet(y, order):
    """Jet of y -> 1/|y| up to ``order``."""
    rho = np.linalg.norm(y, axis=-1)
    r = rho[..., None]
    out = [1.0 / rho]
    if order >= 1:
        out.append(-y / r ** 3)
    if order >= 2:
        m = y.shape[-1]
        r2 = r[..., None]
        out.append(-np.eye(m) / r2 ** 3 + 3 * np.einsum("...i,...j->...ij", y, y) / r2 ** 5)
    if order >= 3:
        r3 = r[..., None, None]
        out.append(3 * _sym_delta(y) / r3 ** 5
                   - 15 * np.einsum("...i,...j,...k->...ijk", y, y, y) / r3 ** 7)
    return out


@dataclass(frozen=True)
class ConvexityReport:
    sample_count: int
    min_eigenvalue_of_A_F: float
    argmin_point: np.ndarray
    passed: bool

    @property
    def pass_(self):
        return self.passed

    def as_dict(self):
        return {
            "sample_count": self.sample_count,
            "min_eigenvalue_of_A_F": self.min_eigenvalue_of_A_F,
            "argmin_point": [float(v) for v in self.argmin_point],
            "pass": self.passed,
        }


@dataclass(frozen=True)
class AnisotropyModel:
    """One member of the closed catalog of anisotropies on S^n.

    ``const``  F = c
    ``linear`` F = 1 + <a, x>
    ``norm``   F = |B x| with B = diag(vec)
    ``quad``   F = 1 + c <d, x>^2 with unit d = vec
    """

    kind: str
    dim: int
    c: float = 1.0
    vec: tuple = ()
    derivative_mode: str = "analytic"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown anisotropy kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ValueError("dimension n must be 1, 2 or 3")
        if self.derivative_mode not in ("analytic", "fd"):
            raise ValueError("derivative_mode must be 'analytic' or 'fd'")
        if self.kind != "const" and len(self.vec) != self.dim + 1:
            raise ValueError(f"{self.kind} anisotropy needs a vector of length {self.dim + 1}")
        if self.kind == "const" and self.c <= 0:
            raise NonPositiveValue("constant anisotropy must be positive")
        if self.kind == "norm" and min(self.vec) <= 0:
            raise ValueError("norm anisotropy needs a positive diagonal")
        if self.kind == "quad":
            d = np.asarray(self.vec, dtype=float)
            if abs(np.linalg.norm(d) - 1) > 1e-12:
                raise ValueError("quad direction d must be a unit vector")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c=1.0, n=2, **kw):
        return cls("const", n, c=float(c), **kw)

    @classmethod
    def linear(cls, a, **kw):
        a = tuple(float(v) for v in a)
        return cls("linear", len(a) - 1, vec=a, **kw)

    @classmethod
    def norm(cls, B, **kw):
        B = tuple(float(v) for v in B)
        return cls("norm", len(B) - 1, vec=B, **kw)

    @classmethod
    def quad(cls, c, d, **kw):
        d = np.asarray(d, dtype=float)
        d = tuple(float(v) for v in d / np.linalg.norm(d))
        return cls("quad", len(d) - 1, c=float(c), vec=d, **kw)

    def with_mode(self, mode, fd_step=None):
        return AnisotropyModel(self.kind, self.dim, self.c, self.vec, mode,
                               self.fd_step if fd_step is None else fd_step)

    @property
    def label(self):
        vec = ",".join(f"{v:g}" for v in self.vec)
        if self.kind == "const":
            return f"const:c={self.c:g}" + ("" if self.dim == 2 else f",n={self.dim}")
        if self.kind == "linear":
            return f"linear:a=[{vec}]"
        if self.kind == "norm":
            return f"norm:B=[{vec}]"
        return f"quad:c={self.c:g},d=[{vec}]"

    # -- homogeneous extension --------------------------------------------
    def extension_jet(self, y, order=2):
        """Value and Euclidean derivatives of the homogeneous extension at y.

        Returns a list ``[Fh, grad, hess, third]`` truncated at ``order``.
        """
        y = np.asarray(y, dtype=float)
        if self.kind == "const":
            return [self.c * t for t in _norm_jet(y, order)]
        if self.kind == "linear":
            a = np.asarray(self.vec)
            jet = _norm_jet(y, order)
            jet[0] = jet[0] + y @ a
            if order >= 1:
                jet[1] = jet[1] + a
            return jet
        if self.kind == "norm":
            b = np.asarray(self.vec)
            base = _norm_jet(y * b, order)
            out = [base[0]]
            if order >= 1:
                out.append(base[1] * b)
            if order >= 2:
                out.append(base[2] * b[:, None] * b[None, :])
            if order >= 3:
                out.append(base[3] * b[:, None, None] * b[None, :, None] * b[None, None, :])
            return out
        # quad: |y| + c <d,y>^2 / |y|
        d = np.asarray(self.vec)
        c = self.c
        dy = y @ d
        g = _inv_norm_jet(y, order)
        jet = _norm_jet(y, order)
        m0 = dy * dy
        jet[0] = jet[0] + c * m0 * g[0]
        if order >= 1:
            m1 = 2 * dy[..., None] * d
            jet[1] = jet[1] + c * (m1 * g[0][..., None] + m0[..., None] * g[1])
        if order >= 2:
            m2 = 2 * np.outer(d, d)
            out2 = (m2 * g[0][..., None, None]
                    + np.einsum("...i,...j->...ij", m1, g[1])
                    + np.einsum("...j,...i->...ij", m1, g[1])
                    + m0[..., None, None] * g[2])
            jet[2] = jet[2] + c * out2
        if order >= 3:
            out3 = (np.einsum("ij,...k->...ijk", m2, g[1])
                    + np.einsum("ik,...j->...ijk", m2, g[1])
                    + np.einsum("jk,...i->...ijk", m2, g[1])
                    + np.einsum("...i,...jk->...ijk", m1, g[2])
                    + np.einsum("...j,...ik->...ijk", m1, g[2])
                    + np.einsum("...k,...ij->...ijk", m1, g[2])
                    + m0[..., None, None, None] * g[3])
            jet[3] = jet[3] + c * out3
        return jet

    # -- pointwise evaluation ----------------------------------------------
    def value(self, x):
        x = check_unit(x)
        self._check_shape(x)
        F = self.extension_jet(x, 0)[0]
        if np.any(F <= 0):
            raise NonPositiveValue(f"F(x) <= 0 for {self.label} (min {np.min(F):.3e})")
        return F

    def sphere_gradient(self, x):
        x = check_unit(x)
        self._check_shape(x)
        if self.derivative_mode == "analytic":
            g = self.extension_jet(x, 1)[1]
            return g - np.sum(g * x, axis=-1, keepdims=True) * x
        frame = tangent_basis(x)
        eps = self.fd_step
        comps = []
        for i in range(self.dim):
            e = frame[..., i]
            fp = self.extension_jet(exp_map(x, eps * e), 0)[0]
            fm = self.extension_jet(exp_map(x, -eps * e), 0)[0]
            comps.append((fp - fm) / (2 * eps))
        return np.einsum("...ai,...i->...a", frame, np.stack(comps, axis=-1))

    def A_F(self, x, frame):
        """Matrix of ``D^2F + F 1`` at x in the given orthonormal tangent frame."""
        x = check_unit(x)
        self._check_shape(x)
        frame = np.asarray(frame, dtype=float)
        gram = np.einsum("...ai,...aj->...ij", frame, frame)
        if (np.max(np.abs(gram - np.eye(self.dim))) > FRAME_TOL
                or np.max(np.abs(np.einsum("...ai,...a->...i", frame, x))) > FRAME_TOL):
            raise NonOrthonormalFrame("frame is not an orthonormal basis of x^perp")
        if self.derivative_mode == "analytic":
            H = self.extension_jet(x, 2)[2]
            A = np.einsum("...ai,...ab,...bj->...ij", frame, H, frame)
            return 0.5 * (A + np.swapaxes(A, -1, -2))
        return self._A_F_fd(x, frame)

    def _A_F_fd(self, x, frame):
        # coordinate Hessian of F o exp_x in normal coordinates = intrinsic Hessian
        eps = self.fd_step
        n = self.dim

        def f(v):
            return self.extension_jet(exp_map(x, v), 0)[0]

        f0 = self.extension_jet(x, 0)[0]
        A = np.empty(x.shape[:-1] + (n, n))
        for i in range(n):
            ei = frame[..., i]
            A[..., i, i] = (f(eps * ei) - 2 * f0 + f(-eps * ei)) / eps ** 2
            for j in range(i + 1, n):
                ej = frame[..., j]
                val = (f(eps * (ei + ej)) - f(eps * (ei - ej))
                       - f(eps * (ej - ei)) + f(-eps * (ei + ej))) / (4 * eps ** 2)
                A[..., i, j] = A[..., j, i] = val
        return A + f0[..., None, None] * np.eye(n)

    def check_convexity(self, sample_level=1):
        """Minimum eigenvalue of A_F over a quasi-uniform sample of S^n."""
        if sample_level < 1:
            raise ValueError("sample_level must be >= 1")
        count = 100 * 4 ** (sample_level - 1)
        x = sample_sphere(self.dim, count)
        A = self.A_F(x, tangent_basis(x))
        eig = np.linalg.eigvalsh(A)[:, 0]
        k = int(np.argmin(eig))
        lo = float(eig[k])
        return ConvexityReport(count, lo, x[k].copy(), lo > 0)

    def wulff_point(self, x):
        """The Wulff map ``F(x) x + grad F(x)``."""
        x = check_unit(x)
        self._check_shape(x)
        rep = _cached_convexity(self)
        if not rep.passed:
            raise ConvexityViolation(
                f"{self.label} violates the convexity condition near {rep.argmin_point}",
                argmin=rep.argmin_point, min_eigenvalue=rep.min_eigenvalue_of_A_F)
        if self.derivative_mode == "analytic":
            return self.extension_jet(x, 1)[1]
        return self.value(x)[..., None] * x + self.sphere_gradient(x)

    def _check_shape(self, x):
        if x.shape[-1] != self.dim + 1:
            raise ValueError(f"expected points in R^{self.dim + 1}, got shape {x.shape}")


@functools.lru_cache(maxsize=None)
def _cached_convexity(model):
    return model.check_convexity(2)


# functional aliases mirroring the documented operation names
def eval_F(model, x):
    return model.value(x)


def eval_sphere_gradient(model, x):
    return model.sphere_gradient(x)


def eval_A_F(model, x, frame):
    return model.A_F(x, frame)


def check_convexity(model, sample_level=1):
    return model.check_convexity(sample_level)


def wulff_point(model, x):
    return model.wulff_point(x)
