"""Closed hypersurfaces given as maps of the unit sphere, with frames and quadrature.

Every surface is a map ``G: S^n -> R^{n+1}`` (n = 1 curves, n = 2 surfaces).
A "parameter" is a point ``p`` of S^n.  Local derivatives are taken in the
normal-coordinate chart ``u -> exp_p(u_1 t_1 + ... + u_n t_n)`` built on the
canonical tangent basis at p, so no pole or seam of a lat-long chart ever
enters a derivative.

Conventions: the stored normal is the *inner* normal, ``dnu = -h`` in the
orthonormal frame, so the unit sphere has ``h = I`` and negative algebraic
volume.
"""
from __future__ import annotations

import copy
import functools
from dataclasses import dataclass, field

import numpy as np

from ._sphere import exp_map, tangent_basis
from .anisotropy import AnisotropyModel, _cached_convexity
from .errors import (ConvexityViolation, DegenerateParametrization, ImmersionLoss,
                     NonTangentField, ProjectionFailure, SizeMismatch)
from .polynomial import Polynomial

COND_LIMIT = 1e8
CHUNK = 20000

# central difference stencils: accuracy -> (offsets, first, second)
_STENCILS = {
    2: ((-1, 0, 1), (-0.5, 0.0, 0.5), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 0, 1, 2), (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
        (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)),
    6: ((-3, -2, -1, 0, 1, 2, 3), (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60),
        (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90)),
}


# ---------------------------------------------------------------------------
# chart finite differences
# ---------------------------------------------------------------------------
def chart_derivatives(fn, p, step, accuracy=6, second=False):
    """Derivatives of ``fn`` in the normal-coordinate chart at each p.

    ``fn`` maps points of S^n (shape (N, n+1)) to arrays of shape (N, ...).
    Returns ``(f0, D1)`` or ``(f0, D1, D2)`` with the chart index appended
    last: ``D1[..., i]`` and ``D2[..., i, j]``.  Mixed second derivatives are
    recovered by polarization along the diagonals ``(t_i +- t_j)/sqrt(2)``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    offsets, c1, c2 = _STENCILS[accuracy]
    T = tangent_basis(p)
    n = T.shape[-1]
    f0 = np.asarray(fn(p))

    def along(w):
        vals = [f0 if k == 0 else np.asarray(fn(exp_map(p, (k * step) * w))) for k in offsets]
        d1 = sum(c * v for c, v in zip(c1, vals) if c != 0.0) / step
        d2 = sum(c * v for c, v in zip(c2, vals)) / step ** 2 if second else None
        return d1, d2

    firsts, seconds = [], {}
    for i in range(n):
        d1, d2 = along(T[..., i])
        firsts.append(d1)
        seconds[i, i] = d2
    D1 = np.stack(firsts, axis=-1)
    if not second:
        return f0, D1
    D2 = np.empty(f0.shape + (n, n))
    for i in range(n):
        D2[..., i, i] = seconds[i, i]
        for j in range(i + 1, n):
            _, dp = along((T[..., i] + T[..., j]) / np.sqrt(2))
            _, dm = along((T[..., i] - T[..., j]) / np.sqrt(2))
            D2[..., i, j] = D2[..., j, i] = 0.5 * (dp - dm)
    return f0, D1, D2


def _chunked(func, p, *args, **kw):
    """Apply ``func(p_chunk, ...)`` over chunks of p and concatenate tuples."""
    p = np.atleast_2d(p)
    if len(p) <= CHUNK:
        return func(p, *args, **kw)
    parts = [func(p[i:i + CHUNK], *args, **kw) for i in range(0, len(p), CHUNK)]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(z, axis=0) for z in zip(*parts))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------
class Surface:
    """Base class: a closed hypersurface parametrized over S^n."""

    n: int = 2
    derivative_mode = "analytic"
    fd_step = 1e-2
    label = "surface"

    def map(self, p):
        raise NotImplementedError

    def ambient_jet(self, p, order):
        """``[G, DG, D2G]`` of an extension of the map to R^{n+1}."""
        raise NotImplementedError

    def __call__(self, p):
        return self.map(p)

    def with_mode(self, mode, step=None):
        """Shallow copy using ``"analytic"`` or ``"fd"`` chart derivatives."""
        if mode not in ("analytic", "fd"):
            raise ValueError(f"unknown derivative mode {mode!r}")
        other = copy.copy(self)
        other.derivative_mode = mode
        if step is not None:
            other.fd_step = float(step)
        return other

    @functools.cached_property
    def orientation(self):
        """+1 or -1 so that (orientation * raw normal) is the inner normal."""
        nodes, w = sphere_quadrature(self.n, 1)
        X, Xu = chart_jets(self, nodes, order=1)
        N = _raw_normal(Xu)
        J = np.sqrt(np.linalg.det(np.einsum("...ai,...aj->...ij", Xu, Xu)))
        vol = np.sum(w * J * np.sum(X * N, axis=-1)) / (self.n + 1)
        return -1.0 if vol > 0 else 1.0

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class Sphere(Surface):
    def __init__(self, R=1.0, n=2):
        if R <= 0:
            raise ValueError("radius must be positive")
        self.R, self.n = float(R), int(n)
        self.label = f"sphere:R={self.R:g}" + ("" if n == 2 else f",n={n}")

    def map(self, p):
        return self.R * np.asarray(p, dtype=float)

    def ambient_jet(self, p, order):
        p = np.asarray(p, dtype=float)
        m = self.n + 1
        out = [self.R * p, np.broadcast_to(self.R * np.eye(m), p.shape[:-1] + (m, m))]
        if order >= 2:
            out.append(np.zeros(p.shape[:-1] + (m, m, m)))
        return out[: order + 1]


class Ellipsoid(Surface):
    def __init__(self, axes):
        axes = tuple(float(a) for a in axes)
        if min(axes) <= 0:
            raise ValueError("ellipsoid axes must be positive")
        self.axes, self.n = axes, len(axes) - 1
        self.label = "ellipsoid:" + ",".join(f"{k}={v:g}" for k, v in zip("abcd", axes))

    def map(self, p):
        return np.asarray(p, dtype=float) * np.asarray(self.axes)

    def ambient_jet(self, p, order):
        p = np.asarray(p, dtype=float)
        m = self.n + 1
        D = np.diag(self.axes)
        out = [p * np.asarray(self.axes), np.broadcast_to(D, p.shape[:-1] + (m, m))]
        if order >= 2:
            out.append(np.zeros(p.shape[:-1] + (m, m, m)))
        return out[: order + 1]


class WulffSurface(Surface):
    """The Wulff shape, parametrized by x -> F(x) x + grad F(x)."""

    def __init__(self, model: AnisotropyModel):
        rep = _cached_convexity(model)
        if not rep.passed:
            raise ConvexityViolation(f"{model.label} is not convex", argmin=rep.argmin_point,
                                     min_eigenvalue=rep.min_eigenvalue_of_A_F)
        self.model, self.n = model, model.dim
        self.derivative_mode = model.derivative_mode
        self.label = f"wulff:F={model.label}"

    def map(self, p):
        return self.model.wulff_point(p)

    def ambient_jet(self, p, order):
        # the gradient of the homogeneous extension is a degree-0 extension of the Wulff map
        return self.model.extension_jet(np.asarray(p, dtype=float), order + 1)[1:]


class RadialGraph(Surface):
    """X(p) = rho(p) p with rho = 1 + sum_k eps_k poly_k(p)."""

    def __init__(self, eps, polys, n=2):
        if len(eps) != len(polys):
            raise ValueError("eps and poly lists must have equal length")
        self.n = int(n)
        self.eps = tuple(float(e) for e in eps)
        self.polys = tuple(q if isinstance(q, Polynomial) else Polynomial.parse(q, self.n + 1)
                           for q in polys)
        self.label = ("radial:eps=[" + ",".join(f"{e:g}" for e in self.eps) + "],poly=["
                      + ",".join(str(q) for q in self.polys) + "]")

    def rho_jet(self, p, order):
        m = self.n + 1
        p = np.asarray(p, dtype=float)
        out = [np.ones(p.shape[:-1]), np.zeros(p.shape[:-1] + (m,)),
               np.zeros(p.shape[:-1] + (m, m))][: order + 1]
        for e, q in zip(self.eps, self.polys):
            for k, t in enumerate(q.jet(p, order)):
                out[k] = out[k] + e * t
        if np.any(out[0] <= 0):
            raise ProjectionFailure("radial function rho <= 0 along some ray")
        return out

    def map(self, p):
        p = np.asarray(p, dtype=float)
        return self.rho_jet(p, 0)[0][..., None] * p

    def ambient_jet(self, p, order):
        p = np.asarray(p, dtype=float)
        m = self.n + 1
        eye = np.eye(m)
        rj = self.rho_jet(p, order)
        out = [rj[0][..., None] * p]
        if order >= 1:
            out.append(rj[0][..., None, None] * eye + np.einsum("...a,...b->...ab", p, rj[1]))
        if order >= 2:
            out.append(np.einsum("...c,ab->...abc", rj[1], eye)
                       + np.einsum("...b,ac->...abc", rj[1], eye)
                       + np.einsum("...a,...bc->...abc", p, rj[2]))
        return out


class Transformed(Surface):
    """``scale * base + translate``."""

    def __init__(self, base: Surface, scale=1.0, translate=None):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.base, self.n = base, base.n
        self.scale = float(scale)
        self.translate = np.zeros(base.n + 1) if translate is None else np.asarray(translate, float)
        self.derivative_mode = base.derivative_mode
        self.label = base.label
        if self.scale != 1.0:
            self.label += f"*scale={self.scale:g}"
        if np.any(self.translate):
            self.label += "*translate=[" + ",".join(f"{v:g}" for v in self.translate) + "]"

    def map(self, p):
        return self.scale * self.base.map(p) + self.translate

    def ambient_jet(self, p, order):
        jet = self.base.ambient_jet(p, order)
        return [self.scale * jet[0] + self.translate] + [self.scale * t for t in jet[1:]]

    @functools.cached_property
    def orientation(self):
        return self.base.orientation


class Deformed(Surface):
    """``X + t W`` for a vector field W given as a function of the parameter.

    Derivatives always come from chart finite differences.
    """

    derivative_mode = "fd"

    def __init__(self, base: Surface, W, t, fd_step=1e-2):
        self.base, self.W, self.t = base, W, float(t)
        self.n = base.n
        self.fd_step = fd_step
        self.label = f"{base.label}+{self.t:g}W"

    def map(self, p):
        p = np.asarray(p, dtype=float)
        return self.base.map(p) + self.t * np.asarray(self.W(p))

    @functools.cached_property
    def orientation(self):
        return self.base.orientation


def deform(surface, W, t, fd_step=1e-2):
    """The surface ``X + t W``; its frames use finite differences."""
    return Deformed(surface, W, t, fd_step)


# ---------------------------------------------------------------------------
# jets, frames
# ---------------------------------------------------------------------------
def chart_jets(surface, p, order=2):
    """``X``, ``X_u`` (…, n+1, n) and ``X_uu`` (…, n+1, n, n) in the chart at p."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if surface.derivative_mode == "analytic":
        T = tangent_basis(p)
        jet = surface.ambient_jet(p, order)
        X, DG = jet[0], jet[1]
        Xu = np.einsum("...ab,...bi->...ai", DG, T)
        if order == 1:
            return X, Xu
        n = T.shape[-1]
        Xuu = (np.einsum("...abc,...bi,...cj->...aij", jet[2], T, T)
               - np.einsum("...ab,...b->...a", DG, p)[..., None, None] * np.eye(n))
        return X, Xu, Xuu
    return _chunked(_fd_jets, p, surface, order)


def _fd_jets(p, surface, order):
    out = chart_derivatives(surface.map, p, surface.fd_step, 6, second=(order >= 2))
    return out


def _raw_normal(Xu):
    if Xu.shape[-2] == 3:
        N = np.cross(Xu[..., 0], Xu[..., 1])
    else:
        N = np.stack([Xu[..., 1, 0], -Xu[..., 0, 0]], axis=-1)
    return N / np.linalg.norm(N, axis=-1, keepdims=True)


@dataclass
class FrameSet:
    """Per-point geometry for a batch of parameters (leading axis = point)."""

    p: np.ndarray      # parameters on S^n
    X: np.ndarray      # positions
    nu: np.ndarray     # inner unit normals
    E: np.ndarray      # orthonormal tangent frames, columns e_i
    R: np.ndarray      # X_u = E R (upper triangular, positive diagonal)
    h: np.ndarray      # second fundamental form in the frame E
    J: np.ndarray      # area element relative to the sphere

    def __len__(self):
        return len(self.p)

    def take(self, idx):
        return FrameSet(*(getattr(self, f)[idx] for f in
                          ("p", "X", "nu", "E", "R", "h", "J")))


@dataclass
class PointFrame:
    u: np.ndarray
    position: np.ndarray
    nu: np.ndarray
    frame: np.ndarray
    h: np.ndarray
    A: np.ndarray
    s: np.ndarray


def _frames_from_jets(X, Xu, Xuu, orientation, p, deformed):
    sv = np.linalg.svd(Xu, compute_uv=False)
    cond = sv[..., 0] / np.where(sv[..., -1] > 0, sv[..., -1], np.nan)
    cond = np.where(np.isfinite(cond), cond, np.inf)
    if np.any(cond > COND_LIMIT):
        exc = ImmersionLoss if deformed else DegenerateParametrization
        raise exc(f"tangent vectors nearly dependent (condition number {np.max(cond):.3e})")
    nu = orientation * _raw_normal(Xu)
    Q, R = np.linalg.qr(Xu)
    sign = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    Q = Q * sign[..., None, :]
    R = R * sign[..., :, None]
    b = np.einsum("...aij,...a->...ij", Xuu, nu)
    Rinv = np.linalg.inv(R)
    h = np.einsum("...ki,...kl,...lj->...ij", Rinv, b, Rinv)
    J = np.abs(np.prod(np.diagonal(R, axis1=-2, axis2=-1), axis=-1))
    return FrameSet(p, X, nu, Q, R, h, J)


def frames(surface, p):
    """Batched frames at parameters p (shape (N, n+1))."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    X, Xu, Xuu = chart_jets(surface, p, order=2)
    return _frames_from_jets(X, Xu, Xuu, surface.orientation, p, isinstance(surface, Deformed))


def unit_normal(surface, p):
    """Inner unit normal from first derivatives only."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    X, Xu = chart_jets(surface, p, order=1)
    return surface.orientation * _raw_normal(Xu)


def frame_at(surface, u, model=None):
    """Full :class:`PointFrame` at one parameter; A and s need an anisotropy."""
    u = np.asarray(u, dtype=float)
    fs = frames(surface, u[None, :])
    nu, E = fs.nu[0], fs.E[0]
    if model is None:
        A = np.eye(surface.n)
    else:
        A = model.A_F(nu / np.linalg.norm(nu), E)
    return PointFrame(u, fs.X[0], nu, E, fs.h[0], A, A @ fs.h[0])


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------
def grid_shape(n, level):
    if n == 1:
        return (8 * 2 ** level,)
    return (4 * 2 ** level, 8 * 2 ** level)


def sphere_quadrature(n, level):
    """Nodes on S^n and sphere-area weights (Gauss-Legendre x trapezoid for n=2)."""
    if level < 1:
        raise ValueError("level must be >= 1")
    if n == 1:
        (m,) = grid_shape(1, level)
        t = 2 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(m, 2 * np.pi / m)
    if n != 2:
        raise ValueError("quadrature grids exist for n = 1, 2 only")
    nt, nphi = grid_shape(2, level)
    x, wx = np.polynomial.legendre.leggauss(nt)
    theta = 0.5 * np.pi * (x + 1)
    wt = 0.5 * np.pi * wx
    phi = 2 * np.pi * np.arange(nphi) / nphi
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    nodes = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1)
    w = (wt * np.sin(theta))[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]
    return nodes.reshape(-1, 3), w.reshape(-1)


@dataclass
class QuadratureGrid:
    surface: Surface
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    frames: FrameSet
    _bundles: dict = field(default_factory=dict, repr=False)

    @property
    def spacing(self):
        """Angular node spacing; default finite-difference step for convergence studies."""
        return np.pi / (4 * 2 ** self.level)

    @property
    def area(self):
        return integrate(self, np.ones(len(self.weights)))

    def bundle(self, model=None):
        from .curvature import bundle_for_frames

        key = model
        if key not in self._bundles:
            self._bundles[key] = bundle_for_frames(self.frames, model)
        return self._bundles[key]


def build_grid(surface, level):
    nodes, w = sphere_quadrature(surface.n, level)
    fs = _chunked(lambda q: _frameset_tuple(surface, q), nodes)
    fs = FrameSet(*fs)
    return QuadratureGrid(surface, level, nodes, w * fs.J, fs)


def _frameset_tuple(surface, q):
    f = frames(surface, q)
    return (f.p, f.X, f.nu, f.E, f.R, f.h, f.J)


def integrate(grid, f):
    """Quadrature sum; numpy's pairwise summation over node order."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.weights.shape:
        raise SizeMismatch(f"field has shape {f.shape}, grid has {grid.weights.shape}")
    return float(np.sum(grid.weights * f))


def orient_check(surface, grid=None):
    """Algebraic volume ``1/(n+1) * int <X, nu>``; negative for the inner normal."""
    if grid is None:
        grid = build_grid(surface, 3)
    fs = grid.frames
    return integrate(grid, np.sum(fs.X * fs.nu, axis=-1)) / (surface.n + 1)


# ---------------------------------------------------------------------------
# tangential calculus
# ---------------------------------------------------------------------------
def _frames_first_order(surface, p):
    X, Xu = chart_jets(surface, p, order=1)
    Q, R = np.linalg.qr(Xu)
    sign = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    return X, Q * sign[..., None, :], R * sign[..., :, None], surface.orientation * _raw_normal(Xu)


def tangential_gradient(surface, field, u, step=1e-3, accuracy=6, ambient=False):
    """Surface gradient of a scalar field given as a function of the parameter.

    Returned as components in the frame of :func:`frames` (or as an ambient
    vector with ``ambient=True``).  Batched over u.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    _, E, R, _ = _frames_first_order(surface, u)
    _, fu = chart_derivatives(field, u, step, accuracy)
    comps = np.linalg.solve(np.swapaxes(R, -1, -2), fu[..., None])[..., 0]
    if ambient:
        return np.einsum("...ai,...i->...a", E, comps)
    return comps


def surface_divergence(surface, V, u, step=1e-3, accuracy=6, tangent_tol=1e-8):
    """Divergence on the surface of a tangent vector field V(parameter) -> R^{n+1}."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    _, E, R, nu = _frames_first_order(surface, u)
    V0, Vu = chart_derivatives(V, u, step, accuracy)
    off = np.abs(np.sum(V0 * nu, axis=-1))
    if np.max(off) > tangent_tol:
        raise NonTangentField(f"field has normal component {np.max(off):.3e}")
    # directional derivative along e_i is V_u R^{-1} e_i
    DV = np.einsum("...ak,...ki->...ai", Vu, np.linalg.inv(R))
    return np.einsum("...ai,...ai->...", E, DV)
