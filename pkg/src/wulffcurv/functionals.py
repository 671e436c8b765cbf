"""Surface functionals, integral formulas and first-variation checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (build_grid, deform, frames, integrate, surface_divergence,
                       tangential_gradient, unit_normal)
from .curvature import bundle_for_frames
from .polynomial import Polynomial


# ---------------------------------------------------------------------------
# vector fields on the parameter sphere
# ---------------------------------------------------------------------------
class PolynomialVectorField:
    """W(q) = (poly_0(q), ..., poly_n(q))."""

    def __init__(self, polys, tag="polynomial"):
        self.polys = tuple(polys)
        self.tag = tag

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.stack([pol(q) for pol in self.polys], axis=-1)


def constant_field(a):
    a = np.asarray(a, dtype=float)

    def W(q):
        return np.broadcast_to(a, np.shape(q)).copy()

    W.tag = "constant"
    return W


def position_field(surface):
    def W(q):
        return surface.map(q)

    W.tag = "position"
    return W


class NormalField:
    """W = psi * nu for a scalar function psi of the parameter."""

    def __init__(self, surface, psi, tag="normal"):
        self.surface, self.psi, self.tag = surface, psi, tag

    def __call__(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        return np.asarray(self.psi(q))[..., None] * unit_normal(self.surface, q)


def random_polynomial(nvars, rng, degree=2, scale=1.0):
    """Random dense polynomial of total degree <= ``degree`` in the parameter."""
    terms = []
    for exps in _monomials(nvars, degree):
        terms.append((float(scale * rng.standard_normal()), exps))
    return Polynomial(tuple(terms), nvars)


def random_vector_field(n, seed, degree=2, scale=0.3):
    rng = np.random.default_rng(seed)
    return PolynomialVectorField([random_polynomial(n + 1, rng, degree, scale)
                                  for _ in range(n + 1)], tag=f"random(seed={seed})")


def _monomials(nvars, degree):
    out = []

    def rec(prefix, left):
        if len(prefix) == nvars:
            out.append(tuple(prefix))
            return
        for e in range(left + 1):
            rec(prefix + [e], left - e)

    rec([], degree)
    return out


@dataclass
class VariationField:
    psi: np.ndarray
    xi: np.ndarray
    tag: str = ""
    volume_preserving: bool = False


def variation_field(grid, W, tag=None):
    """Split W at the grid nodes into normal part psi and tangential part xi."""
    Wn = np.asarray(W(grid.nodes))
    psi = np.sum(Wn * grid.frames.nu, axis=-1)
    xi = Wn - psi[:, None] * grid.frames.nu
    vp = abs(integrate(grid, psi)) <= 1e-8 * grid.area
    return VariationField(psi, xi, tag or getattr(W, "tag", ""), bool(vp))


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------
def _F_nu(grid, model):
    if model is None:
        return np.ones(len(grid.weights))
    return model.value(grid.frames.nu)


def area_functional(grid, model, r):
    """Quadrature of F(nu) sigma_r over the surface."""
    if not 0 <= r <= grid.surface.n:
        raise ValueError("need 0 <= r <= n")
    b = grid.bundle(model)
    return integrate(grid, _F_nu(grid, model) * b.sigma[:, r])


def volume_functional(grid):
    """Algebraic enclosed volume with the inner normal (negative for convex bodies)."""
    fs = grid.frames
    return integrate(grid, np.sum(fs.X * fs.nu, axis=-1)) / (grid.surface.n + 1)


def minkowski_residual(grid, model, r, relative=False):
    """int (H_r F(nu) + H_{r+1} <X, nu>) dA, optionally divided by int |H_r F|."""
    n = grid.surface.n
    if not 0 <= r <= n - 1:
        raise ValueError("need 0 <= r <= n-1")
    b = grid.bundle(model)
    F = _F_nu(grid, model)
    support = np.sum(grid.frames.X * grid.frames.nu, axis=-1)
    res = integrate(grid, b.H[:, r] * F + b.H[:, r + 1] * support)
    if relative:
        return abs(res) / integrate(grid, np.abs(b.H[:, r] * F))
    return res


def euler_lagrange_residual(grid, model, r):
    """Area-weighted mean of (r+1) sigma_{r+1} and the sup deviation from it."""
    b = grid.bundle(model)
    q = (r + 1) * b.sigma_at(r + 1)
    lam_fit = integrate(grid, q) / grid.area
    return lam_fit, float(np.max(np.abs(q - lam_fit)))


@dataclass
class FunctionalReport:
    surface: str
    F: str
    r: int
    value: float
    volume: float
    Lambda_fit: float
    el_residual_sup: float
    minkowski_residuals: list = field(default_factory=list)

    def as_dict(self):
        return dict(surface=self.surface, F=self.F, r=self.r, value=self.value,
                    volume=self.volume, Lambda_fit=self.Lambda_fit,
                    el_residual_sup=self.el_residual_sup,
                    minkowski_residuals=list(self.minkowski_residuals))


def functional_report(grid, model, r):
    lam_fit, sup = euler_lagrange_residual(grid, model, r)
    mink = [minkowski_residual(grid, model, k, relative=True) for k in range(grid.surface.n)]
    label = model.label if model is not None else "const:c=1"
    return FunctionalReport(grid.surface.label, label, r, area_functional(grid, model, r),
                            volume_functional(grid), lam_fit, sup, mink)


# ---------------------------------------------------------------------------
# first variation
# ---------------------------------------------------------------------------
def _mismatch(a, b, scale):
    """|a - b| relative to the larger value, floored at 1e-3 * scale.

    ``scale`` is the L1 size of the integrand, so the floor only matters when
    the integral cancels almost completely (translations, for instance).
    """
    return abs(a - b) / max(abs(a), abs(b), 1e-3 * abs(scale), 1e-300)


@dataclass
class FirstVariation:
    r: int
    fd_derivative: float
    formula_value: float
    mismatch: float
    volume_fd: float
    volume_formula: float
    volume_mismatch: float
    lagrangian_fd: float
    Lambda: float
    scale: float

    def as_dict(self):
        return dict(self.__dict__)


def _richardson_first(values, h):
    """values at (-h, h, -h/2, h/2) -> extrapolated derivative."""
    fm, fp, fm2, fp2 = values
    d1 = (fp - fm) / (2 * h)
    d2 = (fp2 - fm2) / h
    return (4 * d2 - d1) / 3


def first_variation_sweep(grid, model, W, rs=None, h=1e-3, Lambda=None):
    """Check the first-variation formula for every r in ``rs`` at once."""
    n = grid.surface.n
    rs = list(range(n)) if rs is None else list(rs)
    surf = grid.surface
    vals = {r: [] for r in rs}
    vols = []
    for t in (-h, h, -h / 2, h / 2):
        g = build_grid(deform(surf, W, t), grid.level)
        for r in rs:
            vals[r].append(area_functional(g, model, r))
        vols.append(volume_functional(g))
    vf = variation_field(grid, W)
    b = grid.bundle(model)
    vol_fd = _richardson_first(vols, h)
    vol_formula = integrate(grid, vf.psi)
    out = []
    vol_scale = integrate(grid, np.abs(vf.psi))
    for r in rs:
        fd = _richardson_first(vals[r], h)
        formula = -(r + 1) * integrate(grid, vf.psi * b.sigma_at(r + 1))
        scale = (r + 1) * integrate(grid, np.abs(vf.psi * b.sigma_at(r + 1)))
        lam = euler_lagrange_residual(grid, model, r)[0] if Lambda is None else Lambda
        out.append(FirstVariation(
            r, fd, formula, _mismatch(fd, formula, scale),
            vol_fd, vol_formula, _mismatch(vol_fd, vol_formula, vol_scale),
            fd + lam * vol_fd, lam, scale))
    return out


def first_variation_check(grid, model, r, W, h=1e-3):
    """Finite-difference derivative of A_r along X + tW versus the closed formula."""
    return first_variation_sweep(grid, model, W, [r], h)[0]


# ---------------------------------------------------------------------------
# divergence identities and the variation of sigma_r
# ---------------------------------------------------------------------------
def _pointwise(surface, model, q):
    fs = frames(surface, q)
    return fs, bundle_for_frames(fs, model)


def _apply_tangent(fs, M, v):
    """Ambient vector E M E^T v."""
    comps = np.einsum("...ai,...a->...i", fs.E, v)
    return np.einsum("...ai,...ij,...j->...a", fs.E, M, comps)


def _gradF_nu(model, nu, like):
    if model is None:
        return np.zeros_like(like)
    return model.sphere_gradient(nu)


def _F_at(model, nu):
    return np.ones(nu.shape[:-1]) if model is None else model.value(nu)


def divergence_lemma_residuals(grid, model, r, step=None, accuracy=2):
    """Pointwise residuals of the two divergence identities for P_r.

    F-version:  DIV(P_r grad F(nu)) - F(nu) tr(P_r h) + (r+1) sigma_{r+1}
    X-version:  DIV(P_r X^T)       - <X,nu> tr(P_r h) - (n-r) sigma_r

    ``tr(P_r dnu) = -tr(P_r h)`` with the inner-normal convention.  The
    divergence is taken with central differences of the given accuracy and a
    step equal to the grid spacing unless ``step`` is given.
    """
    surf = grid.surface
    n = surf.n
    step = grid.spacing if step is None else step

    def VF(q):
        fs, b = _pointwise(surf, model, q)
        return _apply_tangent(fs, b.P[:, r], _gradF_nu(model, fs.nu, fs.X))

    def VX(q):
        fs, b = _pointwise(surf, model, q)
        return _apply_tangent(fs, b.P[:, r], fs.X)

    nodes = grid.nodes
    fs = grid.frames
    b = grid.bundle(model)
    trPh = np.einsum("...ij,...ji->...", b.P[:, r], b.h)
    divF = surface_divergence(surf, VF, nodes, step, accuracy)
    divX = surface_divergence(surf, VX, nodes, step, accuracy)
    F = _F_at(model, fs.nu)
    support = np.sum(fs.X * fs.nu, axis=-1)
    resF = divF - F * trPh + (r + 1) * b.sigma_at(r + 1)
    resX = divX - support * trPh - (n - r) * b.sigma[:, r]
    return resF, resX


def ir_residuals(grid, model, r, step=None, accuracy=2):
    """Pointwise residuals of the I_r identities for f = F(nu) and f = <X, nu>.

    ``I_r[f] = div(T_r grad f) + f tr(T_r h h)``, all derivatives by nested
    central differences with the given step (default: grid spacing).
    """
    surf = grid.surface
    step = grid.spacing if step is None else step

    def fF(q):
        return _F_at(model, unit_normal(surf, q))

    def fX(q):
        return np.sum(surf.map(q) * unit_normal(surf, q), axis=-1)

    def sig(q):
        return _pointwise(surf, model, q)[1].sigma_at(r + 1)

    def flux(f):
        def Y(q):
            fs, b = _pointwise(surf, model, q)
            g = tangential_gradient(surf, f, q, step, accuracy, ambient=True)
            return _apply_tangent(fs, b.T[:, r], g)
        return Y

    nodes = grid.nodes
    fs = grid.frames
    b = grid.bundle(model)
    trThh = np.einsum("...ij,...jk,...ki->...", b.T[:, r], b.h, b.h)
    grad_sig = tangential_gradient(surf, sig, nodes, step, accuracy, ambient=True)
    F = _F_at(model, fs.nu)
    support = np.sum(fs.X * fs.nu, axis=-1)
    I_F = surface_divergence(surf, flux(fF), nodes, step, accuracy) + F * trThh
    I_X = surface_divergence(surf, flux(fX), nodes, step, accuracy) + support * trThh
    gF = _gradF_nu(model, fs.nu, fs.X)
    Xt = fs.X - support[:, None] * fs.nu
    rhs_F = (-np.sum(grad_sig * gF, axis=-1)
             + b.sigma[:, 1] * b.sigma_at(r + 1) - (r + 2) * b.sigma_at(r + 2))
    rhs_X = -np.sum(grad_sig * Xt, axis=-1) - (r + 1) * b.sigma_at(r + 1)
    return I_F - rhs_F, I_X - rhs_X


def sigma_variation_check(grid, model, r, psi, chi=None, h=1e-3, grad_step=1e-3):
    """Weak check of the pointwise variation of sigma_r under X + t psi nu.

    Compares the finite-difference derivative of ``int chi sigma_r(t) dA_0``
    (nodes and weights frozen at t = 0) with
    ``int (-<T_{r-1} grad psi, grad chi> + chi psi tr(T_{r-1} h h)) dA``.
    Returns ``(fd, weak, mismatch)``.
    """
    if not 1 <= r <= grid.surface.n:
        raise ValueError("need 1 <= r <= n")
    surf = grid.surface
    if chi is None:
        def chi(q):
            return np.ones(len(np.atleast_2d(q)))
    W = NormalField(surf, psi)
    chi_n = chi(grid.nodes)
    vals = []
    for t in (-h, h, -h / 2, h / 2):
        fs = frames(deform(surf, W, t), grid.nodes)
        vals.append(integrate(grid, chi_n * bundle_for_frames(fs, model).sigma[:, r]))
    fd = _richardson_first(vals, h)
    b = grid.bundle(model)
    Tm = b.T[:, r - 1]
    gpsi = tangential_gradient(surf, psi, grid.nodes, grad_step)
    gchi = tangential_gradient(surf, chi, grid.nodes, grad_step)
    trThh = np.einsum("...ij,...jk,...ki->...", Tm, b.h, b.h)
    weak = integrate(grid, -np.einsum("...i,...ij,...j->...", gchi, Tm, gpsi)
                     + chi_n * psi(grid.nodes) * trThh)
    scale = integrate(grid, np.abs(chi_n * psi(grid.nodes) * trThh))
    return fd, weak, _mismatch(fd, weak, scale)


def binom(n, k):
    return math.comb(n, k) if 0 <= k <= n else 0
