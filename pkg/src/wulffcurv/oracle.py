"""Independent brute-force cross-checks.

The oracle side of every check here avoids the main-path chart, frame,
quadrature and curvature code: curves are handled by FFT differentiation in
arc-length form, surfaces through a latitude/longitude chart with cross-product
normals, and symmetric functions by explicit sums.  Only the surface map, the
anisotropy values and (for the comparison) main-path results are shared.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .functionals import area_functional, minkowski_residual, volume_functional
from .geometry import (build_grid, frames, integrate, surface_divergence,
                       tangential_gradient, unit_normal)


@dataclass
class OracleReport:
    name: str
    digest: str
    oracle: dict
    main: dict
    deviation: float
    tolerance: float
    passed: bool

    def as_dict(self):
        return dict(name=self.name, digest=self.digest, oracle=self.oracle, main=self.main,
                    deviation=self.deviation, tolerance=self.tolerance, passed=self.passed)


def _digest(*parts):
    text = json.dumps([str(p) for p in parts])
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _report(name, inputs, oracle, main, deviation, tol):
    return OracleReport(name, _digest(*inputs), {k: float(v) for k, v in oracle.items()},
                        {k: float(v) for k, v in main.items()}, float(deviation), tol,
                        bool(deviation <= tol))


def _rel(a, b, floor=1e-12):
    return abs(a - b) / max(abs(a), abs(b), floor)


# ---------------------------------------------------------------------------
# plane curves
# ---------------------------------------------------------------------------
def _fft_derivative(values, order):
    m = values.shape[0]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0 if order % 2 else k[m // 2]
    spec = np.fft.fft(values, axis=0)
    mult = (1j * k) ** order
    return np.real(np.fft.ifft(mult[:, None] * spec, axis=0))


def _F_angle_jet(model, beta, step=1e-3):
    """F and d^2F/dbeta^2 along the unit circle from values only (6th-order differences)."""
    def f(b):
        return np.asarray(model.value(np.column_stack([np.cos(b), np.sin(b)])))

    c = (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90)
    f0 = f(beta)
    d2 = sum(ck * f(beta + k * step) for ck, k in zip(c, range(-3, 4))) / step ** 2
    return f0, d2


def curve_case(surface, model=None, r=0, level=5, tol=1e-8):
    """Arc-length recomputation of the n = 1 quantities for a closed plane curve.

    Oracle: FFT derivatives of X(theta), turning-direction normal, curvature
    kappa = <X'', nu>/|X'|^2, and s = (F'' + F)(nu) kappa.  Compared with the
    main path on the grid of the same level (whose nodes coincide).
    """
    if surface.n != 1:
        raise ValueError("curve_case needs an n = 1 curve")
    if r != 0:
        raise ValueError("curve_case covers r = 0")
    grid = build_grid(surface, level)
    m = len(grid.weights)
    theta = 2 * np.pi * np.arange(m) / m
    X = surface.map(np.column_stack([np.cos(theta), np.sin(theta)]))
    X1 = _fft_derivative(X, 1)
    X2 = _fft_derivative(X, 2)
    speed = np.linalg.norm(X1, axis=1)
    tangent = X1 / speed[:, None]
    left = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    shoelace = 0.5 * np.sum(X[:, 0] * X1[:, 1] - X[:, 1] * X1[:, 0]) * 2 * np.pi / m
    nu = left if shoelace > 0 else -left
    kappa = np.sum(X2 * nu, axis=1) / speed ** 2
    if model is None:
        F, AF = np.ones(m), np.ones(m)
    else:
        beta = np.arctan2(nu[:, 1], nu[:, 0])
        F, d2 = _F_angle_jet(model, beta)
        AF = F + d2
    s = AF * kappa
    ds = speed * 2 * np.pi / m
    area0 = np.sum(F * ds)
    support = np.sum(X * nu, axis=1)
    vol = 0.5 * np.sum(support * ds)
    mink = np.sum((F + s * support) * ds)
    mink_rel = abs(mink) / np.sum(np.abs(F) * ds)

    b = grid.bundle(model)
    s_main = b.s[:, 0, 0]
    main = dict(area=area_functional(grid, model, 0), volume=volume_functional(grid),
                minkowski=minkowski_residual(grid, model, 0, relative=True),
                sigma1_min=np.min(b.sigma[:, 1]), sigma1_max=np.max(b.sigma[:, 1]))
    oracle = dict(area=area0, volume=vol, minkowski=mink_rel,
                  sigma1_min=np.min(s), sigma1_max=np.max(s))
    pointwise = np.max(np.abs(s - s_main)) / max(1.0, np.max(np.abs(s)))
    dev = max(_rel(area0, main["area"]), _rel(vol, main["volume"]), mink_rel,
              main["minkowski"], pointwise)
    label = model.label if model is not None else "const:c=1"
    return _report("curve_case", (surface.label, label, r, level), oracle, main, dev, tol)


# ---------------------------------------------------------------------------
# variations of the normal and of the area element
# ---------------------------------------------------------------------------
def _oracle_normal(mapping, u, ref, step=1e-4):
    """Unit normal of ``mapping`` at parameters u from great-circle differences.

    The sign is taken to agree with ``ref``.
    """
    u = np.atleast_2d(u)
    n1 = u.shape[1]
    basis = []
    for k in range(n1):
        e = np.zeros(n1)
        e[k] = 1.0
        basis.append(np.broadcast_to(e, u.shape))
    # Gram-Schmidt of the coordinate axes against u, keeping the two best
    cand = [b - np.sum(b * u, axis=1, keepdims=True) * u for b in basis]
    order = np.argsort(-np.stack([np.linalg.norm(c, axis=1) for c in cand]), axis=0)
    dirs = []
    for j in range(n1 - 1):
        d = np.stack([cand[order[j, i]][i] for i in range(len(u))])
        for prev in dirs:
            d = d - np.sum(d * prev, axis=1, keepdims=True) * prev
        dirs.append(d / np.linalg.norm(d, axis=1, keepdims=True))
    derivs = []
    for d in dirs:
        def pt(s):
            q = u + s * d
            return mapping(q / np.linalg.norm(q, axis=1, keepdims=True))
        derivs.append((8 * (pt(step) - pt(-step)) - (pt(2 * step) - pt(-2 * step))) / (12 * step))
    if n1 == 3:
        N = np.cross(derivs[0], derivs[1])
    else:
        N = np.column_stack([derivs[0][:, 1], -derivs[0][:, 0]])
    N = N / np.linalg.norm(N, axis=1, keepdims=True)
    return N * np.sign(np.sum(N * ref, axis=1))[:, None]


def gauss_map_variation_check(surface, W, u, h=1e-4, tol=1e-6):
    """d/dt nu_t at fixed parameters versus -grad psi + dnu(xi)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    nu0 = unit_normal(surface, u)

    def normal_at(t):
        return _oracle_normal(lambda q: surface.map(q) + t * np.asarray(W(q)), u, nu0)

    fd = (8 * (normal_at(h) - normal_at(-h)) - (normal_at(2 * h) - normal_at(-2 * h))) / (12 * h)
    fs = frames(surface, u)
    Wu = np.asarray(W(u))
    psi = np.sum(Wu * fs.nu, axis=1)
    xi = Wu - psi[:, None] * fs.nu

    def psi_fn(q):
        return np.sum(np.asarray(W(q)) * unit_normal(surface, q), axis=-1)

    grad_psi = tangential_gradient(surface, psi_fn, u, 1e-3, ambient=True)
    xi_c = np.einsum("...ai,...a->...i", fs.E, xi)
    dnu_xi = -np.einsum("...ai,...ij,...j->...a", fs.E, fs.h, xi_c)
    formula = -grad_psi + dnu_xi
    dev = np.max(np.linalg.norm(fd - formula, axis=1)) / max(1.0, np.max(np.abs(formula)))
    oracle = dict(max_abs=np.max(np.abs(fd)))
    main = dict(max_abs=np.max(np.abs(formula)))
    return _report("gauss_map_variation", (surface.label, getattr(W, "tag", "W"), u.tolist()),
                   oracle, main, dev, tol)


def _latlong_area(mapping, nt=64, nphi=128, step=1e-5):
    x, wx = np.polynomial.legendre.leggauss(nt)
    theta = 0.5 * np.pi * (x + 1)
    wt = 0.5 * np.pi * wx
    phi = 2 * np.pi * np.arange(nphi) / nphi
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    TH, PH = TH.ravel(), PH.ravel()

    def G(th, ph):
        return mapping(np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                                        np.cos(th)]))

    def d(fun):
        return (8 * (fun(step) - fun(-step)) - (fun(2 * step) - fun(-2 * step))) / (12 * step)

    Xt = d(lambda e: G(TH + e, PH))
    Xp = d(lambda e: G(TH, PH + e))
    dens = np.linalg.norm(np.cross(Xt, Xp), axis=1)
    w = np.repeat(wt, nphi) * (2 * np.pi / nphi)
    return float(np.sum(w * dens))


def area_element_variation_check(surface, W, level=4, h=1e-3, tol=1e-5):
    """d/dt Area(X + tW) versus int (div xi - n H psi) dA, with H = tr(h)/n.

    Emits the comparison with the divergence term (``raw``) and without it
    (``integrated``); the divergence integrates to zero on a closed surface.
    """
    if surface.n != 2:
        raise ValueError("area_element_variation_check needs n = 2")
    areas = {t: _latlong_area(lambda q, t=t: surface.map(q) + t * np.asarray(W(q)))
             for t in (-h, h, -h / 2, h / 2)}
    d1 = (areas[h] - areas[-h]) / (2 * h)
    d2 = (areas[h / 2] - areas[-h / 2]) / h
    fd = (4 * d2 - d1) / 3
    grid = build_grid(surface, level)
    fs = grid.frames
    Wn = np.asarray(W(grid.nodes))
    psi = np.sum(Wn * fs.nu, axis=1)
    nH = np.trace(fs.h, axis1=-2, axis2=-1)

    def xi(q):
        nu = unit_normal(surface, q)
        w = np.asarray(W(q))
        return w - np.sum(w * nu, axis=-1, keepdims=True) * nu

    div = surface_divergence(surface, xi, grid.nodes, 1e-3)
    integrated = integrate(grid, -nH * psi)
    raw = integrated + integrate(grid, div)
    # natural size of an area derivative along W
    floor = grid.area * max(1e-12, float(np.max(np.linalg.norm(Wn, axis=1))))
    dev = max(abs(fd - raw), abs(fd - integrated)) / max(abs(fd), abs(raw), floor)
    return _report("area_element_variation", (surface.label, getattr(W, "tag", "W"), level, h),
                   dict(area_derivative=fd), dict(raw=raw, integrated=integrated), dev, tol)


# ---------------------------------------------------------------------------
# algebra and spectra
# ---------------------------------------------------------------------------
def sym_poly_expand(lam, r):
    """sigma_r as the sum over strictly increasing index tuples."""
    lam = [float(v) for v in np.ravel(lam)]
    if len(lam) > 4:
        raise ValueError("sym_poly_expand is meant for n <= 4")
    total = 0.0
    for idx in itertools.combinations(range(len(lam)), r):
        prod = 1.0
        for i in idx:
            prod *= lam[i]
        total += prod
    return total


def harmonic_spectrum(l_max, n=2):
    """[(l(l+1) - n, 2l+1)] for l = 1..l_max on the round 2-sphere."""
    if l_max > 6:
        raise ValueError("l_max <= 6")
    if n != 2:
        raise ValueError("harmonic_spectrum is tabulated for n = 2")
    return [(l * (l + 1) - n, 2 * l + 1) for l in range(1, l_max + 1)]


def expand_spectrum(pairs):
    """Flatten (value, multiplicity) pairs into a sorted array."""
    return np.sort(np.concatenate([np.full(mult, float(v)) for v, mult in pairs]))
