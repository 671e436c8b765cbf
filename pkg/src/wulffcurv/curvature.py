"""Pointwise anisotropic curvature algebra.

All routines are batched over leading axes: ``s``, ``A`` and ``h`` have shape
``(..., n, n)``.  ``s = A h`` is the matrix of the F-Weingarten operator in an
orthonormal tangent frame.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSpectrum, NotPositiveDefinite


@dataclass
class CurvatureBundle:
    A: np.ndarray
    h: np.ndarray
    s: np.ndarray
    lam: np.ndarray      # anisotropic principal curvatures, ascending
    sigma: np.ndarray    # sigma_0 .. sigma_n
    H: np.ndarray        # normalized H_0 .. H_n
    P: np.ndarray        # P_0 .. P_n, shape (..., n+1, n, n)
    T: np.ndarray        # T_0 .. T_{n-1} = P_r A

    @property
    def n(self):
        return self.s.shape[-1]

    def sigma_at(self, k):
        """sigma_k with the conventions sigma_k = 0 for k > n."""
        if k > self.n:
            return np.zeros(self.sigma.shape[:-1])
        return self.sigma[..., k]

    def H_at(self, k):
        if k > self.n:
            return np.zeros(self.H.shape[:-1])
        return self.H[..., k]


def _spd_check(A):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("A is not positive definite") from exc


def eigen_anisotropic(s, A):
    """Eigenvalues of s = A h through the symmetric matrix L^T h L (A = L L^T)."""
    s = np.asarray(s, dtype=float)
    A = np.asarray(A, dtype=float)
    L = _spd_check(A)
    h = np.linalg.solve(A, s)
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    M = np.einsum("...ki,...kl,...lj->...ij", L, h, L)
    return np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))


def sigma_charpoly(lam):
    """Elementary symmetric functions sigma_0..sigma_n of the last axis."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        li = lam[..., i]
        for k in range(i + 1, 0, -1):
            e[..., k] = e[..., k] + li * e[..., k - 1]
    return e


def _perm_sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


@functools.lru_cache(maxsize=None)
def _sigma_terms(n, r):
    """(sign, rows, cols) of every nonzero generalized-Kronecker term."""
    terms = []
    for lower in itertools.permutations(range(n), r):
        for perm in itertools.permutations(range(r)):
            upper = tuple(lower[k] for k in perm)
            terms.append((_perm_sign(perm), lower, upper))
    return tuple(terms)


def sigma_kronecker(s, r):
    """sigma_r as (1/r!) sum of generalized Kronecker symbols times s entries."""
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    if r == 0:
        return np.ones(s.shape[:-2])
    total = np.zeros(s.shape[:-2])
    for sign, rows, cols in _sigma_terms(n, r):
        prod = np.ones(s.shape[:-2])
        for a, b in zip(rows, cols):
            prod = prod * s[..., a, b]
        total = total + sign * prod
    return total / math.factorial(r)


@functools.lru_cache(maxsize=None)
def _newton_terms(n, r, i, j):
    terms = []
    others = [k for k in range(n) if k != j]
    for head in itertools.permutations(others, r):
        lower = head + (j,)
        for perm in itertools.permutations(range(r + 1)):
            upper = tuple(lower[k] for k in perm)
            if upper[r] != i:
                continue
            terms.append((_perm_sign(perm), head, upper[:r]))
    return tuple(terms)


def newton_kronecker(s, r):
    """Matrix of P_r from the generalized Kronecker formula."""
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    out = np.zeros(s.shape)
    for i in range(n):
        for j in range(n):
            acc = np.zeros(s.shape[:-2])
            for sign, rows, cols in _newton_terms(n, r, i, j):
                prod = np.ones(s.shape[:-2])
                for a, b in zip(rows, cols):
                    prod = prod * s[..., a, b]
                acc = acc + sign * prod
            out[..., i, j] = acc / math.factorial(r)
    return out


def newton_recursion(s, sigma):
    """P_0 = I, P_r = sigma_r I - P_{r-1} s; returns the stack P_0..P_n."""
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    eye = np.eye(n)
    P = np.empty(s.shape[:-2] + (n + 1, n, n))
    P[..., 0, :, :] = eye
    for r in range(1, n + 1):
        P[..., r, :, :] = sigma[..., r, None, None] * eye - P[..., r - 1, :, :] @ s
    return P


def curvature_bundle(A, h):
    """Everything pointwise from the anisotropy matrix A and the form h."""
    A = np.asarray(A, dtype=float)
    h = np.asarray(h, dtype=float)
    n = A.shape[-1]
    s = A @ h
    lam = eigen_anisotropic(s, A)
    sigma = sigma_charpoly(lam)
    H = sigma / np.array([math.comb(n, r) for r in range(n + 1)], dtype=float)
    P = newton_recursion(s, sigma)
    T = P[..., :n, :, :] @ A[..., None, :, :]
    return CurvatureBundle(A, h, s, lam, sigma, H, P, T)


def bundle_for_frames(fs, model=None):
    """Curvature bundle at every point of a FrameSet; A = I when model is None."""
    n = fs.h.shape[-1]
    if model is None:
        A = np.broadcast_to(np.eye(n), fs.h.shape).copy()
    else:
        nu = fs.nu / np.linalg.norm(fs.nu, axis=-1, keepdims=True)
        A = model.A_F(nu, fs.E)
    return curvature_bundle(A, fs.h)


def _sym_abs(lam, k):
    n = lam.shape[-1]
    if k > n:
        return np.zeros(lam.shape[:-1])
    return sigma_charpoly(np.abs(lam))[..., k]


def trace_identities(bundle):
    """Relative residuals of the three algebraic trace identities for r = 0..n.

    Returns a dict with arrays of shape (..., n+1):

    ``trace_PS``  tr(P_r s) - (r+1) sigma_{r+1}
    ``trace_P``   tr(P_r) - (n-r) sigma_r
    ``trace_PS2`` tr(P_r s^2) - (sigma_1 sigma_{r+1} - (r+2) sigma_{r+2})

    Each residual is divided by the natural size of its terms,
    built from elementary symmetric functions of |lambda|.
    """
    n = bundle.n
    s = bundle.s
    s2 = s @ s
    rho = np.max(np.abs(bundle.lam), axis=-1)
    out = {k: np.empty(s.shape[:-2] + (n + 1,)) for k in ("trace_PS", "trace_P", "trace_PS2")}
    for r in range(n + 1):
        Pr = bundle.P[..., r, :, :]
        res2 = np.trace(Pr @ s, axis1=-2, axis2=-1) - (r + 1) * bundle.sigma_at(r + 1)
        res3 = np.trace(Pr, axis1=-2, axis2=-1) - (n - r) * bundle.sigma_at(r)
        res4 = (np.trace(Pr @ s2, axis1=-2, axis2=-1)
                - (bundle.sigma_at(1) * bundle.sigma_at(r + 1) - (r + 2) * bundle.sigma_at(r + 2)))
        sc2 = (r + 1) * _sym_abs(bundle.lam, r + 1) + rho ** (r + 1)
        sc3 = (n - r) * _sym_abs(bundle.lam, r) + rho ** r
        sc4 = (_sym_abs(bundle.lam, 1) * _sym_abs(bundle.lam, r + 1)
               + (r + 2) * _sym_abs(bundle.lam, r + 2) + rho ** (r + 2))
        out["trace_PS"][..., r] = np.abs(res2) / sc2
        out["trace_P"][..., r] = np.abs(res3) / sc3
        out["trace_PS2"][..., r] = np.abs(res4) / sc4
    return out


@dataclass(frozen=True)
class CascadeResult:
    holds: bool
    premise_false: bool

    def __bool__(self):
        return self.holds


def positivity_cascade(H, r):
    """Check "H_{r+1} > 0 everywhere implies H_k > 0 everywhere for k <= r".

    ``H`` has shape (points, n+1).  A false premise makes the implication
    vacuously true and is flagged.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if not np.all(H[:, r + 1] > 0):
        return CascadeResult(True, True)
    return CascadeResult(bool(np.all(H[:, 1:r + 1] > 0)), False)


def maclaurin_gap(lam, r):
    """H_1 H_{r+1} - H_{r+2} for positive anisotropic principal curvatures."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 0 <= r <= n - 2:
        raise ValueError(f"need 0 <= r <= n-2, got r={r}, n={n}")
    if np.any(lam <= 0):
        raise NonPositiveSpectrum("all anisotropic principal curvatures must be positive")
    sig = sigma_charpoly(lam)
    H = sig / np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
    return H[..., 1] * H[..., r + 1] - H[..., r + 2]


def is_umbilic(lam, rtol=1e-8):
    lam = np.asarray(lam, dtype=float)
    spread = np.max(lam, axis=-1) - np.min(lam, axis=-1)
    return spread <= rtol * (1 + np.max(np.abs(lam), axis=-1))
