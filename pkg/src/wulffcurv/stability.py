"""Second variation of A_r at a critical surface: assembly, spectrum, diagnostics.

The quadratic form is ``Q[psi] = (r+1) * (psi^T K psi - psi^T Z psi)`` with
piecewise-linear elements on a :class:`~wulffcurv.mesh.SurfaceMesh`:

* ``K``  from ``int <T_r grad psi, grad psi>`` (the L_r term integrated by parts),
* ``Z``  from ``int psi^2 tr(T_r h h)`` with vertex-lumped quadrature,
* ``Mq`` the lumped mass matrix, and ``c = Mq 1`` the volume constraint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curvature import bundle_for_frames
from .errors import NotCritical, SolverFailure
from .functionals import (NormalField, area_functional, euler_lagrange_residual,
                          volume_functional)
from .geometry import build_grid, deform, frames, integrate, unit_normal


@dataclass
class QuadraticForm:
    K: sp.csr_matrix
    Z: sp.csr_matrix
    Mq: sp.csr_matrix
    c: np.ndarray
    r: int
    surface: str = ""
    F: str = ""

    def value(self, psi):
        psi = np.asarray(psi, dtype=float)
        return (self.r + 1) * float(psi @ (self.K @ psi) - psi @ (self.Z @ psi))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    kernel_dim: int
    verdict: str
    mu_ref: float
    kernel_tol: float
    stab_tol: float
    eigenvectors: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return dict(eigenvalues=[float(v) for v in self.eigenvalues], kernel_dim=self.kernel_dim,
                    verdict=self.verdict, mu_ref=self.mu_ref, kernel_tol=self.kernel_tol,
                    stab_tol=self.stab_tol)


def _hat_gradients(a, b, c):
    """Ambient gradients of the three barycentric hat functions per triangle."""
    nrm = np.cross(b - a, c - a)
    area2 = np.linalg.norm(nrm, axis=1, keepdims=True)
    unit = nrm / area2
    # grad phi_i = (unit x opposite edge) / (2 area), edges oriented counter-clockwise
    g0 = np.cross(unit, c - b) / area2
    g1 = np.cross(unit, a - c) / area2
    g2 = np.cross(unit, b - a) / area2
    return np.stack([g0, g1, g2], axis=1), 0.5 * area2[:, 0]


def _assemble(mesh, T_vertex, zeroth, r, model):
    """P1 assembly from vertex tangent tensors (in frame components) and a zeroth-order density."""
    mesh.check()
    fs = mesh.frames
    T_amb = np.einsum("vai,vij,vbj->vab", fs.E, T_vertex, fs.E)
    f = mesh.faces
    Pi = mesh.face_projectors
    Tf = np.einsum("fab,fbc,fcd->fad", Pi, T_amb[f].mean(axis=1), Pi)
    a, b, c = mesh.face_vectors
    G, area = _hat_gradients(a, b, c)
    local = area[:, None, None] * np.einsum("fia,fab,fjb->fij", G, Tf, G)
    rows = np.repeat(f, 3, axis=1).ravel()
    cols = np.tile(f, (1, 3)).ravel()
    nv = len(mesh.vertices)
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    K = 0.5 * (K + K.T)
    m = mesh.vertex_areas
    Z = sp.diags(m * zeroth).tocsr()
    Mq = sp.diags(m).tocsr()
    label = model.label if model is not None else "const:c=1"
    return QuadraticForm(K, Z, Mq, m.copy(), r, getattr(mesh.surface, "label", ""), label)


def assemble_form(mesh, model, r):
    """Assemble K, Z, Mq and c for A_r'' on the mesh."""
    b = bundle_for_frames(mesh.frames, model)
    Tr = b.T[:, r]
    return _assemble(mesh, Tr, np.einsum("vij,vjk,vki->v", Tr, b.h, b.h), r, model)


def assemble_wulff_form(mesh, model):
    """The form with T_r replaced by A_F, i.e. int <A_F grad psi, grad psi> - psi^2 tr(A_F h h).

    On a Wulff shape s = I, so T_r = C(n-1, r) A_F and ``assemble_form(mesh, model, r)``
    equals C(n-1, r) times this form (with the factor r+1 carried by ``value``).
    """
    b = bundle_for_frames(mesh.frames, model)
    return _assemble(mesh, b.A, np.einsum("vij,vjk,vki->v", b.A, b.h, b.h), 0, model)


def wulff_scaling_residual(mesh, model, r):
    """Largest entrywise deviation between the general form and the scaled A_F form."""
    n = mesh.surface.n
    full = assemble_form(mesh, model, r)
    ref = assemble_wulff_form(mesh, model)
    k = math.comb(n - 1, r)
    dK = abs(full.K - k * ref.K).max()
    dZ = abs(full.Z - k * ref.Z).max()
    return float(max(dK, dZ))


def _deflated_operator(form, beta):
    """Operator of the form restricted to c^T psi = 0, constraint direction sent to beta."""
    C = (form.K - form.Z).tocsr()
    m = form.c
    s = float(m.sum())
    ones = np.ones(len(m))
    v = C @ ones
    a = float(ones @ v)

    def matvec(x):
        x = np.ravel(x)
        mx, vx = m @ x, v @ x
        return (C @ x - (m * vx + v * mx) / s + m * (a * mx / s ** 2) + beta * m * mx / s)

    U = np.column_stack([m, v])
    W = np.array([[a / s ** 2 + beta / s, -1.0 / s], [-1.0 / s, 0.0]])
    return C, U, W, matvec


def constrained_spectrum(form, k=16, shift=-1.0, kernel_rel=1e-2, stab_tol=1e-2,
                         ref_frac=0.1, return_vectors=False):
    """Lowest k eigenvalues of (K - Z) psi = mu Mq psi on {c^T psi = 0}, times (r+1).

    The constraint is deflated: the operator is projected onto the
    Mq-orthogonal complement of the constants and the constant direction is
    moved to a large eigenvalue ``beta`` outside the requested window.
    Shift-invert Lanczos (ARPACK) around ``shift`` with a sparse LU plus a
    rank-two Woodbury correction.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    n = len(form.c)
    k = min(k, n - 2)
    # a few extra Ritz pairs keep degenerate clusters at the window edge complete
    k_solve = min(k + 6, n - 2)
    diagK = form.K.diagonal()
    bound = 2.0 * np.max((np.abs(diagK) + np.abs(form.Z.diagonal())) / form.c)
    beta = 10.0 * bound + abs(shift)
    C, U, W, matvec = _deflated_operator(form, beta)
    S = (C - shift * form.Mq).tocsc()
    lu = spla.splu(S)
    SiU = np.column_stack([lu.solve(U[:, 0]), lu.solve(U[:, 1])])
    core = np.linalg.inv(np.linalg.inv(W) + U.T @ SiU)

    def opinv(x):
        x = np.ravel(x)
        y = lu.solve(x)
        return y - SiU @ (core @ (U.T @ y))

    n_op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    op_inv = spla.LinearOperator((n, n), matvec=opinv, dtype=float)
    v0 = np.cos(np.arange(n) * 0.618)
    try:
        vals, vecs = spla.eigsh(n_op, k=k_solve, M=form.Mq, sigma=shift, OPinv=op_inv,
                                which="LM", v0=v0, tol=1e-12, maxiter=20 * n)
    except spla.ArpackNoConvergence as exc:
        raise SolverFailure(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals)[:k]
    vals = (form.r + 1) * vals[order]
    vecs = vecs[:, order]
    top = np.max(np.abs(vals))
    positive = vals[vals > ref_frac * top]
    mu_ref = float(positive[0]) if len(positive) else float(top)
    kernel_tol = kernel_rel * abs(mu_ref)
    kernel_dim = int(np.sum(np.abs(vals) <= kernel_tol))
    verdict = "stable" if vals[0] >= -stab_tol else "unstable"
    return SpectrumReport(vals, kernel_dim, verdict, mu_ref, kernel_tol, stab_tol,
                          vecs if return_vectors else None)


def constrained_spectrum_dense(form):
    """Full constrained spectrum by an explicit null-space basis (small meshes only)."""
    from scipy.linalg import eigh, null_space

    N = null_space(form.c[None, :])
    A = (form.K - form.Z).toarray()
    M = form.Mq.toarray()
    return (form.r + 1) * eigh(N.T @ A @ N, N.T @ M @ N, eigvals_only=True)


def stability_report(mesh, model, r, grid=None, el_tol=1e-6, **kw):
    """Assemble and solve; the verdict is 'indeterminate' off critical surfaces."""
    form = assemble_form(mesh, model, r)
    rep = constrained_spectrum(form, **kw)
    if grid is not None:
        lam, sup = euler_lagrange_residual(grid, model, r)
        if sup > el_tol * max(1.0, abs(lam)):
            rep.verdict = "indeterminate"
    return form, rep


# ---------------------------------------------------------------------------
# test function and its diagnostics
# ---------------------------------------------------------------------------
def _psi_star_parts(surface, model, q):
    fs = frames(surface, q)
    b = bundle_for_frames(fs, model)
    F = np.ones(len(fs.p)) if model is None else model.value(fs.nu)
    support = np.sum(fs.X * fs.nu, axis=-1)
    return F, support, b


def gap_terms_from_data(F, H, weights, r):
    """The two aggregates whose signs drive the instability argument.

    ``F`` (points,), ``H`` (points, n+1) normalized curvatures, ``weights``
    quadrature weights.  Returns ``(gap1, gap2, gap2_lower)`` with

    * ``gap1 = sum w F (H_1 H_{r+1} - H_{r+2})`` (zero when r = n-1),
    * ``gap2 = sum w F H_1 * sum w F H_r/H_{r+1} - (sum w F)^2``,
    * ``gap2_lower = sum w F H_1 * sum w F/H_1 - (sum w F)^2`` (a lower bound of gap2).
    """
    F = np.asarray(F, dtype=float)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    w = np.asarray(weights, dtype=float)
    n = H.shape[-1] - 1
    if r <= n - 2:
        gap1 = float(np.sum(w * F * (H[:, 1] * H[:, r + 1] - H[:, r + 2])))
    else:
        gap1 = 0.0
    iF = float(np.sum(w * F))
    iFH1 = float(np.sum(w * F * H[:, 1]))
    gap2 = iFH1 * float(np.sum(w * F * H[:, r] / H[:, r + 1])) - iF ** 2
    gap2_lower = iFH1 * float(np.sum(w * F / H[:, 1])) - iF ** 2
    return gap1, gap2, gap2_lower


def gap_terms(grid, model, r):
    """:func:`gap_terms_from_data` evaluated on a quadrature grid."""
    b = grid.bundle(model)
    F = np.ones(len(grid.weights)) if model is None else model.value(grid.frames.nu)
    return gap_terms_from_data(F, b.H, grid.weights, r)


@dataclass
class TestFunctionDiagnostics:
    alpha: float
    psi_star: np.ndarray        # at grid nodes
    psi_star_mesh: np.ndarray   # at mesh vertices
    Q_psi_star: float
    rhs_closed_form: float
    gap_term_1: float
    gap_term_2: float
    gap_term_2_lower: float
    psi_star_integral: float
    Q_psi_star_spectral: float

    __test__ = False

    def as_dict(self):
        return dict(alpha=self.alpha, Q_psi_star=self.Q_psi_star,
                    rhs_closed_form=self.rhs_closed_form, gap_term_1=self.gap_term_1,
                    gap_term_2=self.gap_term_2, gap_term_2_lower=self.gap_term_2_lower,
                    psi_star_integral=self.psi_star_integral,
                    Q_psi_star_spectral=self.Q_psi_star_spectral)


def test_function(grid, mesh, model, r, el_tol=1e-6, form=None):
    """Evaluate psi* = alpha F(nu) + H_{r+1} <X, nu> and the closed-form chain.

    ``rhs_closed_form`` is A_r''(0) predicted from the integral identities
    (already multiplied by r+1, so it is comparable with ``Q_psi_star``).
    ``Q_psi_star`` uses the mesh; ``Q_psi_star_spectral`` evaluates the same
    weak form on the quadrature grid with psi* recomputed pointwise.
    """
    n = grid.surface.n
    lam, sup = euler_lagrange_residual(grid, model, r)
    if sup > el_tol * max(1.0, abs(lam)):
        raise NotCritical(f"H_{r + 1} is not constant (sup residual {sup:.3e})", sup)
    b = grid.bundle(model)
    F = np.ones(len(grid.weights)) if model is None else model.value(grid.frames.nu)
    support = np.sum(grid.frames.X * grid.frames.nu, axis=-1)
    iF = integrate(grid, F)
    alpha = integrate(grid, F * b.H[:, r]) / iF
    psi = alpha * F + b.H[:, r + 1] * support
    Fm, supm, bm = _psi_star_parts(mesh.surface, model, mesh.p)
    psi_mesh = alpha * Fm + bm.H[:, r + 1] * supm
    if form is None:
        form = assemble_form(mesh, model, r)
    Q = form.value(psi_mesh)
    surf = grid.surface

    def psi_fn(q):
        F_q, sup_q, b_q = _psi_star_parts(surf, model, q)
        return alpha * F_q + b_q.H[:, r + 1] * sup_q

    Q_spec = weak_form_value(grid, model, r, psi_fn)
    gap1, gap2, gap2_lower = gap_terms(grid, model, r)
    C = math.comb(n, r + 1)
    Hc = lam / ((r + 1) * C)
    rhs = (-alpha ** 2 * (n - r - 1) * C * gap1
           - alpha * (r + 1) * C * Hc ** 2 / iF * gap2)
    return TestFunctionDiagnostics(alpha, psi, psi_mesh, Q, (r + 1) * rhs, gap1, gap2,
                                   gap2_lower, integrate(grid, psi), Q_spec)


def weak_form_value(grid, model, r, psi, step=1e-3):
    """Q[psi] on the spectral grid: (r+1) int (<T_r grad psi, grad psi> - psi^2 tr(T_r h h))."""
    from .geometry import tangential_gradient

    b = grid.bundle(model)
    Tr = b.T[:, r]
    g = tangential_gradient(grid.surface, psi, grid.nodes, step)
    vals = psi(grid.nodes)
    trThh = np.einsum("...ij,...jk,...ki->...", Tr, b.h, b.h)
    dens = np.einsum("...i,...ij,...j->...", g, Tr, g) - vals ** 2 * trThh
    return (r + 1) * integrate(grid, dens)


# ---------------------------------------------------------------------------
# finite-difference second variation
# ---------------------------------------------------------------------------
@dataclass
class SecondVariation:
    fd_value: float
    form_value: float
    mismatch: float
    Lambda: float


def second_variation_fd(grid, model, mesh, r, psi, h=1e-2, el_tol=1e-6, form=None, xi=None):
    """Second derivative of A_r + Lambda V along X + t W versus Q[psi] on the mesh.

    ``W = psi nu`` plus, optionally, the tangential projection of the ambient
    field ``xi``.  Both are functions of the parameter; the mesh uses vertex
    values of psi.  At a critical point the tangential part leaves the second
    derivative unchanged, so the comparison with Q[psi] stays valid.
    """
    lam, sup = euler_lagrange_residual(grid, model, r)
    if sup > el_tol * max(1.0, abs(lam)):
        raise NotCritical(f"H_{r + 1} is not constant (sup residual {sup:.3e})", sup)
    surf = grid.surface
    W = NormalField(surf, psi)
    if xi is not None:
        W = _MixedField(surf, psi, xi)

    def lagr(t):
        g = grid if t == 0 else build_grid(deform(surf, W, t), grid.level)
        return area_functional(g, model, r) + lam * volume_functional(g)

    f0 = lagr(0.0)
    vals = {t: lagr(t) for t in (-h, h, -h / 2, h / 2)}
    d_h = (vals[h] - 2 * f0 + vals[-h]) / h ** 2
    d_h2 = (vals[h / 2] - 2 * f0 + vals[-h / 2]) / (h / 2) ** 2
    fd = (4 * d_h2 - d_h) / 3
    if form is None:
        form = assemble_form(mesh, model, r)
    qv = form.value(psi(mesh.p))
    mismatch = abs(fd - qv) / max(abs(fd), abs(qv), 1e-12)
    return SecondVariation(fd, qv, mismatch, lam)


class _MixedField:
    def __init__(self, surface, psi, xi):
        self.surface, self.psi, self.xi = surface, psi, xi

    def __call__(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        nu = unit_normal(self.surface, q)
        x = np.asarray(self.xi(q))
        tang = x - np.sum(x * nu, axis=-1, keepdims=True) * nu
        return np.asarray(self.psi(q))[..., None] * nu + tang
