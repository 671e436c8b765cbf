"""Small helpers for working on the unit sphere S^n in R^{n+1}."""
import numpy as np

UNIT_TOL = 1e-12


def check_unit(x, tol=UNIT_TOL):
    from .errors import NonUnitInput

    x = np.asarray(x, dtype=float)
    dev = np.abs(np.linalg.norm(x, axis=-1) - 1.0)
    if np.any(dev > tol):
        raise NonUnitInput(f"expected unit vectors, max | |x| - 1 | = {dev.max():.3e}")
    return x


def tangent_basis(p):
    """Orthonormal basis of the tangent space p^perp, shape (..., n+1, n).

    For n = 2 the basis is positively oriented: ``t1 x t2 = p``.  For n = 1
    the single vector is p rotated by +90 degrees.
    """
    p = np.asarray(p, dtype=float)
    m = p.shape[-1]
    if m == 2:
        return np.stack([-p[..., 1], p[..., 0]], axis=-1)[..., None]
    if m == 3:
        k = np.argmin(np.abs(p), axis=-1)
        helper = np.eye(3)[k]
        t1 = helper - np.sum(helper * p, axis=-1, keepdims=True) * p
        t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
        t2 = np.cross(p, t1)
        return np.stack([t1, t2], axis=-1)
    # general dimension: complete p to an orthonormal basis by QR
    flat = p.reshape(-1, m)
    out = np.empty((flat.shape[0], m, m - 1))
    for i, v in enumerate(flat):
        q, _ = np.linalg.qr(np.column_stack([v, np.eye(m)]))
        q = q[:, :m]
        if q[:, 0] @ v < 0:
            q = -q
        out[i] = q[:, 1:]
    return out.reshape(p.shape + (m - 1,))


def exp_map(p, v):
    """Riemannian exponential map of the unit sphere at p applied to tangent v."""
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(theta > 0, theta, 1.0)
    return np.cos(theta) * p + np.where(theta > 0, np.sin(theta) / safe, 1.0) * v


def fibonacci_sphere(count):
    """Quasi-uniform points on S^2 (golden-angle spiral)."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sample_sphere(n, count, seed=0):
    """Deterministic sample of ``count`` points on S^n."""
    if n == 1:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 2:
        return fibonacci_sphere(count)
    x = np.random.default_rng(seed).standard_normal((count, n + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
