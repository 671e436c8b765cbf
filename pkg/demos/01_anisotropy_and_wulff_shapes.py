# %% [markdown]
# # Anisotropies and their Wulff shapes
#
# An anisotropy is a positive function F on the unit sphere. Its Wulff shape is
# the image of the map x -> F(x) x + grad F(x). We build a few models, check that
# they are convex, and look at the resulting shapes.

# %%
import numpy as np

from wulffcurv import AnisotropyModel, WulffSurface, build_grid, build_mesh, parse_anisotropy

models = {
    "const": AnisotropyModel.constant(1.0),
    "linear": AnisotropyModel.linear([0.3, 0.0, 0.0]),
    "norm": AnisotropyModel.norm([2.0, 1.0, 1.0]),
    "quad": AnisotropyModel.quad(0.2, [0.0, 0.0, 1.0]),
}

# %% [markdown]
# Convexity means the matrix A_F (Hessian of F plus F times the identity, on the
# tangent plane) is positive definite everywhere. The check samples the sphere.

# %%
for name, model in models.items():
    rep = model.check_convexity()
    print(f"{name:6s} min eig A_F = {rep.min_eigenvalue_of_A_F:.4f}  convex = {rep.passed}")

# A quad model with a large coefficient fails, and the report says where.
bad = parse_anisotropy("quad:c=2,d=[0,0,1]").check_convexity()
print("quad c=2:", bad.passed, "argmin at", np.round(bad.argmin_point, 3))

# %% [markdown]
# The Wulff shape of the linear model is a translated unit sphere and the norm
# model gives an ellipsoid with semi-axes B. The mesh bounding boxes show both.

# %%
for name, model in models.items():
    mesh = build_mesh(WulffSurface(model), 4)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    print(f"{name:6s} bbox {np.round(lo, 3)} .. {np.round(hi, 3)}")

# %% [markdown]
# On every Wulff shape the anisotropic shape operator s = A_F h is the identity.

# %%
for name, model in models.items():
    b = build_grid(WulffSurface(model), 4).bundle(model)
    print(f"{name:6s} max|s - I| = {np.max(np.abs(b.s - np.eye(2))):.2e}")
