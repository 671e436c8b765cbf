# %% [markdown]
# # Independent oracles
#
# A few cases have answers that do not go through the main pipeline: planar
# curves (closed-form curvature), the Gauss map variation, the area element
# variation, and the spherical-harmonic spectrum.

# %%
import numpy as np

from wulffcurv import AnisotropyModel, Ellipsoid, Sphere, WulffSurface
from wulffcurv.functionals import random_vector_field
from wulffcurv.oracle import (area_element_variation_check, curve_case,
                              gauss_map_variation_check, harmonic_spectrum, sym_poly_expand)

rep = curve_case(Ellipsoid([2.0, 1.0]))
print("ellipse curvature range:", rep.oracle["sigma1_min"], rep.oracle["sigma1_max"], rep.passed)

F2 = AnisotropyModel.norm([2.0, 1.0])
print("planar Wulff curve passes:", curve_case(WulffSurface(F2), F2).passed)

# %%
u = np.array([[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]])
W = random_vector_field(2, seed=1)
print("Gauss map variation:", gauss_map_variation_check(Ellipsoid([1, 1.5, 2]), W, u).passed)
print("area element variation:", area_element_variation_check(Sphere(), W).passed)

# %%
print("sigma_2(1,2,3) =", sym_poly_expand([1, 2, 3], 2))
print("sphere Laplacian spectrum (value, multiplicity):", harmonic_spectrum(3))
