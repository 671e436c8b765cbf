"""Anisotropic higher-order mean curvatures, Wulff shapes and their stability."""
from .anisotropy import AnisotropyModel, ConvexityReport
from .curvature import (CurvatureBundle, curvature_bundle, maclaurin_gap, positivity_cascade,
                        sigma_charpoly, trace_identities)
from .errors import *  # noqa: F401,F403
from .functionals import (area_functional, divergence_lemma_residuals, euler_lagrange_residual,
                          first_variation_check, ir_residuals, minkowski_residual,
                          volume_functional)
from .geometry import (Ellipsoid, RadialGraph, Sphere, Transformed, WulffSurface, build_grid,
                       deform, frame_at, integrate)
from .mesh import SurfaceMesh, build_mesh
from .specs import parse_anisotropy, parse_surface
from .stability import (QuadraticForm, SpectrumReport, TestFunctionDiagnostics, assemble_form,
                        constrained_spectrum, second_variation_fd, test_function)

__version__ = "0.1.0"
