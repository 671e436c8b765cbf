import functools

import numpy as np
import pytest

from wulffcurv.anisotropy import AnisotropyModel
from wulffcurv.geometry import WulffSurface, build_grid
from wulffcurv.mesh import build_mesh

CATALOG = {
    "const": AnisotropyModel.constant(1.0, 2),
    "linear": AnisotropyModel.linear([0.3, 0.0, 0.0]),
    "norm": AnisotropyModel.norm([2.0, 1.0, 1.0]),
    "quad": AnisotropyModel.quad(0.2, [0.0, 0.0, 1.0]),
}


@functools.lru_cache(maxsize=None)
def cached_grid(surface_key, level):
    """Grids are expensive and immutable, so tests share them."""
    return build_grid(_surface(surface_key), level)


@functools.lru_cache(maxsize=None)
def cached_mesh(surface_key, subdiv):
    return build_mesh(_surface(surface_key), subdiv)


@functools.lru_cache(maxsize=None)
def _surface(key):
    from wulffcurv.specs import parse_surface

    if key.startswith("wulff-"):
        return WulffSurface(CATALOG[key[len("wulff-"):]])
    return parse_surface(key)


@pytest.fixture(params=sorted(CATALOG))
def catalog_model(request):
    return CATALOG[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, count, dim=3):
    x = rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
