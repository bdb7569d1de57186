import math

import numpy as np
import pytest

from caplab.curvature import estimate_curvature
from caplab.gauge import Gauge
from caplab.shapes import cap, generate
from caplab.shifted_distance import build_sampling

PI = math.pi
THETAS = (PI / 3, PI / 2, 2 * PI / 3)


class Surface:
    """Mesh plus lazily built curvature field and sampling."""

    def __init__(self, mesh, g):
        self.mesh = mesh
        self.g = g
        self._fld = None
        self._sampling = None

    @property
    def fld(self):
        if self._fld is None:
            self._fld = estimate_curvature(self.mesh, self.g)
        return self._fld

    @property
    def sampling(self):
        if self._sampling is None:
            self._sampling = build_sampling(self.mesh, self.g)
        return self._sampling


_cache = {}


def surface(spec, theta, resolution=4):
    key = (repr(spec), theta, resolution)
    if key not in _cache:
        _cache[key] = Surface(generate(spec, resolution), Gauge(theta, spec_dimension(spec)))
    return _cache[key]


def spec_dimension(spec):
    for attr in ("base", "parts"):
        if hasattr(spec, attr):
            inner = getattr(spec, attr)
            return spec_dimension(inner[0] if isinstance(inner, tuple) else inner)
    return spec.dimension


@pytest.fixture(scope="session")
def hemisphere():
    return surface(cap(), PI / 2)


@pytest.fixture(scope="session")
def caps():
    return {th: surface(cap(theta=th), th) for th in THETAS}


@pytest.fixture(scope="session")
def arcs():
    return {th: surface(cap(theta=th, dimension=1), th) for th in THETAS}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance reporting: one PASS/FAIL line per criterion at the end of the run

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    key = (int(mark.args[0]), str(mark.args[1]))
    _criteria[key] = _criteria.get(key, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {title}")
