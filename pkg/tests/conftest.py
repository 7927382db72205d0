import numpy as np
import pytest
from hypothesis import strategies as st

from bmgeom import convex2d as c2
from bmgeom import kernels


def square_polygon(h=1.0):
    return c2.make_polygon([(-h, -h), (h, -h), (h, h), (-h, h)])


@pytest.fixture
def square():
    return square_polygon()


@pytest.fixture(scope="session")
def disc1024():
    return c2.disc(1024)


def random_polygon(rng, n=None, centered=True):
    """Hull of 3..12 gaussian points (retry until non-degenerate)."""
    while True:
        pts = rng.normal(size=(n or rng.integers(3, 13), 2)) * rng.uniform(0.3, 3.0, size=2)
        try:
            P = c2.make_polygon(pts)
        except c2.Degenerate:
            continue
        if c2.area_and_moments(P)[0] < 1e-2:
            continue
        return c2.translate(P, -c2.centroid(P)) if centered else P


def random_symmetric(rng):
    P = random_polygon(rng)
    return c2.minkowski_symmetrize(P)


def random_affine(rng):
    while True:
        A = rng.normal(size=(2, 2))
        if abs(np.linalg.det(A)) > 0.2:
            return c2.Transform2(A, rng.normal(size=2))


@st.composite
def polygons(draw, centered=True):
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return random_polygon(np.random.default_rng(seed), centered=centered)


@st.composite
def affine_maps(draw):
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return random_affine(np.random.default_rng(seed))


BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.backend_module(request.param)


# one PASS/FAIL line per acceptance criterion, shown after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
