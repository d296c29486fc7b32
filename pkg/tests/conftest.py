import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def convex_polygon(rng, n, jitter=0.35):
    """Random convex CCW polygon: sorted angles on a unit circle, then scaled/shifted."""
    while True:
        gaps = rng.uniform(1.0 - jitter, 1.0 + jitter, n)
        t = np.cumsum(gaps) / gaps.sum() * 2 * np.pi + rng.uniform(0, 2 * np.pi)
        v = np.column_stack([np.cos(t), np.sin(t)])
        v = v * rng.uniform(0.5, 2.0) + rng.uniform(-3, 3, 2)
        e = np.roll(v, -1, axis=0) - v
        if np.min(np.hypot(e[:, 0], e[:, 1])) > 0.05 * np.ptp(v):
            return v


def interior_points(rng, verts, m, margin=0.05):
    """Points in the fan triangles, kept away from the boundary."""
    c = verts.mean(axis=0)
    k = rng.integers(0, len(verts), m)
    a = rng.uniform(margin, 1 - margin, m)
    b = rng.uniform(margin, 1 - margin, m) * (1 - a)
    v0, v1 = verts[k], verts[(k + 1) % len(verts)]
    p = c + (1 - margin) * (a[:, None] * (v0 - c) + b[:, None] * (v1 - c))
    return p


@st.composite
def convex_polygons(draw, n_min=3, n_max=10):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return convex_polygon(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit_square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def regular_polygon(n, r=1.0, c=(0.0, 0.0)):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)])


# one summary line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    def record(line):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
