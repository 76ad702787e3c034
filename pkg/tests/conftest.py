import numpy as np
import pytest

from orbent import (
    PointSample,
    bernoulli_shift,
    circle_rotation,
    identity_system,
    make_standard,
)
from orbent.semimetric import DistanceMatrix


@pytest.fixture(scope="session")
def rotation():
    return circle_rotation()


@pytest.fixture(scope="session")
def identity():
    return identity_system()


@pytest.fixture(scope="session")
def fair_shift():
    return bernoulli_shift([0.5, 0.5], horizon=300)


@pytest.fixture(scope="session")
def euclid():
    return make_standard("euclidean_1d")


@pytest.fixture(scope="session")
def arc():
    return make_standard("circle_arc")


@pytest.fixture(scope="session")
def cut():
    return make_standard("first_symbol_cut")


def coords_sample(values) -> PointSample:
    """Hand-built 1-D coordinate sample (bypasses the seeded sampler)."""
    coords = np.asarray(values, dtype=float).reshape(-1, 1)
    return PointSample(identity_system(), 0, coords=coords)


def matrix_from_points(values) -> DistanceMatrix:
    """|x - y| distance matrix of explicit 1-D points."""
    pts = np.asarray(values, dtype=float)
    d = np.abs(pts[:, None] - pts[None, :])
    d = np.triu(d, 1)
    return DistanceMatrix(d + d.T)
