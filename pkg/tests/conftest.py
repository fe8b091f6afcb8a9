"""Shared fixtures: catalog manifolds are built once per session."""

import pytest

from cgb import manifolds


@pytest.fixture(scope="session")
def s2():
    return manifolds.sphere(1.0)


@pytest.fixture(scope="session")
def s2_radius2():
    return manifolds.sphere(2.0)


@pytest.fixture(scope="session")
def ellipsoid():
    return manifolds.ellipsoid(1.0, 1.2, 0.8)


@pytest.fixture(scope="session")
def torus():
    return manifolds.torus(2.0, 1.0)


@pytest.fixture(scope="session")
def flat_t2():
    return manifolds.flat_torus()


@pytest.fixture(scope="session")
def s2xs2():
    return manifolds.product_of_spheres()


@pytest.fixture(scope="session")
def s2_perturbed():
    return manifolds.sphere_conformal(1.0, 0.3)


@pytest.fixture(scope="session")
def full_catalog(s2, ellipsoid, torus, flat_t2, s2xs2):
    return [s2, ellipsoid, torus, flat_t2, s2xs2]
