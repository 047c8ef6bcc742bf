import pytest

from edgeweyl.spectra import sphere_spectrum, torus_spectrum


@pytest.fixture(scope="session")
def s3_small():
    return sphere_spectrum(3, 1e4)


@pytest.fixture(scope="session")
def s3_4e4():
    return sphere_spectrum(3, 4e4)


@pytest.fixture(scope="session")
def s3_big():
    # y up to 1e6 with room for perturbation shifts
    return sphere_spectrum(3, 4e6)


@pytest.fixture(scope="session")
def torus2_4e4():
    return torus_spectrum([[1.0, 0.0], [0.0, 1.0]], 4e4)
