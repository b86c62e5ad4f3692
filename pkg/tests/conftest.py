import pytest

import nehari_opt as no


@pytest.fixture(scope="session")
def interval200():
    return no.IntervalMesh(200)


@pytest.fixture(scope="session")
def henon1d(interval200):
    """Henon on the interval: a = 0, g = |x|, p = 3."""
    return no.preset_henon(1.0, 3.0, interval200)


@pytest.fixture(scope="session")
def plain1d(interval200):
    """a = 0, g = 1, p = 3 (Henon at l = 0); the analytic-oracle workhorse."""
    return no.preset_henon(0.0, 3.0, interval200)


@pytest.fixture(scope="session")
def nls1d(interval200):
    return no.preset_nls(1.0, 0.0, interval200)


@pytest.fixture(scope="session")
def square24():
    return no.SquareMesh(24)


@pytest.fixture(scope="session")
def nls2d(square24):
    return no.preset_nls(4.0, 10.0, square24)


@pytest.fixture(scope="session")
def disk32():
    return no.DiskMesh(32, 32)


@pytest.fixture(scope="session")
def henon_disk(disk32):
    return no.preset_henon(1.0, 3.0, disk32)


@pytest.fixture(scope="session")
def disk64_study():
    return no.DiskMesh(64, 64)
