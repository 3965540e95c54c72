import numpy as np
import pytest

from coliseum.core import GeneratorSystem, Polynomial, RandomModel, compose
from coliseum.iteration import Disk, EscapeParams, julia_backward_cloud
from coliseum.markov import t_raster

DC1_BBOX = (-4.5, 4.5, -4.5, 4.5)


def dc1_system() -> GeneratorSystem:
    g1 = Polynomial((-1, 0, 1))
    g2 = Polynomial((0, 0, 0.25))
    return GeneratorSystem((compose(g1, g1), compose(g2, g2)))


@pytest.fixture(scope="session")
def dc1():
    return dc1_system()


@pytest.fixture(scope="session")
def dc1_model(dc1):
    return RandomModel(dc1, (0.5, 0.5))


@pytest.fixture(scope="session")
def dc1_params(dc1):
    return EscapeParams.for_system(dc1, [Disk(0, 0.4)], max_depth=24)


@pytest.fixture(scope="session")
def dc1_cloud(dc1):
    return julia_backward_cloud(dc1, 20_000, rng_seed=0)


@pytest.fixture(scope="session")
def dc1_raster_256(dc1_model, dc1_params):
    return t_raster(dc1_model, dc1_params, DC1_BBOX, 256, depth=24)


@pytest.fixture(scope="session")
def dc1_raster_512(dc1_model, dc1_params):
    return t_raster(dc1_model, dc1_params, DC1_BBOX, 512, depth=24)


@pytest.fixture(scope="session")
def two_attractors():
    return GeneratorSystem.from_coeffs([[0, 0, 1], [0, 0, 0.25]])


@pytest.fixture(scope="session")
def circle():
    return GeneratorSystem.from_coeffs([[0, 0, 1]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
