import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from berkson_kde import BerksonModel, GaussianMixture, catalog_1d, catalog_3d

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def densities_1d():
    return {e.slug: e.mixture for e in catalog_1d()}


@pytest.fixture(scope="session")
def densities_3d():
    return {e.slug: e.mixture for e in catalog_3d()}


@pytest.fixture
def std_normal():
    return GaussianMixture.normal()


@pytest.fixture
def normal_model(std_normal):
    """Standard normal f_X with unit error variance."""
    return BerksonModel.isotropic(std_normal, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Collects pass/fail lines so they show in the terminal summary even when output is captured."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
