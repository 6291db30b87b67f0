import numpy as np
import pytest

from rosia.catalog import build_onboard_catalog
from rosia.skygen import synthetic_sky


@pytest.fixture(scope="session")
def sky():
    return synthetic_sky()


@pytest.fixture(scope="session")
def reference_catalog(sky):
    """Magnitude-6 onboard catalog over the synthetic sky (~4934 stars)."""
    return build_onboard_catalog(sky, mag_limit=6.0)


@pytest.fixture(scope="session")
def bright_catalog(sky):
    """Small magnitude-4.5 catalog for desk-scale solver experiments."""
    return build_onboard_catalog(sky, mag_limit=4.5)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
