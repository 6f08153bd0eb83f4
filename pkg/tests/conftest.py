import numpy as np
import pytest

from anisoag import NormSpec, trace_boundary

# the norm matrix exercised throughout the suite
NORM_SPECS = {
    "euclidean": NormSpec.euclidean(),
    "lp1.5": NormSpec.lp(1.5),
    "lp3": NormSpec.lp(3),
    "lp4": NormSpec.lp(4),
    "ellipse2to1": NormSpec.ellipse(2.0, 1.0),
}


@pytest.fixture(scope="session")
def boundaries():
    """BoundaryParam at N=1024 for every test norm (traced once per session)."""
    return {name: trace_boundary(spec, 1024) for name, spec in NORM_SPECS.items()}


@pytest.fixture(scope="session")
def bp_euclid(boundaries):
    return boundaries["euclidean"]


@pytest.fixture(scope="session")
def bp_lp3(boundaries):
    return boundaries["lp3"]


@pytest.fixture(scope="session")
def bp_lp4(boundaries):
    return boundaries["lp4"]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
