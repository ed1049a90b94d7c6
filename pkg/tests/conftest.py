import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from groupfisher import distributions as dists
from groupfisher.models import make_model, scale_to_params

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# (tag, k, a valid theta away from the identity)
MODEL_CASES = [
    ("loc1", None, np.array([0.7])),
    ("locK", 2, np.array([0.3, -1.1])),
    ("scale1", None, np.array([1.7])),
    ("ls1", None, np.array([-0.4, 2.3])),
    ("corr", None, np.array([0.45])),
    ("scaleK", 2, scale_to_params(np.array([[1.4, 0.3], [0.3, 0.8]]))),
    ("lsK", 2, np.concatenate([[0.5, -0.2], scale_to_params(np.array([[1.2, -0.4], [-0.4, 1.5]]))])),
]


@pytest.fixture(params=MODEL_CASES, ids=[c[0] for c in MODEL_CASES])
def model_case(request):
    tag, k, theta = request.param
    return make_model(tag, k), theta


@pytest.fixture
def normal1():
    return dists.std_normal(1)


@pytest.fixture
def normal2():
    return dists.std_normal(2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
