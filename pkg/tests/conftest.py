import numpy as np
import pytest

from hybridcd import kernels
from hybridcd.model import Dataset, NetworkParams, generate_dataset, init_params

BACKENDS = [b.BACKEND for b in kernels.available_backends()]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def random_instance(rng, n, p, m, margin=None):
    """Random dataset and parameters; with ``margin``, every |w_r . X_s| > margin."""
    while True:
        seed = int(rng.integers(2**32))
        data = generate_dataset(n, p, seed)
        params = init_params(m, p, seed + 1)
        if margin is None:
            return params, data
        Z = params.W @ data.features.T
        if np.all(np.abs(Z) > margin):
            return params, data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def one_dim(w, x=1.0, y=2.0, a=1.0):
    """m = p = n = 1 instance: loss is 0.5 * (a * max(w * x, 0) - y)^2."""
    return NetworkParams([[w]], [a]), Dataset([[x]], [y])


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
