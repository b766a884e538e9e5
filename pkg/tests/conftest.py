import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy import integrate

from phicopula.basis import make_haar_family
from phicopula.copula import CopulaModel, new_model
from phicopula.partition import sinkhorn

settings.register_profile(
    "default",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# --------------------------------------------------------------------------
# every model built during the session, for the margin-uniformity check
# --------------------------------------------------------------------------

BUILT_MODELS: dict = {}
_original_init = CopulaModel.__init__


def _recording_init(self, *args, **kwargs):
    _original_init(self, *args, **kwargs)
    key = (id(self.family), self.matrix.tobytes())
    BUILT_MODELS.setdefault(key, (self.family, np.array(self.matrix)))


CopulaModel.__init__ = _recording_init

ACCEPTANCE_MODULE = "test_acceptance.py"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config._criterion_results = {}


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so that the margin check sees every model the suite built
    items.sort(key=lambda item: item.path.name == ACCEPTANCE_MODULE)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    results = item.config._criterion_results
    key = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        results[key] = results.get(key, True) and not failed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._criterion_results
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")


def haar_cell_model(family, m):
    """Haar model whose density on cell (i, j) is ``p * m[i, j]``.

    Built from the values of phi at the cell midpoints, independently of the
    partition module.
    """
    p = family.size
    mids = (np.arange(p) + 0.5) / p
    w = family.phi(mids).T  # w @ w.T = p I
    return new_model(family, w @ m @ w.T / p)


def random_doubly_stochastic(rng, p):
    return sinkhorn(rng.uniform(0.05, 1.0, size=(p, p)))


def debye(n, x):
    """``D_n(x) = n / x^n int_0^x t^n / (e^t - 1) dt``."""
    val, _ = integrate.quad(lambda t: t**n / np.expm1(t) if t != 0 else float(n == 1), 0.0, x,
                            epsabs=1e-14, epsrel=1e-13)
    return n / x**n * val


def frank_rho(theta):
    return 1.0 - 12.0 / theta * (debye(1, theta) - debye(2, theta))


def frank_tau(theta):
    return 1.0 - 4.0 / theta * (1.0 - debye(1, theta))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def haar8():
    return make_haar_family(3)
