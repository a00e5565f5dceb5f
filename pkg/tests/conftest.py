import numpy as np
import pytest

from hardylab.config import builtin_scenarios
from hardylab.eigensolver import minimize_rayleigh


def scenario(name):
    cfg = builtin_scenarios()[name]
    return cfg, cfg.build_mesh(), cfg.build_weights()


def random_field(rng, mesh, scale=1.0):
    return mesh.pin(scale * rng.standard_normal(mesh.n + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def lambda_hat():
    """Eigensolver estimates for every built-in scenario, computed once."""
    out = {}
    for name in builtin_scenarios():
        cfg, mesh, (w1, w2) = scenario(name)
        out[name] = minimize_rayleigh(w1, w2, float(cfg.physics.p), mesh).lambda_est
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
