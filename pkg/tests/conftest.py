import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uavfas.scenario import AoParams, PsoParams, default_scenario

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

LAM = 0.0107


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scenario():
    return default_scenario(0)


@pytest.fixture(scope="session")
def small():
    """Cheap scenario for pipeline tests: short mission, small swarm, few sweeps."""
    s = default_scenario(0, K=3)
    return s.with_updates(N=6, T=13.5, q_I=(300.0, 400.0), q_F=(500.0, 400.0), M_t=4, M_r=4,
                          D_wavelengths=6.0, pso=PsoParams(T_max=8, particles=8), ao=AoParams(l_max=3))


ACCEPTANCE = {}  # criterion number -> (passed, detail); filled by test_acceptance.py


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
