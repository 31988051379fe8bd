import pytest

from gclms import desk_params, run_ensemble, static_scenario

import _criteria

# The three canonical steady-state configurations the acceptance criteria
# reference: 16 taps, mu = 0.05, sigma_x2 = 1, sigma_v2 = 1e-3, rho = 5e-4,
# ensemble 200, seed 12345, one static phase long enough to converge.


def _fixture_run(n_active):
    scenario = static_scenario(n_active, duration=5000, ensemble=200, seed=12345)
    return scenario, run_ensemble(scenario, desk_params())


@pytest.fixture(scope="session")
def sparse_run():
    """S = 15/16: one active tap."""
    return _fixture_run(1)


@pytest.fixture(scope="session")
def semi_sparse_run():
    """S = 1/2: eight active taps."""
    return _fixture_run(8)


@pytest.fixture(scope="session")
def dense_run():
    """S = 0: all sixteen taps active."""
    return _fixture_run(16)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    terminalreporter.section("acceptance checklist")
    for num in sorted(_criteria.CRITERIA):
        title = _criteria.CRITERIA[num]
        if num in _criteria.RESULTS:
            passed, detail = _criteria.RESULTS[num]
            verdict = "PASS" if passed else "FAIL"
            terminalreporter.write_line(f"criterion {num:2d}: {verdict}  {title}  [{detail}]")
        else:
            terminalreporter.write_line(f"criterion {num:2d}: NOT RUN  {title}")
