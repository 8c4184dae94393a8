import os

import pytest

from decumulate.lifetimes import MortalityParams, sample_lambdas
from decumulate.params import ModelParams

NIGHTLY = os.environ.get("DECUMULATE_NIGHTLY") == "1"


def pytest_collection_modifyitems(config, items):
    if NIGHTLY:
        return
    skip = pytest.mark.skip(reason="nightly run; set DECUMULATE_NIGHTLY=1")
    for item in items:
        if "nightly" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def params():
    return ModelParams(c=0.052)


@pytest.fixture(scope="session")
def lambdas(params):
    return sample_lambdas(params.mortality, 200, 20240601)


@pytest.fixture(scope="session")
def flat_params():
    """No longevity uncertainty, so the hazard is exactly lambda."""
    return ModelParams(mortality=MortalityParams(sigma_hat=0.0), c=0.052)


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def _report(number, title, passed, detail, seconds=None):
        took = f" [{seconds:.1f}s]" if seconds is not None else ""
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title}: {detail}{took}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
