import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from qnnilp.synth import running_example_dnn, running_example_qnn

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=600)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def qnn():
    return running_example_qnn()


@pytest.fixture
def dnn():
    return running_example_dnn()


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = dict(getattr(acceptance, "RESULTS", {}))
    for rep in terminalreporter.stats.get("failed", []) + terminalreporter.stats.get("error", []):
        name = rep.nodeid.rpartition("::")[2]
        if name.startswith("test_criterion_"):
            number = int(name.split("_")[2])
            results.setdefault(number, f"criterion {number:2d}: FAIL  raised before reporting")
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
