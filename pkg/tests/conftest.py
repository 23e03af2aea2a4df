import copy

import pytest


BASE_CONFIG = {
    "seed": 42,
    "horizon": 600.0,
    "rrc": {},
    "population": [{"count": 1, "profile": "WEB", "cell": "c1"}],
    "stations": [{"id": "rnc1", "service_rate": 200.0}],
    "routing": {"default": "rnc1"},
}


@pytest.fixture
def base_config():
    return copy.deepcopy(BASE_CONFIG)


def scenario_config(**overrides):
    doc = copy.deepcopy(BASE_CONFIG)
    doc.update(overrides)
    return doc


_ACCEPTANCE_RESULTS = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
