import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def regression_band(name: str, observed: dict, rel: float = 0.2) -> dict:
    """Record `observed` on first use; afterwards every value must stay within `rel` of the stored one."""
    path = FIXTURES / f"{name}.json"
    if not path.exists():
        FIXTURES.mkdir(exist_ok=True)
        path.write_text(json.dumps(observed, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return observed
    stored = json.loads(path.read_text(encoding="utf-8"))
    for key, value in stored.items():
        got = observed[key]
        assert abs(got - value) <= rel * abs(value), f"{name}.{key}: {got} drifted from recorded {value}"
    return stored


@pytest.fixture
def band():
    return regression_band


# -- acceptance reporting -------------------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", doc, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {name}: {detail}")
