import numpy as np
import pytest

from graphdenoise.signal import Signal


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def random_signal(rng, shape):
    return Signal(rng.random(int(np.prod(shape))), shape)


@pytest.fixture
def make_random():
    return random_signal



def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None:
        return
    entry = item.config._acceptance.setdefault(tuple(m.args), {"passed": True, "props": {}})
    if report.failed or (report.when == "call" and not report.passed):
        entry["passed"] = False
    entry["props"].update(dict(item.user_properties))


def _fmt_prop(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.4g}"
    return str(v)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion that ran."""
    table = getattr(config, "_acceptance", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), entry in sorted(table.items()):
        status = "PASS" if entry["passed"] else "FAIL"
        props = " ".join(f"{k}={_fmt_prop(v)}" for k, v in entry["props"].items())
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  [{props}]")
