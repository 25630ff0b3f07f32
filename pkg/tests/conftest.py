import numpy as np
import pytest


def random_spd(rng, n, cond=10.0):
    """SPD matrix with prescribed condition number and random eigenbasis."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n) * np.exp(rng.uniform(-1, 1))
    X = (Q * lam) @ Q.T
    return 0.5 * (X + X.T)


def random_sym(rng, n):
    Z = rng.standard_normal((n, n))
    return 0.5 * (Z + Z.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary: one PASS/FAIL line per criterion -------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.outcome != "passed":
        key = props["criterion"]
        _ACCEPTANCE[key] = _ACCEPTANCE.get(key, True) and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}")
