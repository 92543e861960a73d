import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "lasn",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("lasn")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_svm_instance(rng, n, d, bias=True):
    """Gaussian features with labels from a noisy linear rule (both classes present)."""
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d)
    s = X @ w + 0.5 * rng.standard_normal(n)
    y = np.where(s >= np.median(s), 1.0, -1.0)
    if bias:
        X = np.hstack([X, np.ones((n, 1))])
    return X, y


ACCEPTANCE_LINES = {}


def report_criterion(number, ok, detail):
    """Record and print one pass/fail line, then fail the test if needed."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
