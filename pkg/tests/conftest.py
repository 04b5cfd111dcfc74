import numpy as np
import pytest

from whitney.grassmann import validate_frame


def random_frame(rng, m, k):
    Q, R = np.linalg.qr(rng.standard_normal((m, k)))
    return validate_frame(Q * np.sign(np.diag(R)))


def random_unit(rng, m):
    v = rng.standard_normal(m)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
