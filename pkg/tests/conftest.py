import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_OUTCOMES: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    n, title = mark.args
    ok = call.excinfo is None
    _OUTCOMES.setdefault(n, []).append((title, item.name, "PASS" if ok else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        runs = _OUTCOMES[n]
        title = runs[0][0]
        failed = [name for _, name, status in runs if status == "FAIL"]
        status = "FAIL" if failed else "PASS"
        extra = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n:>2} {status}: {title}{extra}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_amps(rng, n, rmax):
    """``n`` complex amplitudes with modulus at most ``rmax``."""
    rad = rmax * np.sqrt(rng.uniform(0, 1, n))
    return rad * np.exp(1j * rng.uniform(0, 2 * math.pi, n))
