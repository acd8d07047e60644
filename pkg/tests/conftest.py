import numpy as np
import pytest

from tailwalk.bgmeasure import BGMeasure
from tailwalk.steplaw import CONFIG_A, CONFIG_B, CONFIG_C


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def measure_a():
    return BGMeasure(CONFIG_A, b=1.0, c=1.0)


@pytest.fixture(scope="session")
def measure_b():
    return BGMeasure(CONFIG_B, b=1.0, c=0.0)


@pytest.fixture(scope="session")
def measure_c():
    return BGMeasure(CONFIG_C, b=1.0, c=0.0)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request, capsys):
    """Record one PASS/FAIL line per acceptance criterion and echo it to the terminal."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
