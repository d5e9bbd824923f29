import os

import numpy as np
import pytest

from stableld.dynamics import DoublingSystem, GaussSystem, PowerObservable
from stableld.transfer_spectral import build_ulam


def pytest_configure(config):
    # keep artifacts of CLI tests out of the working tree
    os.environ.setdefault("STABLELD_OUTPUT", str(config.rootpath / ".pytest_output"))
    config._criterion_lines = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])


@pytest.fixture
def criterion(request):
    """``criterion(k, ok, detail)`` prints and records one PASS/FAIL line."""

    def record(k: int, ok: bool, detail: str) -> bool:
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        request.config._criterion_lines[k] = line
        return ok

    return record


@pytest.fixture(scope="session")
def gauss():
    return GaussSystem()


@pytest.fixture(scope="session")
def doubling():
    return DoublingSystem()


@pytest.fixture(scope="session")
def gauss_obs15(gauss):
    return PowerObservable(gauss, 1.5, centered=True)


@pytest.fixture(scope="session")
def doubling_obs075(doubling):
    return PowerObservable(doubling, 0.75, centered=False)


@pytest.fixture(scope="session")
def gauss_ulam_4096(gauss):
    return build_ulam(gauss, 4096)


@pytest.fixture(scope="session")
def gauss_ulam_1024(gauss):
    return build_ulam(gauss, 1024)


@pytest.fixture(scope="session")
def doubling_ulam_1024(doubling):
    return build_ulam(doubling, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
