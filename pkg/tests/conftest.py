import sys

import numpy as np
import pytest

from odma_ura.codebooks import build_codebooks
from odma_ura.config import SystemConfig
from odma_ura.fec import PolarCode


@pytest.fixture(scope="session")
def cfg():
    return SystemConfig().validate()


@pytest.fixture(scope="session")
def books(cfg):
    return build_codebooks(cfg)


@pytest.fixture(scope="session")
def code(cfg):
    return PolarCode(cfg.fec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    RESULTS = getattr(module, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split("-")[0]), k)):
        terminalreporter.write_line(RESULTS[key])
