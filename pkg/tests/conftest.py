import os
import sys
from importlib import resources

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from kernelscope.conv_core import ConvShape  # noqa: E402
from kernelscope.exec_model import DeviceSpec  # noqa: E402

FIXTURES = resources.files("kernelscope") / "fixtures"
REFERENCE_SHAPE = ConvShape(16384, 128, 48, 48)


@pytest.fixture
def p100():
    return DeviceSpec.load(str(FIXTURES / "p100.json"))


@pytest.fixture
def table2_path():
    return str(FIXTURES / "table2.csv")


@pytest.fixture
def p100_path():
    return str(FIXTURES / "p100.json")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
