import logging

import pytest

from confband.splines import KernelSpec

# acceptance criteria register one line each here; printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def haar():
    return KernelSpec.haar()


@pytest.fixture(scope="session")
def bl2():
    return KernelSpec.battle_lemarie(2)


@pytest.fixture(scope="session")
def bl3():
    return KernelSpec.battle_lemarie(3)


@pytest.fixture(scope="session")
def bl4():
    return KernelSpec.battle_lemarie(4)


@pytest.fixture(scope="session")
def biweight():
    return KernelSpec.convolution("biweight")


@pytest.fixture(autouse=True)
def _quiet_clamp_warnings():
    logging.getLogger("confband").setLevel(logging.ERROR)
    yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
