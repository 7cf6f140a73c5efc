from pathlib import Path

import pytest

from boundform import WellConfig, build_basis

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--full-ensemble", action="store_true", default=False,
                     help="run the full 200-member, 2000-pulse stochastic ensemble")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full-ensemble"):
        return
    skip = pytest.mark.skip(reason="needs --full-ensemble")
    for item in items:
        if "full_ensemble" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":").split(".")[0]), s)):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def basis():
    return build_basis(WellConfig())


@pytest.fixture(scope="session")
def configs():
    return CONFIGS
