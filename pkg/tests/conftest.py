import os

import pytest


def pytest_addoption(parser):
    parser.addoption("--large", action="store_true", default=False,
                     help="run the 25-qubit acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--large"):
        return
    skip = pytest.mark.skip(reason="needs --large")
    for item in items:
        if "large" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "large: 25-qubit runs, enable with --large")


@pytest.fixture(scope="session")
def data_dir():
    import groundgen
    return os.path.join(os.path.dirname(groundgen.__file__), "data")
