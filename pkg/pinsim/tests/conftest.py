import pytest

from pinsim.disorder import parse_disorder_law
from pinsim.walks import build_kernel_table


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true",
                     help="Run the desk-scale tests marked slow.")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale runs, enabled by --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def kernel_table():
    return build_kernel_table("binomial4", 2000)


@pytest.fixture(scope="session")
def small_table():
    return build_kernel_table("binomial4", 64)


@pytest.fixture(params=["gaussian", "rademacher"])
def disorder_law(request):
    return parse_disorder_law(request.param)
