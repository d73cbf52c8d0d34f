"""
Options shared by every test directory
"""

import pytest


def pytest_addoption(parser):
    """Add --runslow for the long conformance grids."""
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config):
    """Register the slow marker."""
    config.addinivalue_line("markers", "slow: long-running search grids")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless --runslow is given."""
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
