"""
Common fixtures for testing the command line
"""

import pytest

from extremal import utils

STAR_TEXT = "set-family n=5\n1\n1 2\n1 3\n1 4\n1 5\n"
PAIRS_TEXT = "set-family n=4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n"


@pytest.fixture(autouse=True, name="reset_config_cache")
def fixture_reset_config_cache():
    """Reset the config cache so every command reads the shipped defaults."""
    utils.config_cache = {}
    yield
    utils.config_cache = {}


@pytest.fixture(name="write_file")
def fixture_write_file(tmp_path):
    """Write text to a file under tmp_path and return its path."""

    def _write_file(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write_file


@pytest.fixture(name="star_file")
def fixture_star_file(write_file):
    """The star {1}, {1,2}, ..., {1,5} as a family file."""
    return write_file("star.txt", STAR_TEXT)


@pytest.fixture(name="pairs_file")
def fixture_pairs_file(write_file):
    """All 2-subsets of [4] as a family file."""
    return write_file("pairs.txt", PAIRS_TEXT)
