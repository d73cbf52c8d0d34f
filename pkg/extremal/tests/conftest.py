"""Common test fixtures"""

import pytest

from extremal import utils
from extremal.models import IntersectionSpec, SearchProblem, SizeRule, Universe
from extremal.setfamily import make_family, uniform_family


@pytest.fixture(autouse=True, name="reset_config_cache")
def fixture_reset_config_cache():
    """Reset the config cache before each test to ensure consistent state."""
    utils.config_cache = {}
    yield
    utils.config_cache = {}


@pytest.fixture(name="sample_config")
def fixture_sample_config():
    """Sample config data for testing."""
    return {
        "enumeration": {"max_vectors": 4096},
        "search": {
            "candidate_cap": 100,
            "time_budget": None,
            "threads": 1,
            "budget_check_interval": 16,
            "span_mask_max_vectors": 64,
        },
    }


@pytest.fixture(name="star_family")
def fixture_star_family():
    """The star {1}, {1,2}, ..., {1,5}: L={1}-intersecting, extremal for n=5."""
    return make_family(5, [[1], [1, 2], [1, 3], [1, 4], [1, 5]])


@pytest.fixture(name="pairs_of_four")
def fixture_pairs_of_four():
    """All 2-subsets of [4]: L={0,1}-intersecting with sizes outside L."""
    return uniform_family(4, 2)


@pytest.fixture(name="make_problem")
def fixture_make_problem():
    """Factory for search problems with pairwise defaults."""

    def _make_problem(n, L, size_rule=SizeRule.NONE, K=None, **kwargs):
        spec_kwargs = {"L": tuple(L), "K": K, "size_rule": size_rule}
        for key in ("t", "mode"):
            if key in kwargs:
                spec_kwargs[key] = kwargs.pop(key)
        universe = kwargs.pop("universe", Universe.SETS)
        return SearchProblem(
            universe=universe, n=n, spec=IntersectionSpec(**spec_kwargs), **kwargs
        )

    return _make_problem
