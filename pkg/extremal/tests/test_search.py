"""Tests for the exact searches, the t-wise partition and bound conformance."""

from concurrent.futures import ThreadPoolExecutor
from itertools import combinations, count
from unittest.mock import patch

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal import utils
from extremal.bounds import (
    EKR,
    Q_POSITIVE_THRESHOLD,
    Q_SPERNER_THRESHOLD,
    SNEVILY_CONJECTURE,
    SNEVILY_PREFIX,
)
from extremal.errors import HypothesisError
from extremal.models import (
    IntersectionSpec,
    Mode,
    SearchProblem,
    SearchResult,
    SizeRule,
    SubsetFamily,
    Universe,
)
from extremal.qspace import intersection_dim, is_L_intersecting_subspaces
from extremal.search import (
    _SearchState,
    build_candidates,
    compatibility_graph,
    max_pairwise_family,
    max_twise_family,
    solve,
    twise_partition,
    verify_bounds,
)
from extremal.setfamily import (
    find_size_rule_violation,
    find_t_wise_violation,
    is_L_intersecting,
    is_sperner_sets,
    make_family,
    permute_family,
    uniform_family,
)


def clique_number(candidates, compatible):
    """Maximum clique size of the compatibility graph, computed by networkx."""
    if not candidates:
        return 0
    G = nx.Graph()
    G.add_nodes_from(range(len(candidates)))
    G.add_edges_from(
        (i, j)
        for i, j in combinations(range(len(candidates)), 2)
        if compatible(candidates[i], candidates[j])
    )
    _, weight = nx.max_weight_clique(G, weight=None)
    return weight


def exhaustive_optimum(candidates, compatible):
    """Largest pairwise compatible subfamily, found by listing every one."""
    best = 0

    def extend(start, chosen):
        nonlocal best
        best = max(best, len(chosen))
        for i in range(start, len(candidates)):
            if all(compatible(candidates[i], candidates[j]) for j in chosen):
                extend(i + 1, chosen + [i])

    extend(0, [])
    return best


def set_compatibility(L, sperner):
    """Pairwise rule of a set problem, written out directly."""
    allowed = set(L)

    def compatible(a, b):
        common = a & b
        if common.bit_count() not in allowed:
            return False
        return not sperner or (common != a and common != b)

    return compatible


def _problem(n, L, rule=SizeRule.NONE, **kwargs):
    # hypothesis tests cannot take function-scoped fixtures
    return SearchProblem(
        n=n, spec=IntersectionSpec(L=tuple(L), size_rule=rule), **kwargs
    )


@pytest.mark.parametrize(
    "n, L, K, expected",
    [(5, [1], (2,), 4), (6, [1, 2], (3,), 10)],
)
def test_ekr_optima(make_problem, n, L, K, expected):
    """Test uniform intersecting families against C(n-1, k-1)."""
    result = solve(make_problem(n, L, SizeRule.IN_K, K=K))
    assert result.optimum == expected
    assert result.completed
    assert result.witness.m == expected


def test_snevily_prefix_optimum(make_problem):
    """Test n=6, L={0,1} with sizes outside L: optimum 15 and a valid witness."""
    problem = make_problem(6, [0, 1], SizeRule.NOT_IN_L)
    result = solve(problem)
    assert result.optimum == 15
    assert result.completed
    assert is_L_intersecting(result.witness, problem.spec)
    assert find_size_rule_violation(result.witness, problem.spec) is None
    assert result.bound_reports


def test_star_optimum(make_problem, star_family):
    """Test that the star is extremal for n=5, L={1} without a size rule."""
    result = solve(make_problem(5, [1]))
    assert result.optimum == star_family.m == 5


def test_subspace_optimum(make_problem):
    """Test that the 7 planes of GF(2)^3 are extremal for L={1}."""
    problem = make_problem(
        3, [1], SizeRule.NOT_IN_L, universe=Universe.SUBSPACES, q=2
    )
    result = solve(problem)
    assert result.optimum == 7
    assert is_L_intersecting_subspaces(result.witness, [1])
    assert {member.dim for member in result.witness.members} == {2}


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 4),
    st.sets(st.integers(0, 4), min_size=1, max_size=3),
    st.sampled_from([SizeRule.NONE, SizeRule.NOT_IN_L]),
    st.booleans(),
)
def test_pairwise_matches_networkx(n, L, rule, sperner):
    """Test the branch and bound against networkx on random small problems."""
    L = sorted(L)
    problem = _problem(n, L, rule, sperner=sperner)
    compatible = set_compatibility(L, sperner)
    expected = clique_number(build_candidates(problem), compatible)
    result = solve(problem)
    assert result.optimum == expected
    assert result.witness.m == expected


@settings(max_examples=50, deadline=None)
@given(
    st.sets(st.integers(0, 31), min_size=1, max_size=20),
    st.sets(st.integers(0, 5), min_size=1, max_size=2),
    st.booleans(),
)
def test_candidate_pool_matches_exhaustive_search(pool, L, sperner):
    """Test the branch and bound against listing every family of a small pool."""
    L = sorted(L)
    problem = _problem(5, L, sperner=sperner)
    candidates = sorted(pool)
    expected = exhaustive_optimum(candidates, set_compatibility(L, sperner))
    result = max_pairwise_family(problem, candidates=candidates)
    assert result.optimum == expected
    assert set(result.witness.members) <= pool
    assert is_L_intersecting(result.witness, problem.spec)
    if sperner:
        assert is_sperner_sets(result.witness)


@settings(max_examples=30, deadline=None)
@given(
    st.sets(st.integers(0, 31), min_size=1, max_size=16),
    st.sets(st.integers(0, 4), min_size=1, max_size=2),
    st.booleans(),
    st.permutations(range(1, 6)),
    st.randoms(use_true_random=False),
)
def test_optimum_invariant_under_relabelling(pool, L, sperner, permutation, rng):
    """Test that relabelling the ground set leaves the optimum unchanged."""
    problem = _problem(5, sorted(L), sperner=sperner)
    candidates = sorted(pool)
    relabelled = list(
        permute_family(SubsetFamily(n=5, members=tuple(candidates)), permutation)
        .members
    )
    rng.shuffle(relabelled)
    first = max_pairwise_family(problem, candidates=candidates)
    second = max_pairwise_family(problem, candidates=relabelled)
    assert first.optimum == second.optimum

    # the relabelled witness of the full search is again extremal
    result = solve(problem)
    moved = permute_family(result.witness, permutation)
    assert moved.m == result.optimum
    assert is_L_intersecting(moved, problem.spec)
    assert not sperner or is_sperner_sets(moved)


def test_node_counter_is_exact_across_threads():
    """Test that nodes counted from several threads are not lost."""
    state = _SearchState(None)
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda _: [state.tick() for _ in range(1000)], range(8)))
    assert state.nodes == 8000


def test_candidate_pool_refuses_symmetry_breaking():
    """Test that an explicit pool cannot be searched from one root per size."""
    problem = _problem(4, [0], symmetry_breaking=True)
    with pytest.raises(ValueError):
        max_pairwise_family(problem, candidates=[1, 2])


@settings(max_examples=15, deadline=None)
@given(st.sets(st.integers(0, 3), min_size=1, max_size=2), st.booleans())
def test_subspace_search_matches_networkx(L, sperner):
    """Test the subspace search of GF(2)^3 against networkx."""
    L = sorted(L)
    problem = _problem(3, L, universe=Universe.SUBSPACES, q=2, sperner=sperner)

    def compatible(U, V):
        common = intersection_dim(U, V)
        if common not in L:
            return False
        return not sperner or common not in (U.dim, V.dim)

    expected = clique_number(build_candidates(problem), compatible)
    assert solve(problem).optimum == expected


def test_threads_and_symmetry_agree(make_problem):
    """Test that threads and symmetry breaking leave the optimum unchanged."""
    base = solve(make_problem(6, [0, 1], SizeRule.NOT_IN_L))
    threaded = solve(make_problem(6, [0, 1], SizeRule.NOT_IN_L, threads=3))
    broken = solve(
        make_problem(6, [0, 1], SizeRule.NOT_IN_L, symmetry_breaking=True)
    )
    both = solve(
        make_problem(
            6, [0, 1], SizeRule.NOT_IN_L, symmetry_breaking=True, threads=2
        )
    )
    assert base.optimum == threaded.optimum == broken.optimum == both.optimum == 15
    planes = make_problem(
        3, [1], universe=Universe.SUBSPACES, q=2, symmetry_breaking=True
    )
    assert solve(planes).optimum == 7


def test_single_thread_witness_is_reproducible(make_problem):
    """Test that two sequential runs return the same witness."""
    problem = make_problem(5, [0, 2], SizeRule.NOT_IN_L)
    assert solve(problem).witness == solve(problem).witness


def test_span_masks_match_rank_arithmetic(make_problem):
    """Test that both compatibility paths build the same graph."""
    problem = make_problem(3, [0, 1], universe=Universe.SUBSPACES, q=3)
    candidates = build_candidates(problem)
    by_masks = compatibility_graph(problem, candidates)
    utils.config_cache = {"search": {"span_mask_max_vectors": 1}}
    assert compatibility_graph(problem, candidates) == by_masks


def test_time_budget_stops_search(make_problem, caplog):
    """Test that an exhausted budget returns an incomplete result."""
    utils.config_cache = {"search": {"budget_check_interval": 1}}
    problem = make_problem(6, [0, 1], SizeRule.NOT_IN_L, time_budget=1.0)
    with patch("extremal.search.time.monotonic", side_effect=count(0.0, 10.0)):
        result = solve(problem)
    assert not result.completed
    assert result.optimum < 15
    assert "Time budget exhausted" in caplog.text

    report = verify_bounds(result, problem)
    assert not report.tight
    assert not report.completed


def test_candidate_cap(make_problem):
    """Test that too many candidates are refused before searching."""
    with pytest.raises(ValueError):
        build_candidates(make_problem(5, [0], candidate_cap=10))
    utils.config_cache = {"search": {"candidate_cap": 8}}
    with pytest.raises(ValueError):
        solve(make_problem(4, [0, 1]))


def test_search_dispatch_errors(make_problem):
    """Test the arity and universe checks of the two searches."""
    with pytest.raises(ValueError):
        max_pairwise_family(make_problem(3, [0], t=3, mode=Mode.T_WISE))
    planes = make_problem(3, [1], universe=Universe.SUBSPACES, q=2)
    with pytest.raises(ValueError):
        max_twise_family(planes)


def brute_force_twise(n, L, t):
    """Largest t-wise L-intersecting family of subsets of [n], by exhaustion."""
    candidates = list(range(1 << n))
    for size in range(len(candidates), 0, -1):
        for members in combinations(candidates, size):
            family = SubsetFamily(n=n, members=members)
            if find_t_wise_violation(family, L, t) is None:
                return size
    return 0


@pytest.mark.parametrize(
    "n, L, t",
    [(3, [0], 3), (3, [1], 3), (3, [0, 1], 3), (3, [1, 2], 4), (2, [0], 3)],
)
def test_twise_matches_brute_force(make_problem, n, L, t):
    """Test the forward-checking search against exhaustion."""
    problem = make_problem(n, L, t=t, mode=Mode.T_WISE)
    result = solve(problem)
    assert result.completed
    assert result.optimum == brute_force_twise(n, L, t)
    assert find_t_wise_violation(result.witness, L, t) is None


def test_twise_on_pairs(make_problem):
    """Test that t=2 in t-wise mode agrees with the pairwise search."""
    pairwise = solve(make_problem(4, [1]))
    twise = max_twise_family(make_problem(4, [1], t=2, mode=Mode.T_WISE))
    assert twise.optimum == pairwise.optimum


def test_twise_partition_pairwise(pairs_of_four):
    """Test that for t=2 every member moves to B and all checks pass."""
    partition = twise_partition(pairs_of_four, [0, 1], 2)
    assert partition.all_green
    assert partition.B == partition.C
    assert len(partition.B) == 6
    assert partition.F == []
    assert sorted(partition.order) == list(range(6))


def test_twise_partition_three_wise(pairs_of_four):
    """Test the split of all pairs of [4] with t=3."""
    partition = twise_partition(pairs_of_four, [0, 1], 3)
    assert partition.order[:3] == [0, 1, 2]
    assert partition.B == list(pairs_of_four.members[:3])
    assert partition.F == list(pairs_of_four.members[3:])
    assert partition.all_green


def test_twise_partition_reports_cross_failure():
    """Test that a failing cross condition is reported with a witness."""
    A = make_family(3, [[1, 2], [1, 3]])
    partition = twise_partition(A, [0], 3)
    assert not partition.checks["cross-intersections"]
    assert partition.witnesses["cross-intersections"] == [0, 1]
    assert partition.checks["containment"]
    assert not partition.all_green


def test_twise_partition_hypotheses():
    """Test the two preconditions of the partition."""
    with pytest.raises(HypothesisError) as info:
        twise_partition(make_family(4, [[1, 2], [1, 3], [1, 4]]), [0], 3)
    assert info.value.hypothesis == "t-wise-L-intersecting"
    assert info.value.witness == [0, 1, 2]

    with pytest.raises(HypothesisError) as info:
        twise_partition(make_family(3, [[1]]), [1], 2)
    assert info.value.hypothesis == "sizes-outside-L"


def test_verify_bounds_tight(make_problem):
    """Test that a completed extremal search is tight for the prefix bound."""
    problem = make_problem(6, [0, 1], SizeRule.NOT_IN_L)
    report = verify_bounds(solve(problem), problem)
    assert report.conforms
    assert report.regime == "max-L-below-sizes"
    assert SNEVILY_PREFIX in report.tight
    assert SNEVILY_CONJECTURE in report.tight
    assert not report.conjecture_exceeded


def test_verify_bounds_flags_violations(make_problem, caplog):
    """Test a crafted optimum above the proven and conjectured bounds."""
    problem = make_problem(6, [0, 1], SizeRule.NOT_IN_L)
    result = SearchResult(optimum=16, witness=SubsetFamily(n=6))
    report = verify_bounds(result, problem)
    assert not report.conforms
    assert SNEVILY_PREFIX in report.violated
    assert SNEVILY_CONJECTURE in report.conjecture_exceeded
    assert SNEVILY_CONJECTURE not in report.violated
    assert "violates" in caplog.text


def test_verify_bounds_strict(make_problem):
    """Test that reaching a strict bound is a violation."""
    problem = make_problem(
        3, [1], SizeRule.IN_K, K=(1,), universe=Universe.SUBSPACES, q=2
    )
    result = solve(problem)
    assert result.optimum == 1
    assert verify_bounds(result, problem).conforms

    crafted = SearchResult(optimum=7, witness=result.witness)
    assert Q_POSITIVE_THRESHOLD in verify_bounds(crafted, problem).violated


def test_verify_bounds_ekr_equality_case(make_problem):
    """Test that a family of size C(n-1, k-1) must be a star when n > 2k."""
    problem = make_problem(5, [1], SizeRule.IN_K, K=(2,))
    result = solve(problem)
    report = verify_bounds(result, problem)
    assert report.conforms
    assert EKR in report.tight

    triangle = make_family(5, [[1, 2], [1, 3], [2, 3], [1, 4]])
    crafted = SearchResult(optimum=4, witness=triangle)
    report = verify_bounds(crafted, problem)
    assert f"{EKR}-equality" in report.violated
    assert EKR not in report.tight

    # n = 2k has extremal families other than stars
    problem = make_problem(4, [1], SizeRule.IN_K, K=(2,))
    crafted = SearchResult(
        optimum=3, witness=make_family(4, [[1, 2], [1, 3], [2, 3]])
    )
    assert verify_bounds(crafted, problem).conforms


def test_verify_bounds_q_sperner_equality_case(make_problem, caplog):
    """Test that reaching qbinom(n, s) forces L = {0, ..., s-1}."""
    problem = make_problem(
        3, [0], SizeRule.IN_K, K=(1,), universe=Universe.SUBSPACES, q=2, sperner=True
    )
    result = solve(problem)
    assert result.optimum == 7
    report = verify_bounds(result, problem)
    assert report.conforms
    assert Q_SPERNER_THRESHOLD in report.tight

    problem = make_problem(
        3, [1], SizeRule.IN_K, K=(1,), universe=Universe.SUBSPACES, q=2, sperner=True
    )
    crafted = SearchResult(optimum=7, witness=result.witness)
    report = verify_bounds(crafted, problem)
    assert f"{Q_SPERNER_THRESHOLD}-equality" in report.violated
    assert Q_SPERNER_THRESHOLD not in report.tight
    assert "outside its equality case" in caplog.text


def test_verify_bounds_incomplete_equality(make_problem):
    """Test that equality is not tight when the search did not finish."""
    problem = make_problem(6, [0, 1], SizeRule.NOT_IN_L)
    result = SearchResult(optimum=15, witness=SubsetFamily(n=6), completed=False)
    report = verify_bounds(result, problem)
    assert not report.tight
    assert report.conforms


def test_uniform_family_fixture_matches_search(make_problem, pairs_of_four):
    """Test that all pairs of [4] are extremal for L={0,1} and k=2."""
    result = solve(make_problem(4, [0, 1], SizeRule.IN_K, K=(2,)))
    assert result.optimum == pairs_of_four.m == uniform_family(4, 2).m
