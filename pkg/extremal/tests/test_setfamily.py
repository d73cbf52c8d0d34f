"""Tests for set families, their predicates and the intersection lemmas."""

from functools import reduce
from itertools import combinations
from unittest.mock import mock_open, patch

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from extremal.errors import FamilyFormatError, HypothesisError
from extremal.models import IntersectionSpec, Mode, SizeRule, SubsetFamily
from extremal.setfamily import (
    canonical_subsets,
    core_overlap_check,
    elements_of,
    find_L_violation,
    find_size_rule_violation,
    find_sperner_violation,
    find_t_wise_violation,
    format_set_family,
    full_set,
    global_intersection,
    helly_reduce,
    intersection_witness,
    is_L_intersecting,
    is_sperner_sets,
    is_t_wise_L_intersecting,
    load_set_family,
    make_family,
    mask_from_elements,
    parse_set_family,
    permute_family,
    size_profile,
    subsets_of_size,
    union_size_check,
    uniform_family,
)


@st.composite
def families(draw, max_n=6, min_size=0, max_members=8):
    """Random families of distinct subsets of [n]."""
    n = draw(st.integers(1, max_n))
    members = draw(
        st.lists(
            st.integers(0, full_set(n)),
            min_size=min_size,
            max_size=max_members,
            unique=True,
        )
    )
    return SubsetFamily(n=n, members=tuple(members))


def test_masks_and_elements():
    """Test conversion between element lists and bitmasks."""
    assert mask_from_elements([1, 3], 4) == 0b101
    assert elements_of(0b1010) == [2, 4]
    assert elements_of(0) == []
    assert full_set(3) == 0b111
    with pytest.raises(ValueError):
        mask_from_elements([5], 4)


def test_canonical_order():
    """Test that subsets come by size, then lexicographically."""
    assert list(subsets_of_size(3, 2)) == [0b011, 0b101, 0b110]
    order = [elements_of(mask) for mask in canonical_subsets(3)]
    assert order == [[], [1], [2], [3], [1, 2], [1, 3], [2, 3], [1, 2, 3]]
    assert uniform_family(5, 2).m == 10


def test_family_model_validation():
    """Test that members must be distinct subsets of [n]."""
    with pytest.raises(ValidationError):
        SubsetFamily(n=2, members=(0b1, 0b1))
    with pytest.raises(ValidationError):
        SubsetFamily(n=2, members=(0b100,))
    with pytest.raises(ValidationError):
        SubsetFamily(n=65)
    assert SubsetFamily(n=0).m == 0


def test_permute_family():
    """Test relabelling the ground set."""
    F = make_family(3, [[1], [1, 2]])
    assert permute_family(F, [3, 1, 2]).members == (0b100, 0b101)
    with pytest.raises(ValueError):
        permute_family(F, [1, 1, 2])


def test_l_intersecting_examples(star_family, pairs_of_four):
    """Test the pairwise predicate on the star and on all pairs of [4]."""
    assert is_L_intersecting(star_family, IntersectionSpec(L=(1,)))
    assert is_L_intersecting(pairs_of_four, IntersectionSpec(L=(0, 1)))
    assert find_L_violation(pairs_of_four, [1]) == (0, 5)
    assert find_L_violation(make_family(3, []), [0]) is None


def test_t_wise_examples():
    """Test the t-wise predicate and its witness."""
    F = make_family(4, [[1, 2], [1, 3], [2, 3]])
    spec = IntersectionSpec(L=(0,), t=3, mode=Mode.T_WISE)
    assert is_t_wise_L_intersecting(F, spec)
    assert find_L_violation(F, [0]) == (0, 1)
    G = make_family(4, [[1, 2], [1, 3], [1, 4]])
    assert find_t_wise_violation(G, [0], 3) == (0, 1, 2)
    assert find_t_wise_violation(make_family(4, [[1]]), [0], 3) is None


@given(families(), st.sets(st.integers(0, 6), min_size=1), st.integers(2, 4))
def test_t_wise_violation_matches_brute_force(F, L, t):
    """Test the recursive search against every t-tuple."""
    brute = next(
        (
            combo
            for combo in combinations(range(F.m), t)
            if reduce(lambda x, y: x & y, (F.members[i] for i in combo)).bit_count()
            not in L
        ),
        None,
    )
    assert find_t_wise_violation(F, sorted(L), t) == brute


def test_size_rule():
    """Test the size rules and their witnesses."""
    F = make_family(4, [[1, 2], [1], [1, 2, 3]])
    assert size_profile(F) == [2, 1, 3]
    not_in_l = IntersectionSpec(L=(0, 1), size_rule=SizeRule.NOT_IN_L)
    assert find_size_rule_violation(F, not_in_l) == 1
    in_k = IntersectionSpec(L=(0, 1), K=(2, 3), size_rule=SizeRule.IN_K)
    assert find_size_rule_violation(F, in_k) == 1
    none = IntersectionSpec(L=(0, 1))
    assert find_size_rule_violation(F, none) is None


def test_sperner():
    """Test the antichain predicate and its witness pair."""
    F = make_family(2, [[1], [1, 2]])
    assert find_sperner_violation(F) == (0, 1)
    assert not is_sperner_sets(F)
    assert is_sperner_sets(uniform_family(4, 2))


def test_global_intersection():
    """Test the global intersection, [n] for the empty family."""
    assert global_intersection(make_family(3, [])) == 0b111
    assert global_intersection(make_family(3, [[1, 2], [2, 3]])) == 0b010


@given(families(min_size=1))
def test_intersection_witness_realises_global_intersection(F):
    """Test that the chosen subfamily has the global intersection."""
    chosen = intersection_witness(F)
    common = reduce(lambda x, y: x & y, (F.members[i] for i in chosen))
    assert common == global_intersection(F)
    assert chosen[0] == 0
    assert len(chosen) <= F.members[0].bit_count() - common.bit_count() + 1


@given(families(min_size=1))
def test_helly_reduce(F):
    """Test that at most k+1 members keep an empty intersection."""
    assume(global_intersection(F) == 0)
    H = helly_reduce(F)
    assert global_intersection(H) == 0 if H.m else True
    assert H.m <= F.max_size + 1
    assert set(H.members) <= set(F.members)


def test_helly_reduce_rejects_common_element():
    """Test the empty-intersection hypothesis."""
    with pytest.raises(HypothesisError) as info:
        helly_reduce(make_family(3, [[1, 2], [1, 3]]))
    assert info.value.hypothesis == "empty-intersection"
    assert info.value.witness == [1]


@settings(suppress_health_check=[HealthCheck.filter_too_much])
@given(families(min_size=1), st.integers(0, 63), st.integers(0, 63))
def test_core_overlap(H, a, b):
    """Test that a set meeting every core member in l1 > 0 elements meets the
    union in more."""
    F = (a | b) & full_set(H.n)
    assume(global_intersection(H) == 0)
    assume(F not in H.members)
    l1 = min((F & h).bit_count() for h in H.members)
    assume(l1 >= 1)
    assert core_overlap_check(H, F, l1)


def test_core_overlap_hypotheses():
    """Test each failing precondition of the overlap lemma."""
    H = make_family(3, [[1, 2], [3]])
    cases = [
        (H, 0b111, 0, "positive-l1"),
        (make_family(3, []), 0b111, 1, "nonempty-core"),
        (make_family(3, [[1, 2], [1, 3]]), 0b111, 1, "empty-intersection"),
        (H, 0b011, 1, "outside-core"),
        (H, 0b001, 1, "overlap-at-least-l1"),
    ]
    for core, F, l1, hypothesis in cases:
        with pytest.raises(HypothesisError) as info:
            core_overlap_check(core, F, l1)
        assert info.value.hypothesis == hypothesis


@settings(suppress_health_check=[HealthCheck.filter_too_much])
@given(families(min_size=2, max_members=4))
def test_union_size(H):
    """Test the union bound for pairwise intersecting families."""
    assume(all(a & b for a, b in combinations(H.members, 2)))
    assert union_size_check(H)


def test_union_size_hypotheses():
    """Test the failing preconditions of the union bound."""
    with pytest.raises(HypothesisError) as info:
        union_size_check(make_family(3, [[1]]))
    assert info.value.hypothesis == "at-least-two"
    with pytest.raises(HypothesisError) as info:
        union_size_check(make_family(3, [[1], [2]]))
    assert info.value.hypothesis == "pairwise-intersecting"
    assert info.value.witness == [0, 1]


def test_parse_set_family():
    """Test parsing the text format, including the empty set."""
    F = parse_set_family("set-family n=4\n1 2\n-\n3 4\n")
    assert F.n == 4
    assert [elements_of(mask) for mask in F.members] == [[1, 2], [], [3, 4]]
    assert parse_set_family(format_set_family(F)) == F


def test_parse_set_family_stops_at_blank_line(caplog):
    """Test that text after a blank line is ignored with a warning."""
    F = parse_set_family("set-family n=3\n1\n\n2\n")
    assert F.m == 1
    assert "Ignoring text after the blank line" in caplog.text


@pytest.mark.parametrize(
    "text, line_number",
    [
        ("", 1),
        ("family n=3\n1\n", 1),
        ("set-family n=65\n", 1),
        ("set-family n=3\n1 2\n1 x\n", 3),
        ("set-family n=3\n2 1\n", 2),
        ("set-family n=3\n1 4\n", 2),
        ("set-family n=3\n1\n2\n1\n", 4),
        ("set-family n=3\n1 1\n", 2),
    ],
)
def test_parse_set_family_errors(text, line_number):
    """Test that malformed text reports the offending line."""
    with pytest.raises(FamilyFormatError) as info:
        parse_set_family(text)
    assert info.value.line_number == line_number


def test_load_set_family():
    """Test loading a family file."""
    with patch("builtins.open", mock_open(read_data="set-family n=2\n1\n2\n")):
        F = load_set_family("family.txt")
    assert F.members == (0b01, 0b10)


def test_load_set_family_missing_file(caplog):
    """Test that a missing file is logged and re-raised."""
    with patch("builtins.open", side_effect=FileNotFoundError("family.txt")):
        with pytest.raises(FileNotFoundError):
            load_set_family("family.txt")
    assert "File not found" in caplog.text
