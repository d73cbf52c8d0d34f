"""Tests for exact binomial and Gaussian binomial arithmetic."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from extremal.exactnum import (
    as_decimal_string,
    binom,
    binom_sum,
    power,
    qbinom,
    qbinom_sum,
    rational_to_string,
)


def test_binom_values():
    """Test binomial coefficients and the zero convention outside the range."""
    assert binom(5, 2) == 10
    assert binom(6, 3) == 20
    assert binom(4, 0) == 1
    assert binom(4, 5) == 0
    assert binom(4, -1) == 0
    assert binom(200, 100) == binom(199, 99) + binom(199, 100)


def test_qbinom_known_values():
    """Test Gaussian binomials against subspace counts."""
    assert qbinom(3, 1, 2) == 7
    assert qbinom(4, 1, 2) == 15
    assert qbinom(4, 2, 2) == 35
    assert qbinom(5, 2, 2) == 155
    assert qbinom(4, 2, 3) == 130
    assert qbinom(3, 1, 3) == 13
    assert sum(qbinom(4, k, 2) for k in range(5)) == 67


def test_qbinom_edge_cases():
    """Test the boundary dimensions and invalid bases."""
    assert qbinom(0, 0, 2) == 1
    assert qbinom(5, 0, 3) == 1
    assert qbinom(5, 5, 3) == 1
    assert qbinom(3, 4, 2) == 0
    assert qbinom(3, -1, 2) == 0
    with pytest.raises(ValueError):
        qbinom(3, 1, 1)


@given(st.integers(1, 12), st.integers(0, 12), st.sampled_from([2, 3, 4, 5, 7]))
def test_qbinom_pascal_identity(n, k, q):
    """Test qbinom(n, k) = qbinom(n-1, k-1) + q^k qbinom(n-1, k)."""
    assert qbinom(n, k, q) == qbinom(n - 1, k - 1, q) + q**k * qbinom(n - 1, k, q)


@given(st.integers(0, 14), st.integers(0, 14), st.sampled_from([2, 3, 5]))
def test_qbinom_symmetry(n, k, q):
    """Test qbinom(n, k) = qbinom(n, n-k)."""
    if k <= n:
        assert qbinom(n, k, q) == qbinom(n, n - k, q)


def test_power():
    """Test exact powers and the natural exponent check."""
    assert power(2, 100) == 1267650600228229401496703205376
    assert power(3, 0) == 1
    with pytest.raises(ValueError):
        power(2, -1)


def test_sums():
    """Test partial sums of binomials and Gaussian binomials."""
    assert binom_sum(4, 0, 1) == 5
    assert binom_sum(5, 0, 2) == 16
    assert binom_sum(3, -2, 0) == 1
    assert qbinom_sum(4, 0, 4, 2) == 67
    assert qbinom_sum(3, 1, 2, 2) == 14
    with pytest.raises(ValueError):
        qbinom_sum(3, 0, 3, 0)


def test_output_helpers():
    """Test decimal and rational rendering."""
    assert as_decimal_string(2**70) == "1180591620717411303424"
    assert rational_to_string(Fraction(1)) == "1"
    assert rational_to_string(Fraction(6, 35)) == "6/35"
    assert rational_to_string(Fraction(4, 2)) == "2"
