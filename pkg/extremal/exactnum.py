"""
Exact counting: binomial and Gaussian binomial coefficients.

Naturals are Python ints and rationals are fractions.Fraction, so nothing here
ever rounds or overflows.
"""

from fractions import Fraction
from functools import lru_cache
from math import comb, prod

Natural = int
Rational = Fraction


def binom(n: int, k: int) -> Natural:
    """
    Binomial coefficient with the convention C(n, k) = 0 outside 0 <= k <= n.

    Args:
        n: Top index, a natural number
        k: Bottom index, any integer

    Returns:
        C(n, k)
    """
    if k < 0 or n < 0 or k > n:
        return 0
    return comb(n, k)


def _check_field_order(q: int) -> None:
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")


@lru_cache(maxsize=4096)
def qbinom(n: int, k: int, q: int) -> Natural:
    """
    Gaussian binomial coefficient, the number of k-dimensional subspaces of GF(q)^n.

    Evaluated as one exact fraction: the product of (q^(n-i) - 1) over the
    product of (q^(k-i) - 1), for 0 <= i < k.

    Args:
        n: Dimension of the ambient space
        k: Dimension of the subspaces counted
        q: Base, at least 2

    Returns:
        The Gaussian binomial coefficient, 0 when k < 0 or k > n.

    Raises:
        ValueError: If q < 2.
    """
    _check_field_order(q)
    if k < 0 or n < 0 or k > n:
        return 0
    numerator = prod(q ** (n - i) - 1 for i in range(k))
    denominator = prod(q ** (k - i) - 1 for i in range(k))
    value, remainder = divmod(numerator, denominator)
    assert remainder == 0, f"qbinom({n},{k},{q}) did not divide exactly"
    return value


def power(q: int, e: int) -> Natural:
    """Exact q^e for natural e."""
    if e < 0:
        raise ValueError(f"exponent must be natural, got {e}")
    return q**e


def binom_sum(n: int, low: int, high: int) -> Natural:
    """Sum of C(n, i) for low <= i <= high; indices below zero contribute nothing."""
    return sum(binom(n, i) for i in range(low, high + 1))


def qbinom_sum(n: int, low: int, high: int, q: int) -> Natural:
    """Sum of qbinom(n, i, q) for low <= i <= high."""
    _check_field_order(q)
    return sum(qbinom(n, i, q) for i in range(low, high + 1))


def as_decimal_string(value: int) -> str:
    """Render an exact natural for output that must not lose precision."""
    return str(int(value))


def rational_to_string(value: Fraction) -> str:
    """Render a rational as "p/q", or just "p" when it is integral."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
