"""
Utils for parsing command-line parameters of the extremal commands.
"""

import os
from typing import List, Tuple

from extremal.models import SizeRule

RANGE_SEPARATOR = ".."


def int_list(text: str) -> Tuple[int, ...]:
    """
    Parse a comma list of integers such as "0,1,3".

    Returns:
        The integers in the given order

    Raises:
        ValueError: If an item is not an integer or the list is empty.
    """
    items = [item.strip() for item in text.split(",")]
    if not text.strip() or any(not item for item in items):
        raise ValueError(f"empty item in {text!r}")
    return tuple(int(item) for item in items)


def int_range(text: str) -> Tuple[int, int]:
    """
    Parse an inclusive range `a..b`; a single integer `a` means `a..a`.

    Raises:
        ValueError: If the bounds are not integers or a > b.
    """
    if RANGE_SEPARATOR in text:
        low, high = text.split(RANGE_SEPARATOR, 1)
        low, high = int(low), int(high)
    else:
        low = high = int(text)
    if low > high:
        raise ValueError(f"empty range {text!r}")
    return low, high


def size_rule_list(text: str) -> List[SizeRule]:
    """Parse a comma list of size rules such as "none,not-in-L"."""
    return [SizeRule(item.strip()) for item in text.split(",")]


def is_debug_mode() -> bool:
    """
    Check if the application is running in debug mode.

    Returns:
        True if in debug mode, False otherwise
    """
    return os.getenv("DEBUG", "false").lower() == "true"
