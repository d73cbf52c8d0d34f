"""
Set families over [n] as bitmasks, the predicates used as theorem hypotheses,
and the checkable lemmas about intersections (reduction to a small subfamily
with empty intersection, overlap with the union of a core, size of a union of
pairwise intersecting sets).
"""

import logging
import re
from functools import reduce
from itertools import combinations
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from extremal.errors import FamilyFormatError, HypothesisError
from extremal.models import MAX_GROUND_SET, IntersectionSpec, SizeRule, SubsetFamily

logger = logging.getLogger(__name__)

SET_HEADER = re.compile(r"^set-family\s+n=(\d+)\s*$")
EMPTY_MEMBER = "-"


def mask_from_elements(elements: Iterable[int], n: int) -> int:
    """
    Build the bitmask of a subset of [n].

    Args:
        elements: Elements in 1..n
        n: Size of the ground set

    Returns:
        Bitmask with bit i-1 set for each element i.

    Raises:
        ValueError: If an element lies outside 1..n.
    """
    mask = 0
    for element in elements:
        if element < 1 or element > n:
            raise ValueError(f"element {element} is outside 1..{n}")
        mask |= 1 << (element - 1)
    return mask


def elements_of(mask: int) -> List[int]:
    """Ascending elements of the subset a bitmask encodes."""
    elements = []
    position = 1
    while mask:
        if mask & 1:
            elements.append(position)
        mask >>= 1
        position += 1
    return elements


def make_family(n: int, members: Iterable[Iterable[int]]) -> SubsetFamily:
    """Build a family from lists of elements."""
    return SubsetFamily(n=n, members=tuple(mask_from_elements(m, n) for m in members))


def full_set(n: int) -> int:
    """Bitmask of [n]."""
    return (1 << n) - 1


def subsets_of_size(n: int, k: int) -> Iterator[int]:
    """All k-subsets of [n] in lexicographic order."""
    for combo in combinations(range(n), k):
        yield sum(1 << i for i in combo)


def canonical_subsets(n: int) -> Iterator[int]:
    """All subsets of [n], by size and then lexicographically."""
    for k in range(n + 1):
        yield from subsets_of_size(n, k)


def uniform_family(n: int, k: int) -> SubsetFamily:
    """The family of all k-subsets of [n]."""
    return SubsetFamily(n=n, members=tuple(subsets_of_size(n, k)))


def permute_family(F: SubsetFamily, permutation: Sequence[int]) -> SubsetFamily:
    """
    Relabel the ground set.

    Args:
        F: Family to relabel
        permutation: permutation[i-1] is the new label of element i

    Returns:
        The relabelled family, members in the same order.
    """
    if sorted(permutation) != list(range(1, F.n + 1)):
        raise ValueError(f"not a permutation of 1..{F.n}")
    members = tuple(
        mask_from_elements((permutation[e - 1] for e in elements_of(mask)), F.n)
        for mask in F.members
    )
    return SubsetFamily(n=F.n, members=members)


def intersection_size(a: int, b: int) -> int:
    """Size of the intersection of two subsets."""
    return (a & b).bit_count()


def global_intersection(F: SubsetFamily) -> int:
    """Intersection of all members; [n] for the empty family."""
    return reduce(lambda x, y: x & y, F.members, full_set(F.n))


def find_L_violation(F: SubsetFamily, L: Sequence[int]) -> Optional[Tuple[int, int]]:
    """First pair of member indices whose intersection size is not in L."""
    allowed = set(L)
    members = F.members
    for i, j in combinations(range(len(members)), 2):
        if intersection_size(members[i], members[j]) not in allowed:
            return (i, j)
    return None


def is_L_intersecting(F: SubsetFamily, spec: IntersectionSpec) -> bool:
    """True iff every two distinct members meet in a size from L."""
    return find_L_violation(F, spec.L) is None


def find_t_wise_violation(
    F: SubsetFamily, L: Sequence[int], t: int
) -> Optional[Tuple[int, ...]]:
    """
    First t-tuple of member indices whose common intersection size is not in L.

    Intersections of the partial tuples are carried down the recursion, so each
    tuple costs one AND.
    """
    allowed = set(L)
    members = F.members
    m = len(members)
    if m < t:
        return None

    def extend(
        start: int, chosen: List[int], running: int
    ) -> Optional[Tuple[int, ...]]:
        if len(chosen) == t:
            return None if running.bit_count() in allowed else tuple(chosen)
        for index in range(start, m - (t - len(chosen)) + 1):
            chosen.append(index)
            found = extend(index + 1, chosen, running & members[index])
            chosen.pop()
            if found:
                return found
        return None

    return extend(0, [], full_set(F.n))


def is_t_wise_L_intersecting(F: SubsetFamily, spec: IntersectionSpec) -> bool:
    """True iff every t distinct members have a common intersection size in L."""
    return find_t_wise_violation(F, spec.L, spec.t) is None


def size_profile(F: SubsetFamily) -> List[int]:
    """Size of each member, in member order."""
    return [mask.bit_count() for mask in F.members]


def size_allowed(size: int, spec: IntersectionSpec) -> bool:
    """Whether one member size (or dimension) passes the size rule."""
    if spec.size_rule == SizeRule.NONE:
        return True
    if spec.size_rule == SizeRule.NOT_IN_L:
        return size not in spec.L
    return size in (spec.K or ())


def find_size_rule_violation(F: SubsetFamily, spec: IntersectionSpec) -> Optional[int]:
    """Index of the first member whose size breaks the size rule."""
    for index, size in enumerate(size_profile(F)):
        if not size_allowed(size, spec):
            return index
    return None


def check_size_rule(F: SubsetFamily, spec: IntersectionSpec) -> bool:
    """True iff every member size passes the size rule of the constraints."""
    return find_size_rule_violation(F, spec) is None


def find_sperner_violation(F: SubsetFamily) -> Optional[Tuple[int, int]]:
    """Pair (i, j) with member i strictly contained in member j, if any."""
    members = F.members
    for i, a in enumerate(members):
        for j, b in enumerate(members):
            if i != j and a & b == a:
                return (i, j)
    return None


def is_sperner_sets(F: SubsetFamily) -> bool:
    """True iff no member is a subset of another member."""
    return find_sperner_violation(F) is None


def intersection_witness(F: SubsetFamily) -> List[int]:
    """
    Indices of a subfamily whose intersection equals the global intersection.

    Seeds with the first member and appends, in member order, each member that
    strictly shrinks the running intersection, stopping once the global
    intersection is reached. Every append removes at least one element, so at
    most (first member size - global size + 1) indices are returned.
    """
    if not F.members:
        return []
    target = global_intersection(F)
    chosen = [0]
    running = F.members[0]
    for index in range(1, F.m):
        if running == target:
            break
        shrunk = running & F.members[index]
        if shrunk != running:
            chosen.append(index)
            running = shrunk
    return chosen


def helly_reduce(F: SubsetFamily) -> SubsetFamily:
    """
    Reduce a family with empty intersection to at most k+1 members that still
    have empty intersection, k being the largest member size.

    Args:
        F: Family whose members have empty common intersection

    Returns:
        The subfamily, members kept in their original order.

    Raises:
        HypothesisError: If the members have a common element.
    """
    common = global_intersection(F)
    if common:
        raise HypothesisError(
            "empty-intersection",
            f"members share the elements {elements_of(common)}",
            elements_of(common),
        )
    indices = intersection_witness(F)
    logger.debug("Reduced %d members to %d", F.m, len(indices))
    return SubsetFamily(n=F.n, members=tuple(F.members[i] for i in indices))


def core_overlap_check(H: SubsetFamily, F: int, l1: int) -> bool:
    """
    Check that a set meeting every member of an empty-intersection core in at
    least l1 elements meets the union of the core in at least l1 + 1 elements.

    Args:
        H: Core family with empty common intersection
        F: Subset, not a member of H
        l1: Positive lower bound on |F & H_i|

    Returns:
        Whether |F & union(H)| >= l1 + 1.

    Raises:
        HypothesisError: Naming the precondition that fails.
    """
    if l1 < 1:
        raise HypothesisError("positive-l1", f"l1 must be positive, got {l1}", [l1])
    if not H.members:
        raise HypothesisError("nonempty-core", "the core family is empty")
    common = global_intersection(H)
    if common:
        raise HypothesisError(
            "empty-intersection",
            "core members share a common element",
            elements_of(common),
        )
    if F in H.members:
        raise HypothesisError(
            "outside-core", "F is a member of the core", [H.members.index(F)]
        )
    short = [i for i, h in enumerate(H.members) if intersection_size(F, h) < l1]
    if short:
        raise HypothesisError(
            "overlap-at-least-l1",
            f"F meets core members {short} in fewer than {l1} elements",
            short,
        )
    union = reduce(lambda x, y: x | y, H.members, 0)
    return intersection_size(union, F) >= l1 + 1


def union_size_check(H: SubsetFamily) -> bool:
    """
    Check |union(H)| <= k + (t-1)(k-1) for t pairwise intersecting sets of size
    at most k.

    Raises:
        HypothesisError: If H has fewer than two members or two members are
            disjoint.
    """
    if H.m < 2:
        raise HypothesisError("at-least-two", "need at least two members", [H.m])
    for i, j in combinations(range(H.m), 2):
        if not H.members[i] & H.members[j]:
            raise HypothesisError(
                "pairwise-intersecting", f"members {i} and {j} are disjoint", [i, j]
            )
    k = H.max_size
    union = reduce(lambda x, y: x | y, H.members, 0)
    return union.bit_count() <= k + (H.m - 1) * (k - 1)


def format_set_family(F: SubsetFamily) -> str:
    """Render a family in the set-family text format."""
    lines = [f"set-family n={F.n}"]
    for mask in F.members:
        elements = elements_of(mask)
        lines.append(" ".join(str(e) for e in elements) if elements else EMPTY_MEMBER)
    return "\n".join(lines) + "\n"


def parse_set_family(text: str) -> SubsetFamily:
    """
    Parse the set-family text format.

    The first line is `set-family n=<n>`; each following line up to the first
    blank line (or the end) is one member, written as ascending elements, or
    `-` for the empty set.

    Raises:
        FamilyFormatError: With the line number of the first problem.
    """
    lines = text.splitlines()
    if not lines:
        raise FamilyFormatError(1, "missing `set-family n=<n>` header")
    header = SET_HEADER.match(lines[0].strip())
    if not header:
        raise FamilyFormatError(1, f"expected `set-family n=<n>`, got {lines[0]!r}")
    n = int(header.group(1))
    if n > MAX_GROUND_SET:
        raise FamilyFormatError(1, f"n={n} exceeds the limit of {MAX_GROUND_SET}")

    members = []
    seen = {}
    for line_number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped:
            if any(rest.strip() for rest in lines[line_number:]):
                logger.warning("Ignoring text after the blank line %d", line_number)
            break
        if stripped == EMPTY_MEMBER:
            elements = []
        else:
            try:
                elements = [int(token) for token in stripped.split()]
            except ValueError as e:
                raise FamilyFormatError(line_number, f"not an integer list: {e}") from e
        if any(a >= b for a, b in zip(elements, elements[1:])):
            raise FamilyFormatError(line_number, "elements must be strictly ascending")
        try:
            mask = mask_from_elements(elements, n)
        except ValueError as e:
            raise FamilyFormatError(line_number, str(e)) from e
        if mask in seen:
            raise FamilyFormatError(
                line_number, f"duplicates the member on line {seen[mask]}"
            )
        seen[mask] = line_number
        members.append(mask)
    return SubsetFamily(n=n, members=tuple(members))


def load_set_family(path: str) -> SubsetFamily:
    """
    Read a set family from a file.

    Raises:
        FileNotFoundError: If the file does not exist.
        PermissionError: If the file cannot be read.
        FamilyFormatError: If the content is malformed.
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            text = file.read()
    except FileNotFoundError as e:
        logger.error("File not found: %s", e)
        raise
    except PermissionError as e:
        logger.error("Permission denied: %s", e)
        raise
    family = parse_set_family(text)
    logger.info("Loaded %d members over n=%d from %s", family.m, family.n, path)
    return family
