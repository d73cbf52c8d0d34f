"""
Subspaces of GF(q)^n for prime q: canonical bases, enumeration of the subspace
lattice, intersection dimensions, containment and the Sperner/LYM checks.

A subspace is identified by its reduced row echelon basis, so equality and
hashing of Subspace models coincide with equality of subspaces.
"""

import logging
import re
from collections import Counter
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime

from extremal.errors import FamilyFormatError, HypothesisError
from extremal.exactnum import qbinom
from extremal.models import SpernerReport, Subspace, SubspaceFamily
from extremal.utils import get_setting

logger = logging.getLogger(__name__)

DEFAULT_MAX_VECTORS = 1 << 20
SUBSPACE_HEADER = re.compile(r"^subspace-family\s+n=(\d+)\s+q=(\d+)\s*$")
ZERO_BLOCK = "-"


def check_field(q: int) -> None:
    """
    Raises:
        ValueError: If q is not a prime.
    """
    if q < 2 or not isprime(q):
        raise ValueError(f"q must be prime, got {q}")


def check_enumeration_size(n: int, q: int) -> None:
    """
    Raises:
        ValueError: If GF(q)^n has more vectors than the configured cap.
    """
    cap = get_setting("enumeration", "max_vectors", DEFAULT_MAX_VECTORS)
    if q**n > cap:
        raise ValueError(f"GF({q})^{n} has {q**n} vectors, above the cap of {cap}")


def rref_mod_q(
    rows: Sequence[Sequence[int]], q: int, n: int
) -> Tuple[Tuple[int, ...], ...]:
    """
    Reduced row echelon form over GF(q), zero rows dropped.

    Args:
        rows: Vectors of length n, entries taken mod q
        q: Prime field order
        n: Row length

    Returns:
        The nonzero rows of the RREF, which span the same subspace.
    """
    matrix = np.array(rows, dtype=np.int64).reshape(len(rows), n) % q
    pivot_row = 0
    for col in range(n):
        if pivot_row == matrix.shape[0]:
            break
        nonzero = np.nonzero(matrix[pivot_row:, col])[0]
        if nonzero.size == 0:
            continue
        found = pivot_row + int(nonzero[0])
        if found != pivot_row:
            matrix[[pivot_row, found]] = matrix[[found, pivot_row]]
        inverse = pow(int(matrix[pivot_row, col]), -1, q)
        matrix[pivot_row] = (matrix[pivot_row] * inverse) % q
        factors = matrix[:, col].copy()
        factors[pivot_row] = 0
        matrix = (matrix - np.outer(factors, matrix[pivot_row])) % q
        pivot_row += 1
    return tuple(tuple(int(x) for x in row) for row in matrix[:pivot_row])


def rank_mod_q(rows: Sequence[Sequence[int]], q: int, n: int) -> int:
    """Rank over GF(q)."""
    return len(rref_mod_q(rows, q, n))


def make_subspace(rows: Sequence[Sequence[int]], n: int, q: int) -> Subspace:
    """The subspace spanned by any list of vectors, in canonical form."""
    check_field(q)
    return Subspace(n=n, q=q, basis=rref_mod_q(rows, q, n))


def zero_subspace(n: int, q: int) -> Subspace:
    """The zero subspace of GF(q)^n."""
    return Subspace(n=n, q=q, basis=())


def _subspaces_with_pivots(n: int, q: int, pivots: Tuple[int, ...]) -> List[Subspace]:
    """Every RREF basis with the given pivot columns."""
    pivot_set = set(pivots)
    free = [
        (row, col)
        for row, pivot in enumerate(pivots)
        for col in range(pivot + 1, n)
        if col not in pivot_set
    ]
    subspaces = []
    for values in product(range(q), repeat=len(free)):
        basis = [[0] * n for _ in pivots]
        for row, pivot in enumerate(pivots):
            basis[row][pivot] = 1
        for (row, col), value in zip(free, values):
            basis[row][col] = value
        # generated directly in RREF
        subspaces.append(
            Subspace.model_construct(n=n, q=q, basis=tuple(tuple(r) for r in basis))
        )
    return subspaces


def enumerate_subspaces(n: int, q: int, dim: Optional[int] = None) -> SubspaceFamily:
    """
    All subspaces of GF(q)^n (or all of one dimension) in canonical order.

    Bases are produced by choosing pivot columns and filling the free entries,
    so each subspace appears exactly once. Members are ordered by dimension and
    then lexicographically by basis entries.

    Args:
        n: Dimension of the ambient space
        q: Prime field order
        dim: Only this dimension when given

    Returns:
        The family of subspaces.

    Raises:
        ValueError: If q is not prime or q^n exceeds the configured cap.
    """
    check_field(q)
    check_enumeration_size(n, q)
    dims = range(n + 1) if dim is None else ([dim] if 0 <= dim <= n else [])
    members: List[Subspace] = []
    for k in dims:
        layer = []
        for pivots in combinations(range(n), k):
            layer.extend(_subspaces_with_pivots(n, q, pivots))
        layer.sort(key=lambda subspace: subspace.basis)
        members.extend(layer)
    logger.debug("Enumerated %d subspaces of GF(%d)^%d", len(members), q, n)
    return SubspaceFamily.model_construct(n=n, q=q, members=tuple(members))


def count_table(n: int, q: int) -> Dict[int, Tuple[int, int]]:
    """Enumerated count and Gaussian binomial for every dimension."""
    counts = Counter(member.dim for member in enumerate_subspaces(n, q).members)
    return {k: (counts.get(k, 0), qbinom(n, k, q)) for k in range(n + 1)}


def _check_same_space(U: Subspace, V: Subspace) -> None:
    if U.n != V.n or U.q != V.q:
        raise ValueError(
            f"subspaces live in GF({U.q})^{U.n} and GF({V.q})^{V.n}"
        )


def intersection_dim(U: Subspace, V: Subspace) -> int:
    """
    dim(U & V) = dim U + dim V - rank of the stacked bases.

    Raises:
        ValueError: If U and V live in different ambient spaces.
    """
    _check_same_space(U, V)
    stacked = list(U.basis) + list(V.basis)
    return U.dim + V.dim - rank_mod_q(stacked, U.q, U.n)


def reduce_against(vector: Sequence[int], U: Subspace) -> Tuple[int, ...]:
    """Remainder of a vector after clearing U's pivot columns."""
    residue = [x % U.q for x in vector]
    for row, pivot in zip(U.basis, U.pivots):
        factor = residue[pivot]
        if factor:
            residue = [(x - factor * r) % U.q for x, r in zip(residue, row)]
    return tuple(residue)


def contains(U: Subspace, V: Subspace) -> bool:
    """True iff V is a subspace of U."""
    _check_same_space(U, V)
    if V.dim > U.dim:
        return False
    return all(not any(reduce_against(row, U)) for row in V.basis)


def vector_index(vector: Sequence[int], q: int) -> int:
    """Position of a vector in the base-q enumeration of GF(q)^n."""
    index = 0
    for x in reversed(vector):
        index = index * q + x
    return index


def vectors_of(U: Subspace) -> List[Tuple[int, ...]]:
    """Every vector of U, q^dim of them."""
    vectors = []
    for coefficients in product(range(U.q), repeat=U.dim):
        vector = [0] * U.n
        for c, row in zip(coefficients, U.basis):
            if c:
                vector = [(x + c * r) % U.q for x, r in zip(vector, row)]
        vectors.append(tuple(vector))
    return vectors


def span_mask(U: Subspace) -> int:
    """Bitmask over GF(q)^n with a bit set for each vector of U."""
    mask = 0
    for vector in vectors_of(U):
        mask |= 1 << vector_index(vector, U.q)
    return mask


def find_subspace_L_violation(
    F: SubspaceFamily, L: Sequence[int]
) -> Optional[Tuple[int, int]]:
    """First pair of member indices whose intersection dimension is not in L."""
    allowed = set(L)
    for i, j in combinations(range(F.m), 2):
        if intersection_dim(F.members[i], F.members[j]) not in allowed:
            return (i, j)
    return None


def is_L_intersecting_subspaces(F: SubspaceFamily, L: Sequence[int]) -> bool:
    """True iff every two distinct members meet in a dimension from L."""
    return find_subspace_L_violation(F, L) is None


def find_subspace_sperner_violation(F: SubspaceFamily) -> Optional[Tuple[int, int]]:
    """Pair (i, j) with member i strictly inside member j, if any."""
    for i, U in enumerate(F.members):
        for j, V in enumerate(F.members):
            if i != j and U.dim < V.dim and contains(V, U):
                return (i, j)
    return None


def is_sperner(F: SubspaceFamily) -> bool:
    """True iff no member is contained in another member."""
    return find_subspace_sperner_violation(F) is None


def dims_outside_L(F: SubspaceFamily, L: Sequence[int]) -> bool:
    """True iff no member has its dimension in L."""
    allowed = set(L)
    return all(member.dim not in allowed for member in F.members)


def _require_sperner(F: SubspaceFamily) -> None:
    violation = find_subspace_sperner_violation(F)
    if violation:
        i, j = violation
        raise HypothesisError(
            "sperner", f"member {i} is contained in member {j}", list(violation)
        )


def lym_sum(F: SubspaceFamily) -> Fraction:
    """
    Sum over dimensions k of |F_k| / qbinom(n, k, q), exactly.

    Raises:
        HypothesisError: If F is not Sperner.
    """
    _require_sperner(F)
    counts = Counter(member.dim for member in F.members)
    return sum(
        (Fraction(count, qbinom(F.n, k, F.q)) for k, count in counts.items()),
        start=Fraction(0),
    )


def q_sperner_report(F: SubspaceFamily, s: Optional[int] = None) -> SpernerReport:
    """
    Compare a Sperner family with the q-Sperner bound and, when its dimensions
    are at most s <= n/2, with qbinom(n, s, q), whose only extremal family is
    the set of all s-dimensional subspaces.

    Args:
        F: Sperner family
        s: Dimension cap, the largest member dimension when omitted

    Raises:
        HypothesisError: If F is not Sperner or has a member above dimension s.
    """
    _require_sperner(F)
    max_dim = max((member.dim for member in F.members), default=0)
    if s is None:
        s = max_dim
    if max_dim > s:
        raise HypothesisError("dimension-cap", f"a member has dimension above {s}")
    bound = qbinom(F.n, F.n // 2, F.q)
    capped = qbinom(F.n, s, F.q)
    checked = s <= F.n // 2 and F.m == capped
    holds = None
    if checked:
        holds = all(member.dim == s for member in F.members)
    return SpernerReport(
        size=F.m,
        sperner_bound=bound,
        within_bound=F.m <= bound,
        dimension_cap=s,
        capped_bound=capped,
        equality_checked=checked,
        equality_holds=holds,
    )


def q_sperner_check(F: SubspaceFamily) -> bool:
    """
    True iff F respects the q-Sperner bound and, in the equality case of the
    dimension-capped bound, consists of all subspaces of one dimension.
    """
    report = q_sperner_report(F)
    return report.within_bound and report.equality_holds is not False


def format_subspace_family(F: SubspaceFamily) -> str:
    """Render a family in the subspace-family text format."""
    if F.q > 10:
        raise ValueError("the text format writes entries as single digits (q <= 10)")
    blocks = []
    for member in F.members:
        if member.dim == 0:
            blocks.append(ZERO_BLOCK)
        else:
            rows = ("".join(str(x) for x in row) for row in member.basis)
            blocks.append("\n".join(rows))
    body = "\n\n".join(blocks)
    return f"subspace-family n={F.n} q={F.q}\n" + (body + "\n" if body else "")


def _parse_block(
    rows: List[Tuple[int, str]], n: int, q: int
) -> Subspace:
    if len(rows) == 1 and rows[0][1] == ZERO_BLOCK:
        return zero_subspace(n, q)
    vectors = []
    for line_number, text in rows:
        if len(text) != n or not text.isdigit():
            raise FamilyFormatError(line_number, f"expected {n} digits, got {text!r}")
        vector = [int(c) for c in text]
        if any(x >= q for x in vector):
            raise FamilyFormatError(line_number, f"entry outside GF({q})")
        vectors.append(vector)
    subspace = make_subspace(vectors, n, q)
    if subspace.dim < len(vectors):
        logger.warning(
            "Basis rows from line %d are dependent, block spans dimension %d",
            rows[0][0],
            subspace.dim,
        )
    return subspace


def parse_subspace_family(text: str) -> SubspaceFamily:
    """
    Parse the subspace-family text format.

    The first line is `subspace-family n=<n> q=<q>`; members follow as blocks of
    basis rows (digit strings of length n) separated by blank lines, and `-`
    alone stands for the zero subspace. Rows need not be reduced.

    Raises:
        FamilyFormatError: With the line number of the first problem.
    """
    lines = text.splitlines()
    header = SUBSPACE_HEADER.match(lines[0].strip()) if lines else None
    if not header:
        raise FamilyFormatError(1, "expected `subspace-family n=<n> q=<q>`")
    n, q = int(header.group(1)), int(header.group(2))
    if not isprime(q):
        raise FamilyFormatError(1, f"q must be prime, got {q}")

    blocks: List[List[Tuple[int, str]]] = []
    current: List[Tuple[int, str]] = []
    for line_number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if stripped:
            current.append((line_number, stripped))
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)

    members: List[Subspace] = []
    seen: Dict[Subspace, int] = {}
    for block in blocks:
        subspace = _parse_block(block, n, q)
        if subspace in seen:
            raise FamilyFormatError(
                block[0][0], f"duplicates the member starting on line {seen[subspace]}"
            )
        seen[subspace] = block[0][0]
        members.append(subspace)
    return SubspaceFamily(n=n, q=q, members=tuple(members))


def load_subspace_family(path: str) -> SubspaceFamily:
    """
    Read a subspace family from a file.

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
    family = parse_subspace_family(text)
    logger.info(
        "Loaded %d subspaces of GF(%d)^%d from %s", family.m, family.q, family.n, path
    )
    return family


def family_of(subspaces: Iterable[Subspace], n: int, q: int) -> SubspaceFamily:
    """Wrap subspaces of GF(q)^n into a validated family."""
    return SubspaceFamily(n=n, q=q, members=tuple(subspaces))
