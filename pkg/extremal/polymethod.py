"""
The multilinear polynomial method for two families A, B of subsets.

Each A_i gets the polynomial prod_l (v_{A_i} . x - l), reduced with x_j^2 = x_j,
and each R containing n with |R| <= s gets (1 - x_n) prod_{j in R, j != n} x_j.
Exact rational elimination then certifies that all of them are linearly
independent, which bounds m by a count of monomials.
"""

import logging
import re
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import Matrix, Rational

from extremal.errors import CertificateFormatError, HypothesisError
from extremal.exactnum import binom_sum, rational_to_string
from extremal.models import (
    CrossFamilyCertificate,
    IndependenceCertificate,
    MultilinearPoly,
    SubsetFamily,
)
from extremal.setfamily import (
    elements_of,
    intersection_size,
    mask_from_elements,
    subsets_of_size,
)

logger = logging.getLogger(__name__)

CERTIFICATE_HEADER = re.compile(r"^certificate\s+n=(\d+)\s+s=(\d+)\s*$")
MONOMIAL = re.compile(r"^\{([\d ]*)\}$")


def monomial_order(n: int, s: int) -> List[int]:
    """Monomials of degree at most s in n variables, by size then lexicographically."""
    order = []
    for k in range(min(s, n) + 1):
        order.extend(subsets_of_size(n, k))
    return order


def char_vector(A: int, n: int) -> Tuple[int, ...]:
    """0/1 vector of length n with coordinate j set iff j is in A."""
    if A >> n:
        raise ValueError(f"subset uses elements outside [{n}]")
    return tuple((A >> j) & 1 for j in range(n))


def _poly(n: int, terms: Dict[int, Fraction]) -> MultilinearPoly:
    return MultilinearPoly(n=n, terms={m: c for m, c in terms.items() if c != 0})


def multiply(p: MultilinearPoly, r: MultilinearPoly) -> MultilinearPoly:
    """Product of two multilinear polynomials, reduced with x_j * x_j = x_j."""
    if p.n != r.n:
        raise ValueError("polynomials live over different numbers of variables")
    terms: Dict[int, Fraction] = {}
    for ma, ca in p.terms.items():
        for mb, cb in r.terms.items():
            monomial = ma | mb
            terms[monomial] = terms.get(monomial, Fraction(0)) + ca * cb
    return _poly(p.n, terms)


def scale(p: MultilinearPoly, factor: Fraction) -> MultilinearPoly:
    """Multiply every coefficient by a rational factor."""
    return _poly(p.n, {m: c * factor for m, c in p.terms.items()})


def intersection_poly(A: int, L: Sequence[int], n: int) -> MultilinearPoly:
    """
    Multilinear reduction of prod_{l in L} (sum_{j in A} x_j - l).

    On every 0/1 point v_B it evaluates to prod_l (|A & B| - l).

    Args:
        A: Bitmask of a subset of [n]
        L: Strictly increasing intersection sizes
        n: Number of variables

    Returns:
        The reduced polynomial, of degree at most len(L).
    """
    if A >> n:
        raise ValueError(f"subset uses elements outside [{n}]")
    linear = {1 << j: Fraction(1) for j in range(n) if (A >> j) & 1}
    product = _poly(n, {0: Fraction(1)})
    for l in L:
        factor = dict(linear)
        factor[0] = factor.get(0, Fraction(0)) - l
        product = multiply(product, _poly(n, factor))
    return product


def g_poly(R: int, n: int) -> MultilinearPoly:
    """
    Expansion of (1 - x_n) prod_{j in R, j != n} x_j.

    Raises:
        ValueError: If R does not contain n.
    """
    top = 1 << (n - 1) if n else 0
    if not n or not R & top:
        raise ValueError(f"R must contain {n}")
    if R >> n:
        raise ValueError(f"R uses elements outside [{n}]")
    base = R & ~top
    return _poly(n, {base: Fraction(1), base | top: Fraction(-1)})


def evaluate(p: MultilinearPoly, B: int) -> Fraction:
    """Value of p at the characteristic vector of B."""
    return sum(
        (c for m, c in p.terms.items() if m & B == m), start=Fraction(0)
    )


def independence_certificate(
    polys: Sequence[MultilinearPoly], n: Optional[int] = None, s: Optional[int] = None
) -> IndependenceCertificate:
    """
    Rank of a list of polynomials by exact row reduction over the rationals.

    Rows are the polynomials and columns the monomials of degree at most s, in
    the order of monomial_order; the pivot monomials are the pivot columns of
    the reduced row echelon form, so they do not depend on the row order.

    Args:
        polys: Polynomials sharing the same n
        n: Number of variables, taken from the polynomials when omitted
        s: Degree of the column space, the largest degree when omitted

    Returns:
        Rank, verdict and pivot monomials.
    """
    if n is None:
        n = polys[0].n if polys else 0
    if any(p.n != n for p in polys):
        raise ValueError("polynomials live over different numbers of variables")
    if s is None:
        s = max((p.degree for p in polys), default=0)
    if any(p.degree > s for p in polys):
        raise ValueError(f"a polynomial has degree above {s}")

    columns = monomial_order(n, s)
    column_of = {m: j for j, m in enumerate(columns)}
    rows = []
    for p in polys:
        row = [Rational(0)] * len(columns)
        for monomial, coefficient in p.terms.items():
            row[column_of[monomial]] = Rational(
                coefficient.numerator, coefficient.denominator
            )
        rows.append(row)

    pivots = []
    if rows:
        _, pivot_columns = Matrix(rows).rref()
        pivots = [columns[j] for j in pivot_columns]
    rank = len(pivots)
    return IndependenceCertificate(
        poly_count=len(polys),
        ambient_dimension=len(columns),
        rank=rank,
        independent=rank == len(polys),
        pivot_monomials=pivots,
    )


def check_cross_hypotheses(A: SubsetFamily, B: SubsetFamily, L: Sequence[int]) -> None:
    """
    Check that the pair of families can be certified.

    Raises:
        HypothesisError: For unequal sizes or ground sets, a cross pair i != j
            meeting outside L, A_i not inside B_i, or |A_i| in L.
    """
    if A.n != B.n:
        raise HypothesisError("same-ground-set", f"n={A.n} and n={B.n} differ")
    if A.m != B.m:
        raise HypothesisError("equal-sizes", f"|A|={A.m} but |B|={B.m}", [A.m, B.m])
    allowed = set(L)
    for i, a in enumerate(A.members):
        if a & B.members[i] != a:
            raise HypothesisError(
                "containment", f"A_{i + 1} is not inside B_{i + 1}", [i]
            )
        if a.bit_count() in allowed:
            raise HypothesisError(
                "size-outside-L", f"|A_{i + 1}| = {a.bit_count()} is in L", [i]
            )
    for i, a in enumerate(A.members):
        for j, b in enumerate(B.members):
            if i != j and intersection_size(a, b) not in allowed:
                raise HypothesisError(
                    "cross-intersections-in-L",
                    f"|A_{i + 1} & B_{j + 1}| = {intersection_size(a, b)} is not in L",
                    [i, j],
                )


def auxiliary_sets(n: int, s: int) -> List[int]:
    """The sets R containing n with |R| <= s, in canonical order."""
    if n == 0:
        return []
    top = 1 << (n - 1)
    sets = []
    for k in range(min(s, n)):
        for combo in combinations(range(n - 1), k):
            sets.append(sum(1 << i for i in combo) | top)
    return sets


def lemma27_certify(
    A: SubsetFamily, B: SubsetFamily, L: Sequence[int]
) -> CrossFamilyCertificate:
    """
    Certify the polynomial bound for families A, B with A_i inside B_i,
    |A_i| outside L and |A_i & B_j| in L whenever i != j.

    Builds the intersection polynomial of every A_i and the auxiliary
    polynomial of every R containing n with |R| <= s, checks the evaluation
    pattern on the vectors of B, certifies that all of them are independent and
    confirms the two resulting dimension counts.

    Raises:
        HypothesisError: Naming the failed condition with witness indices.
    """
    L = list(L)
    if not L:
        raise HypothesisError("nonempty-L", "L must be nonempty")
    check_cross_hypotheses(A, B, L)
    n, s = A.n, len(L)

    f_polys = [intersection_poly(a, L, n) for a in A.members]
    g_polys = [g_poly(R, n) for R in auxiliary_sets(n, s)]

    pattern_ok = True
    for j, f in enumerate(f_polys):
        for i, b in enumerate(B.members):
            value = evaluate(f, b)
            if (value == 0) != (i != j):
                logger.warning(
                    "Evaluation pattern fails at f_%d(v_B%d) = %s", j + 1, i + 1, value
                )
                pattern_ok = False

    certificate = independence_certificate(f_polys + g_polys, n=n, s=s)
    dimension_bound = binom_sum(n, 0, s)
    family_bound = binom_sum(n - 1, 0, s) if n else 1
    result = CrossFamilyCertificate(
        n=n,
        L=tuple(L),
        m=A.m,
        auxiliary_count=len(g_polys),
        polynomials=f_polys + g_polys,
        evaluation_pattern_ok=pattern_ok,
        certificate=certificate,
        dimension_bound=dimension_bound,
        dimension_ok=A.m + len(g_polys) <= dimension_bound,
        family_bound=family_bound,
        family_bound_ok=A.m <= family_bound,
    )
    logger.info(
        "Certified m=%d with %d auxiliary polynomials: rank %d, verified=%s",
        A.m,
        len(g_polys),
        certificate.rank,
        result.verified,
    )
    return result


def format_monomial(monomial: int) -> str:
    """Render a monomial as `{1 3}`; the constant monomial is `{}`."""
    return "{" + " ".join(str(e) for e in elements_of(monomial)) + "}"


def format_poly(p: MultilinearPoly, order: Optional[List[int]] = None) -> str:
    """Render a polynomial as `coef * {monomial}` terms joined by ` + `."""
    if not p.terms:
        return "0"
    rank_of = {m: i for i, m in enumerate(order)} if order else {}
    keys = sorted(
        p.terms, key=lambda m: (rank_of.get(m, 0), m.bit_count(), elements_of(m))
    )
    return " + ".join(
        f"{rational_to_string(p.terms[m])} * {format_monomial(m)}" for m in keys
    )


def certificate_to_text(result: CrossFamilyCertificate) -> str:
    """Serialize a certificate so it can be replayed independently."""
    s = len(result.L)
    order = monomial_order(result.n, s)
    cert = result.certificate
    lines = [
        f"certificate n={result.n} s={s}",
        f"# L={','.join(str(l) for l in result.L)} m={result.m} "
        f"auxiliary={result.auxiliary_count} dimension_bound={result.dimension_bound} "
        f"family_bound={result.family_bound}",
    ]
    lines.extend(f"poly: {format_poly(p, order)}" for p in result.polynomials)
    pivots = " ".join(format_monomial(m) for m in cert.pivot_monomials)
    lines.append(f"pivots: {pivots}")
    lines.append(f"rank: {cert.rank}")
    lines.append(f"verdict: {'independent' if cert.independent else 'dependent'}")
    return "\n".join(lines) + "\n"


def _parse_monomial(token: str, n: int, line_number: int) -> int:
    match = MONOMIAL.match(token.strip())
    if not match:
        raise CertificateFormatError(line_number, f"bad monomial {token!r}")
    try:
        return mask_from_elements((int(e) for e in match.group(1).split()), n)
    except ValueError as e:
        raise CertificateFormatError(line_number, str(e)) from e


def _parse_poly(body: str, n: int, line_number: int) -> MultilinearPoly:
    terms: Dict[int, Fraction] = {}
    if body.strip() == "0":
        return MultilinearPoly(n=n)
    for term in body.split(" + "):
        coefficient, _, monomial = term.partition(" * ")
        try:
            value = Fraction(coefficient.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise CertificateFormatError(
                line_number, f"bad coefficient {coefficient!r}"
            ) from e
        mask = _parse_monomial(monomial, n, line_number)
        terms[mask] = terms.get(mask, Fraction(0)) + value
    return _poly(n, terms)


def parse_certificate(
    text: str,
) -> Tuple[int, int, List[MultilinearPoly], List[int], int, bool]:
    """
    Read a serialized certificate.

    Returns:
        (n, s, polynomials, declared pivots, declared rank, declared verdict)

    Raises:
        CertificateFormatError: With the line number of the first problem.
    """
    lines = text.splitlines()
    header = CERTIFICATE_HEADER.match(lines[0].strip()) if lines else None
    if not header:
        raise CertificateFormatError(1, "expected `certificate n=<n> s=<s>`")
    n, s = int(header.group(1)), int(header.group(2))
    polys: List[MultilinearPoly] = []
    pivots: Optional[List[int]] = None
    rank: Optional[int] = None
    verdict: Optional[bool] = None
    for line_number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, _, body = stripped.partition(":")
        body = body.strip()
        if key == "poly":
            polys.append(_parse_poly(body, n, line_number))
        elif key == "pivots":
            pivots = [
                _parse_monomial(token + "}", n, line_number)
                for token in body.split("}")
                if token.strip()
            ]
        elif key == "rank":
            try:
                rank = int(body)
            except ValueError as e:
                raise CertificateFormatError(line_number, f"bad rank {body!r}") from e
        elif key == "verdict":
            if body not in ("independent", "dependent"):
                raise CertificateFormatError(line_number, f"bad verdict {body!r}")
            verdict = body == "independent"
        else:
            raise CertificateFormatError(line_number, f"unknown entry {key!r}")
    if pivots is None or rank is None or verdict is None:
        raise CertificateFormatError(len(lines), "missing pivots, rank or verdict")
    return n, s, polys, pivots, rank, verdict


def replay_certificate(text: str) -> bool:
    """
    Re-run the elimination of a serialized certificate.

    Returns:
        True iff the recomputed rank, pivots and verdict match the declared ones.
    """
    n, s, polys, pivots, rank, verdict = parse_certificate(text)
    recomputed = independence_certificate(polys, n=n, s=s)
    matches = (
        recomputed.rank == rank
        and recomputed.pivot_monomials == pivots
        and recomputed.independent == verdict
    )
    logger.info("Replayed certificate of %d polynomials: match=%s", len(polys), matches)
    return matches
