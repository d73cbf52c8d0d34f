"""
Closed-form upper bounds for L-intersecting families of sets and of subspaces,
each evaluated exactly together with its hypotheses.

A bound is always evaluated, even when its hypotheses fail, so that callers can
see where a theorem stops applying. Logarithmic thresholds are compared as
integer powers.
"""

import logging
from typing import List, Optional, Sequence, Union

from extremal.exactnum import binom, binom_sum, power, qbinom, qbinom_sum
from extremal.models import (
    BoundReport,
    Mode,
    SearchProblem,
    SizeRule,
    SubsetFamily,
    SubspaceFamily,
    Universe,
)
from extremal.setfamily import global_intersection, size_allowed

logger = logging.getLogger(__name__)

EKR = "ekr"
RAY_CHAUDHURI_WILSON = "ray-chaudhuri-wilson"
FRANKL_WILSON = "frankl-wilson"
ALON_BABAI_SUZUKI = "alon-babai-suzuki"
GROLMUSZ_SUDAKOV = "grolmusz-sudakov"
GROLMUSZ_SUDAKOV_SIZES = "grolmusz-sudakov-sizes"
SNEVILY_POSITIVE = "snevily-positive"
SNEVILY_PREFIX = "snevily-prefix"
SNEVILY_CONJECTURE = "snevily-conjecture"
SIZES_AVOID_L = "sizes-avoid-L"
T_WISE_SIZES_AVOID_L = "t-wise-sizes-avoid-L"
SHIFTED_FRANKL_WILSON = "shifted-frankl-wilson"
CROSS_INTERSECTING_PAIR = "cross-intersecting-pair"
Q_DEZA_FRANKL = "q-deza-frankl"
Q_FRANKL_GRAHAM = "q-frankl-graham"
Q_LEFMANN = "q-lefmann"
Q_ALON_BABAI_SUZUKI = "q-alon-babai-suzuki"
Q_POSITIVE_THRESHOLD = "q-positive-threshold"
Q_SPERNER_THRESHOLD = "q-sperner-threshold"
Q_SPERNER = "q-sperner"
Q_BOUNDED_RANK_SPERNER = "q-bounded-rank-sperner"


def _report(
    theorem: str,
    value: int,
    checks: Sequence[tuple],
    strict: bool = False,
    proven: bool = True,
) -> BoundReport:
    """Build a report from (holds, note) pairs; notes are kept for failed checks."""
    notes = [note for holds, note in checks if not holds]
    return BoundReport(
        theorem=theorem,
        value=value,
        hypotheses_met=not notes,
        hypothesis_notes=notes,
        strict=strict,
        proven=proven,
    )


def _restrict(report: BoundReport, checks: Sequence[tuple]) -> BoundReport:
    """Add family-level hypotheses to a report."""
    notes = report.hypothesis_notes + [note for holds, note in checks if not holds]
    return report.model_copy(
        update={"hypotheses_met": not notes, "hypothesis_notes": notes}
    )


def ekr_bound(n: int, k: int) -> BoundReport:
    """C(n-1, k-1) for k-uniform intersecting families, provided n >= 2k."""
    return _report(
        EKR,
        binom(n - 1, k - 1),
        [(k >= 1, "needs k >= 1"), (n >= 2 * k, f"needs n >= 2k = {2 * k}")],
    )


def rw_bound(n: int, s: int) -> BoundReport:
    """C(n, s) for k-uniform L-intersecting families."""
    return _report(RAY_CHAUDHURI_WILSON, binom(n, s), [])


def fw_bound(n: int, s: int) -> BoundReport:
    """Sum of C(n, i) for i <= s, for any L-intersecting family."""
    return _report(FRANKL_WILSON, binom_sum(n, 0, s), [])


def abs_bound(n: int, s: int, r: int) -> BoundReport:
    """Sum of C(n, i) for s-r < i <= s, when member sizes take r values above s-r."""
    return _report(
        ALON_BABAI_SUZUKI, binom_sum(n, s - r + 1, s), [(r >= 1, "needs r >= 1")]
    )


def gs_bound(n: int, s: int, t: int, r: Optional[int] = None) -> BoundReport:
    """
    (t-1) times the Frankl-Wilson sum for t-wise L-intersecting families, or
    (t-1) times the Alon-Babai-Suzuki sum when member sizes take r values.
    """
    low = 0 if r is None else s - r + 1
    checks = [(t >= 2, "needs t >= 2")]
    if r is not None:
        checks.append((r >= 1, "needs r >= 1"))
    theorem = GROLMUSZ_SUDAKOV if r is None else GROLMUSZ_SUDAKOV_SIZES
    return _report(theorem, (t - 1) * binom_sum(n, low, s), checks)


def snevily96_bound(n: int, s: int, L: Optional[Sequence[int]] = None) -> BoundReport:
    """Sum of C(n-1, i) for i <= s, when every element of L is positive."""
    checks = []
    if L is not None:
        checks.append((min(L) >= 1, "needs every element of L positive"))
    return _report(SNEVILY_POSITIVE, binom_sum(n - 1, 0, s), checks)


def thm18_bound(
    n: int, s: int, L: Optional[Sequence[int]] = None, min_size: Optional[int] = None
) -> BoundReport:
    """C(n, s) when L = {0, ..., s-1} and every member has at least s elements."""
    checks = []
    if L is not None:
        checks.append((list(L) == list(range(s)), f"needs L = {{0..{s - 1}}}"))
    if min_size is not None:
        checks.append((min_size >= max(s, 1), f"needs every size >= {max(s, 1)}"))
    return _report(SNEVILY_PREFIX, binom(n, s), checks)


def conj17_bound(
    n: int, s: int, L: Sequence[int], min_size: Optional[int]
) -> BoundReport:
    """
    C(n, s) when max(L) is below every allowed size. Open in general, so the
    report is marked unproven.
    """
    in_regime = min_size is not None and min_size >= 1 and max(L) < min_size
    return _report(
        SNEVILY_CONJECTURE,
        binom(n, s),
        [(in_regime, "needs max(L) < every allowed size")],
        proven=False,
    )


def thm19_threshold(k: int, s: int, l1: int) -> int:
    """Smallest n covered by the sizes-avoid-L bounds: C(k^2, l1+1) s + l1."""
    return binom(k * k, l1 + 1) * s + l1


def _threshold_checks(
    n: int, s: int, k: Optional[int], l1: Optional[int]
) -> List[tuple]:
    if k is None or l1 is None:
        return [(False, "needs k and l1 to evaluate the threshold")]
    if k < 1:
        return [(False, "needs a member of size at least 1")]
    threshold = thm19_threshold(k, s, l1)
    return [(n >= threshold, f"needs n >= C(k^2, l1+1) s + l1 = {threshold}")]


def thm19_bound(
    n: int,
    s: int,
    k: Optional[int] = None,
    l1: Optional[int] = None,
    sizes_outside_L: Optional[bool] = None,
) -> BoundReport:
    """
    C(n, s) for L-intersecting families whose sizes avoid L, once n reaches the
    threshold for the largest member size k.
    """
    checks = _threshold_checks(n, s, k, l1)
    checks.append((bool(sizes_outside_L), "needs every size outside L"))
    return _report(SIZES_AVOID_L, binom(n, s), checks)


def thm110_bound(
    n: int,
    s: int,
    t: int,
    k: Optional[int] = None,
    l1: Optional[int] = None,
    sizes_outside_L: Optional[bool] = None,
) -> BoundReport:
    """(t-1) C(n, s) for t-wise families with sizes outside L, above the threshold."""
    checks = [(t >= 2, "needs t >= 2")] + _threshold_checks(n, s, k, l1)
    checks.append((bool(sizes_outside_L), "needs every size outside L"))
    return _report(T_WISE_SIZES_AVOID_L, (t - 1) * binom(n, s), checks)


def lzx_bound(n: int, s: int, l1: int, k: Optional[int] = None) -> BoundReport:
    """Sum of C(n - l1, i) for i <= s, above the threshold for k."""
    return _report(
        SHIFTED_FRANKL_WILSON, binom_sum(n - l1, 0, s), _threshold_checks(n, s, k, l1)
    )


def lemma27_bound(
    n: int, s: int, sizes_outside_L: Optional[bool] = None
) -> BoundReport:
    """
    Sum of C(n-1, i) for i <= s, for pairs A_i inside B_i with |A_i| outside L
    and cross intersections in L; with A = B, for families whose sizes avoid L.
    """
    checks = []
    if sizes_outside_L is not None:
        checks.append((sizes_outside_L, "needs every size outside L"))
    return _report(CROSS_INTERSECTING_PAIR, binom_sum(n - 1, 0, s), checks)


def lemma25_check(n: int, s: int) -> bool:
    """Whether sum of C(n-2, i) for i <= s is at most C(n, s); holds when n >= s^2."""
    return binom_sum(n - 2, 0, s) <= binom(n, s)


def lemma25_hypothesis(n: int, s: int) -> bool:
    """n >= s^2."""
    return n >= s * s


def q_df_bound(n: int, k: int, q: int) -> BoundReport:
    """qbinom(n-1, k-1) for k-dimensional subspaces pairwise meeting nontrivially."""
    return _report(
        Q_DEZA_FRANKL,
        qbinom(n - 1, k - 1, q),
        [(k >= 1, "needs k >= 1"), (n >= 2 * k, f"needs n >= 2k = {2 * k}")],
    )


def q_fg_bound(n: int, s: int, q: int) -> BoundReport:
    """qbinom(n, s) for L-intersecting families of k-dimensional subspaces."""
    return _report(Q_FRANKL_GRAHAM, qbinom(n, s, q), [])


def q_lefmann_bound(n: int, s: int, q: int) -> BoundReport:
    """Sum of qbinom(n, i) for i <= s, for any L-intersecting family of subspaces."""
    return _report(Q_LEFMANN, qbinom_sum(n, 0, s, q), [])


def q_abs_bound(n: int, s: int, r: int, q: int) -> BoundReport:
    """Sum of qbinom(n, i) for s-r < i <= s, when dimensions take r values above s-r."""
    return _report(
        Q_ALON_BABAI_SUZUKI, qbinom_sum(n, s - r + 1, s, q), [(r >= 1, "needs r >= 1")]
    )


def thm1516_threshold_met(n: int, s: int, l1: int, k: int, q: int) -> bool:
    """
    Whether n >= 2s+1 and n >= log_q((q^s - 1) qbinom(k^2, l1+1) + 1) + l1.

    The logarithmic condition is compared exactly as
    q^(n - l1) >= (q^s - 1) qbinom(k^2, l1+1) + 1.
    """
    if n < 2 * s + 1 or n < l1:
        return False
    target = (power(q, s) - 1) * qbinom(k * k, l1 + 1, q) + 1
    return power(q, n - l1) >= target


def _q_threshold_checks(n: int, s: int, l1: Optional[int], k: Optional[int], q: int):
    if k is None or l1 is None:
        return [(False, "needs k and l1 to evaluate the threshold")]
    return [
        (
            thm1516_threshold_met(n, s, l1, k, q),
            "needs n >= 2s+1 and q^(n-l1) >= (q^s-1) qbinom(k^2, l1+1) + 1",
        )
    ]


def thm115_bound(
    n: int, s: int, q: int, l1: Optional[int] = None, k: Optional[int] = None
) -> BoundReport:
    """Strict bound |V| < qbinom(n, s) for positive L above the threshold."""
    checks = [(l1 is not None and l1 >= 1, "needs every element of L positive")]
    checks.extend(_q_threshold_checks(n, s, l1, k, q))
    return _report(Q_POSITIVE_THRESHOLD, qbinom(n, s, q), checks, strict=True)


def thm116_bound(
    n: int,
    s: int,
    q: int,
    l1: Optional[int] = None,
    k: Optional[int] = None,
    sperner: Optional[bool] = None,
) -> BoundReport:
    """qbinom(n, s) for Sperner L-intersecting families above the threshold."""
    checks = [(bool(sperner), "needs a Sperner family (or dimensions outside L)")]
    checks.extend(_q_threshold_checks(n, s, l1, k, q))
    return _report(Q_SPERNER_THRESHOLD, qbinom(n, s, q), checks)


def q_sperner_bound(n: int, q: int, sperner: Optional[bool] = None) -> BoundReport:
    """qbinom(n, floor(n/2)) for Sperner families of subspaces."""
    checks = []
    if sperner is not None:
        checks.append((sperner, "needs a Sperner family"))
    return _report(Q_SPERNER, qbinom(n, n // 2, q), checks)


def thm34_bound(
    n: int,
    s: int,
    q: int,
    sperner: Optional[bool] = None,
    max_dim: Optional[int] = None,
) -> BoundReport:
    """qbinom(n, s) for Sperner families of dimension at most s, when n >= 2s+1."""
    checks = [(n >= 2 * s + 1, f"needs n >= 2s+1 = {2 * s + 1}")]
    if sperner is not None:
        checks.append((sperner, "needs a Sperner family"))
    if max_dim is not None:
        checks.append((max_dim <= s, f"needs every dimension <= {s}"))
    return _report(Q_BOUNDED_RANK_SPERNER, qbinom(n, s, q), checks)


def lemma32_check(n: int, s: int, q: int) -> bool:
    """Whether sum of qbinom(n-1, i) for i <= s is below qbinom(n, s)."""
    return qbinom_sum(n - 1, 0, s, q) < qbinom(n, s, q)


def lemma32_hypothesis(n: int, s: int, q: int) -> bool:
    """n >= 2s+1, s >= 1 and q >= 2."""
    return n >= 2 * s + 1 and s >= 1 and q >= 2


def allowed_sizes(problem: SearchProblem) -> List[int]:
    """Member sizes (or dimensions) 0..n admitted by the problem's size rule."""
    return [k for k in range(problem.n + 1) if size_allowed(k, problem.spec)]


def regime(problem: SearchProblem) -> str:
    """
    Label the size regime of a problem: max(L) below every allowed size, every
    allowed size outside L, or neither.
    """
    sizes = allowed_sizes(problem)
    L = problem.spec.L
    if sizes and min(sizes) >= 1 and max(L) < min(sizes):
        return "max-L-below-sizes"
    if all(k not in L for k in sizes):
        return "sizes-outside-L"
    return "general"


def _set_bounds(problem: SearchProblem, sizes: List[int]) -> List[BoundReport]:
    spec = problem.spec
    n, s, l1, t = problem.n, spec.s, spec.l1, spec.effective_t
    k, r = max(sizes), len(sizes)
    uniform = r == 1
    outside = all(size not in spec.L for size in sizes)
    low_sizes = (
        all(size > s - r for size in sizes),
        f"needs every size > s - r = {s - r}",
    )
    uniform_check = (uniform, "needs a uniform family")

    if spec.mode == Mode.T_WISE and t > 2:
        return [
            gs_bound(n, s, t),
            _restrict(gs_bound(n, s, t, r), [low_sizes]),
            thm110_bound(n, s, t, k, l1, outside),
        ]

    reports = [
        _restrict(
            ekr_bound(n, k),
            [uniform_check, (0 not in spec.L, "needs 0 not in L")],
        ),
        _restrict(
            rw_bound(n, s),
            [uniform_check, (max(spec.L) < k, "needs max(L) < k")],
        ),
        fw_bound(n, s),
        _restrict(abs_bound(n, s, r), [low_sizes]),
        snevily96_bound(n, s, spec.L),
        thm18_bound(n, s, spec.L, min(sizes)),
        conj17_bound(n, s, spec.L, min(sizes)),
        thm19_bound(n, s, k, l1, outside),
        lzx_bound(n, s, l1, k),
        lemma27_bound(n, s, outside),
    ]
    if spec.mode == Mode.T_WISE:
        reports.append(gs_bound(n, s, t))
    return reports


def _subspace_bounds(problem: SearchProblem, dims: List[int]) -> List[BoundReport]:
    spec = problem.spec
    n, q, s, l1 = problem.n, problem.q, spec.s, spec.l1
    k, r = max(dims), len(dims)
    uniform = r == 1
    sperner = problem.sperner or all(d not in spec.L for d in dims)
    uniform_check = (uniform, "needs a uniform family")
    low_dims = (
        all(d > s - r for d in dims), f"needs every dimension > s - r = {s - r}"
    )
    return [
        _restrict(
            q_df_bound(n, k, q),
            [uniform_check, (0 not in spec.L, "needs 0 not in L")],
        ),
        _restrict(
            q_fg_bound(n, s, q),
            [uniform_check, (max(spec.L) < k, "needs max(L) < k")],
        ),
        q_lefmann_bound(n, s, q),
        _restrict(
            q_abs_bound(n, s, r, q),
            [low_dims],
        ),
        thm115_bound(n, s, q, l1, k),
        thm116_bound(n, s, q, l1, k, sperner),
        q_sperner_bound(n, q, sperner),
        thm34_bound(n, s, q, sperner, k),
    ]


def applicable_bounds(problem: SearchProblem) -> List[BoundReport]:
    """
    Every bound whose shape matches the problem, sorted by value.

    The family-level quantities are taken from the size rule: k is the largest
    allowed size, the allowed sizes play the role of K, and sizes avoid L when
    no allowed size lies in L.

    Returns:
        Reports sorted ascending by value (ties by theorem name); empty when no
        size is allowed or the shape has no theorem (t-wise subspaces).
    """
    sizes = allowed_sizes(problem)
    if not sizes:
        return []
    if problem.universe == Universe.SUBSPACES:
        if problem.spec.mode == Mode.T_WISE and problem.spec.t > 2:
            return []
        reports = _subspace_bounds(problem, sizes)
    else:
        reports = _set_bounds(problem, sizes)
    logger.debug("Evaluated %d bounds for %s", len(reports), problem.spec)
    return sorted(reports, key=lambda report: (report.value, report.theorem))


def default_L(s: int) -> List[int]:
    """L = {0, ..., s-1}, the extremal choice for a given s."""
    return list(range(s))


def size_rule_needs_k(rule: SizeRule) -> bool:
    """Whether a size rule is defined through K."""
    return rule in (SizeRule.IN_K, SizeRule.SNEVILY)


def equality_case_broken(
    report: BoundReport,
    problem: SearchProblem,
    witness: Union[SubsetFamily, SubspaceFamily],
) -> bool:
    """
    Whether a family of exactly the bound's size contradicts the theorem's
    characterization of its extremal families.

    Two bounds characterize equality: a Sperner family of subspaces above the
    threshold reaches qbinom(n, s) only when L = {0, ..., s-1}, and for n > 2k
    the only intersecting k-uniform families of size C(n-1, k-1) are stars.
    The star condition is read from the witness, so it is only checked when
    the witness has the bound's size.
    """
    if not report.hypotheses_met:
        return False
    if report.theorem == Q_SPERNER_THRESHOLD:
        return list(problem.spec.L) != default_L(problem.spec.s)
    if report.theorem == EKR and isinstance(witness, SubsetFamily):
        k = max(allowed_sizes(problem))
        return (
            problem.n > 2 * k
            and witness.m == report.value
            and global_intersection(witness) == 0
        )
    return False
