"""
Exact maximum-family search.

Pairwise problems are maximum clique problems on the compatibility graph of the
candidates; they are solved by branch and bound with greedy colouring bounds on
Python-int bitsets. t-wise problems are solved by backtracking with forward
checking over stored intersection masks.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

from extremal.bounds import (
    allowed_sizes,
    applicable_bounds,
    equality_case_broken,
    regime,
)
from extremal.errors import HypothesisError
from extremal.exactnum import binom, qbinom
from extremal.models import (
    ConformanceReport,
    Mode,
    SearchProblem,
    SearchResult,
    Subspace,
    SubsetFamily,
    SubspaceFamily,
    TwisePartition,
    Universe,
)
from extremal.qspace import (
    check_enumeration_size,
    check_field,
    contains,
    enumerate_subspaces,
    intersection_dim,
    span_mask,
)
from extremal.setfamily import (
    find_t_wise_violation,
    full_set,
    intersection_size,
    intersection_witness,
    subsets_of_size,
)
from extremal.utils import get_setting

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_CAP = 4096
DEFAULT_CHECK_INTERVAL = 512
DEFAULT_SPAN_MASK_MAX_VECTORS = 4096

Vertex = Union[int, Subspace]


def build_candidates(problem: SearchProblem) -> List[Vertex]:
    """
    Every subset of [n] (or subspace of GF(q)^n) passing the size rule, in
    canonical order.

    Raises:
        ValueError: If there are more candidates than the candidate cap.
    """
    cap = problem.candidate_cap
    if cap is None:
        cap = get_setting("search", "candidate_cap", DEFAULT_CANDIDATE_CAP)
    sizes = allowed_sizes(problem)
    if problem.universe == Universe.SUBSPACES:
        check_field(problem.q)
        count = sum(qbinom(problem.n, k, problem.q) for k in sizes)
    else:
        count = sum(binom(problem.n, k) for k in sizes)
    if count > cap:
        raise ValueError(f"{count} candidates exceed the candidate cap of {cap}")

    if problem.universe == Universe.SUBSPACES:
        check_enumeration_size(problem.n, problem.q)
        candidates: List[Vertex] = []
        for k in sizes:
            candidates.extend(enumerate_subspaces(problem.n, problem.q, k).members)
        return candidates
    return [mask for k in sizes for mask in subsets_of_size(problem.n, k)]


def _set_compatibility(problem: SearchProblem, candidates: Sequence[int]):
    allowed = set(problem.spec.L)
    sperner = problem.sperner

    def compatible(i: int, j: int) -> bool:
        a, b = candidates[i], candidates[j]
        common = a & b
        if common.bit_count() not in allowed:
            return False
        return not sperner or (common != a and common != b)

    return compatible


def _subspace_compatibility(problem: SearchProblem, candidates: Sequence[Subspace]):
    allowed = set(problem.spec.L)
    sperner = problem.sperner
    limit = get_setting(
        "search", "span_mask_max_vectors", DEFAULT_SPAN_MASK_MAX_VECTORS
    )
    if problem.q**problem.n <= limit:
        masks = [span_mask(U) for U in candidates]
        dim_of_count = {problem.q**d: d for d in range(problem.n + 1)}

        def compatible(i: int, j: int) -> bool:
            common = masks[i] & masks[j]
            if dim_of_count[common.bit_count()] not in allowed:
                return False
            return not sperner or (common != masks[i] and common != masks[j])

        return compatible

    def compatible_by_rank(i: int, j: int) -> bool:
        U, V = candidates[i], candidates[j]
        if intersection_dim(U, V) not in allowed:
            return False
        return not sperner or not (contains(U, V) or contains(V, U))

    return compatible_by_rank


def compatibility_graph(
    problem: SearchProblem, candidates: Sequence[Vertex]
) -> List[int]:
    """Adjacency bitsets: bit j of entry i is set iff candidates i and j may coexist."""
    if problem.universe == Universe.SUBSPACES:
        compatible = _subspace_compatibility(problem, candidates)
    else:
        compatible = _set_compatibility(problem, candidates)
    adjacency = [0] * len(candidates)
    for i, j in combinations(range(len(candidates)), 2):
        if compatible(i, j):
            adjacency[i] |= 1 << j
            adjacency[j] |= 1 << i
    return adjacency


def _color_sort(P: int, adjacency: Sequence[int]) -> Tuple[List[int], List[int]]:
    """
    Greedy colouring of the vertices in P, lowest vertex first.

    Returns:
        Vertices ordered by colour class and the colour of each, non-decreasing.
        The colour of a vertex bounds the clique size among it and the vertices
        before it.
    """
    order: List[int] = []
    colors: List[int] = []
    uncolored = P
    color = 0
    while uncolored:
        color += 1
        available = uncolored
        while available:
            low = available & -available
            v = low.bit_length() - 1
            available &= ~low
            available &= ~adjacency[v]
            uncolored &= ~low
            order.append(v)
            colors.append(color)
    return order, colors


class _SearchState:
    """Shared incumbent, node counter and clock of one search."""

    def __init__(self, time_budget: Optional[float]):
        self.best: List[int] = []
        self.best_size = 0
        self.nodes = 0
        self.exhausted = False
        self.lock = threading.Lock()
        self.deadline = time.monotonic() + time_budget if time_budget else None
        self.interval = get_setting(
            "search", "budget_check_interval", DEFAULT_CHECK_INTERVAL
        )

    def tick(self) -> bool:
        """Count a node; False once the time budget is spent."""
        with self.lock:
            self.nodes += 1
            nodes = self.nodes
        if self.deadline is not None and nodes % self.interval == 0:
            if time.monotonic() > self.deadline:
                if not self.exhausted:
                    logger.warning("Time budget exhausted after %d nodes", nodes)
                self.exhausted = True
        return not self.exhausted

    def offer(self, family: List[int]) -> None:
        """Keep a family if it is strictly larger than the incumbent."""
        with self.lock:
            if len(family) > self.best_size:
                self.best = list(family)
                self.best_size = len(family)


def _expand(state: _SearchState, adjacency: Sequence[int], clique: List[int], P: int):
    if not state.tick():
        return
    order, colors = _color_sort(P, adjacency)
    for index in range(len(order) - 1, -1, -1):
        if len(clique) + colors[index] <= state.best_size:
            return
        v = order[index]
        extended = clique + [v]
        remaining = P & adjacency[v]
        if remaining:
            _expand(state, adjacency, extended, remaining)
        else:
            state.offer(extended)
        if state.exhausted:
            return
        P &= ~(1 << v)


def _root_tasks(
    problem: SearchProblem, candidates: Sequence[Vertex], adjacency: Sequence[int]
) -> List[Tuple[int, int, int]]:
    """
    Root branches as (vertex, candidate set, size bound), in the order the
    sequential search visits them.
    """
    everything = full_set(len(adjacency))
    if problem.symmetry_breaking:
        # every clique can be relabelled to contain the first candidate of some size
        tasks = []
        seen_sizes = set()
        for v, candidate in enumerate(candidates):
            if isinstance(candidate, Subspace):
                size = candidate.dim
            else:
                size = candidate.bit_count()
            if size not in seen_sizes:
                seen_sizes.add(size)
                P = everything & adjacency[v]
                tasks.append((v, P, 1 + P.bit_count()))
        return tasks
    order, colors = _color_sort(everything, adjacency)
    tasks = []
    before = 0
    prefix = []
    for v in order:
        prefix.append(before)
        before |= 1 << v
    for index in range(len(order) - 1, -1, -1):
        v = order[index]
        tasks.append((v, prefix[index] & adjacency[v], colors[index]))
    return tasks


def _run_task(
    state: _SearchState, adjacency: Sequence[int], task: Tuple[int, int, int]
):
    v, P, bound = task
    if bound <= state.best_size or state.exhausted:
        return
    if P:
        _expand(state, adjacency, [v], P)
    else:
        state.offer([v])


def _degree_order(adjacency: Sequence[int]) -> List[int]:
    """Vertices by descending degree, ties by canonical position."""
    return sorted(range(len(adjacency)), key=lambda v: (-adjacency[v].bit_count(), v))


def _relabel(adjacency: Sequence[int], order: Sequence[int]) -> List[int]:
    position = {v: i for i, v in enumerate(order)}
    relabelled = []
    for v in order:
        mask = 0
        neighbours = adjacency[v]
        while neighbours:
            low = neighbours & -neighbours
            mask |= 1 << position[low.bit_length() - 1]
            neighbours &= ~low
        relabelled.append(mask)
    return relabelled


def _witness(
    problem: SearchProblem, candidates: Sequence[Vertex], chosen: Sequence[int]
) -> Union[SubsetFamily, SubspaceFamily]:
    members = tuple(candidates[i] for i in sorted(chosen))
    if problem.universe == Universe.SUBSPACES:
        return SubspaceFamily(n=problem.n, q=problem.q, members=members)
    return SubsetFamily(n=problem.n, members=members)


def _time_budget(problem: SearchProblem) -> Optional[float]:
    if problem.time_budget is not None:
        return problem.time_budget
    return get_setting("search", "time_budget", None)


def max_pairwise_family(
    problem: SearchProblem, candidates: Optional[Sequence[Vertex]] = None
) -> SearchResult:
    """
    Largest family whose members pairwise satisfy the constraints.

    Vertices are ordered by descending degree (ties by canonical order) and the
    branch and bound prunes with greedy colouring bounds. With threads > 1 the
    root branches are shared by a thread pool around one monotone incumbent:
    the optimum does not depend on the thread count, the witness is only
    reproducible with a single thread.

    Args:
        problem: Search problem
        candidates: Distinct members to choose from instead of every member
            passing the size rule; the candidate cap does not apply

    Raises:
        ValueError: If the problem is t-wise with t > 2, the candidates exceed
            the cap, or symmetry breaking meets an explicit candidate list.
    """
    if problem.spec.mode == Mode.T_WISE and problem.spec.t > 2:
        raise ValueError("max_pairwise_family needs a pairwise problem")
    if candidates is None:
        candidates = build_candidates(problem)
    elif problem.symmetry_breaking:
        raise ValueError("symmetry breaking needs the full candidate list")
    candidates = list(candidates)
    adjacency = compatibility_graph(problem, candidates)
    order = _degree_order(adjacency)
    ordered_candidates = [candidates[v] for v in order]
    relabelled = _relabel(adjacency, order)

    state = _SearchState(_time_budget(problem))
    tasks = _root_tasks(problem, ordered_candidates, relabelled)
    logger.info(
        "Searching %d candidates with %d root branches on %d thread(s)",
        len(candidates),
        len(tasks),
        problem.threads,
    )
    if problem.threads > 1:
        with ThreadPoolExecutor(max_workers=problem.threads) as pool:
            list(pool.map(lambda task: _run_task(state, relabelled, task), tasks))
    else:
        for task in tasks:
            if task[2] <= state.best_size and not problem.symmetry_breaking:
                break
            _run_task(state, relabelled, task)
            if state.exhausted:
                break

    chosen = [order[i] for i in state.best]
    result = SearchResult(
        optimum=state.best_size,
        witness=_witness(problem, candidates, chosen),
        nodes_explored=state.nodes,
        completed=not state.exhausted,
        bound_reports=applicable_bounds(problem),
    )
    logger.info(
        "Pairwise search finished: optimum %d after %d nodes (completed=%s)",
        result.optimum,
        result.nodes_explored,
        result.completed,
    )
    return result


class _TwiseSearch:
    """Backtracking over the candidates with forward checking of t-tuples."""

    def __init__(self, problem: SearchProblem, candidates: Sequence[int]):
        self.allowed = set(problem.spec.L)
        self.t = problem.spec.effective_t
        self.full = full_set(problem.n)
        self.candidates = candidates
        self.state = _SearchState(_time_budget(problem))

    def run(self) -> None:
        """Explore from the empty family."""
        # levels[j] holds the intersections of all j-subsets of the partial family
        levels = [[self.full]] + [[] for _ in range(self.t - 2)]
        self._extend([], levels, list(range(len(self.candidates))))

    def _fits(self, w: int, new_masks: Sequence[int]) -> bool:
        return all((mask & w).bit_count() in self.allowed for mask in new_masks)

    def _extend(self, chosen: List[int], levels: List[List[int]], viable: List[int]):
        state = self.state
        if not state.tick():
            return
        if len(chosen) > state.best_size:
            state.offer(chosen)
        for position, index in enumerate(viable):
            if len(chosen) + len(viable) - position <= state.best_size:
                return
            v = self.candidates[index]
            # intersections of the new (t-1)-subsets, i.e. (t-2)-subsets joined with v
            new_masks = [mask & v for mask in levels[self.t - 2]]
            grown = [levels[0]] + [
                levels[j] + [mask & v for mask in levels[j - 1]]
                for j in range(1, self.t - 1)
            ]
            rest = [
                w
                for w in viable[position + 1 :]
                if self._fits(self.candidates[w], new_masks)
            ]
            self._extend(chosen + [index], grown, rest)
            if state.exhausted:
                return


def max_twise_family(problem: SearchProblem) -> SearchResult:
    """
    Largest family of subsets in which every t distinct members have a common
    intersection size in L.

    Members are added in canonical order. When v joins the partial family S,
    the intersections of the (t-1)-subsets of S + v containing v are formed
    once from the stored (t-2)-subset intersections, and every later candidate
    is checked against them.

    Raises:
        ValueError: For subspace universes.
    """
    if problem.universe != Universe.SETS:
        raise ValueError("t-wise search is only available for sets")
    candidates = build_candidates(problem)
    search = _TwiseSearch(problem, candidates)
    logger.info("t-wise search (t=%d) over %d candidates", search.t, len(candidates))
    search.run()
    state = search.state
    result = SearchResult(
        optimum=state.best_size,
        witness=_witness(problem, candidates, state.best),
        nodes_explored=state.nodes,
        completed=not state.exhausted,
        bound_reports=applicable_bounds(problem),
    )
    logger.info(
        "t-wise search finished: optimum %d after %d nodes (completed=%s)",
        result.optimum,
        result.nodes_explored,
        result.completed,
    )
    return result


def solve(problem: SearchProblem) -> SearchResult:
    """Run the search matching the problem's arity."""
    if problem.spec.mode == Mode.T_WISE and problem.spec.t > 2:
        return max_twise_family(problem)
    return max_pairwise_family(problem)


def _seed_indices(A: SubsetFamily, k: int) -> List[int]:
    """
    k+1 member indices (or all of them) whose intersection is the global
    intersection, the realising subfamily first.
    """
    seed = intersection_witness(A)
    for index in range(A.m):
        if len(seed) >= k + 1:
            break
        if index not in seed:
            seed.append(index)
    return seed


def twise_partition(A: SubsetFamily, L: Sequence[int], t: int) -> TwisePartition:
    """
    Split a t-wise L-intersecting family with sizes outside L into B (with
    partners C) and the remainder F.

    The first k+1 members (k the largest size) are reordered to realise the
    global intersection and seed B = C. Then, while some t-1 remaining members
    have a common intersection size outside L, the first of them moves to B
    and their common intersection becomes its partner in C. What is left is F.

    Returns:
        The partition with one entry per check: partition totality, the seed,
        C_i inside B_i, |C_i| outside L, cross intersections |B_i & C_j| in L
        for i != j, and F being (t-1)-wise L-intersecting.

    Raises:
        HypothesisError: If A is not t-wise L-intersecting or a size is in L.
    """
    allowed = set(L)
    if t < 2:
        raise ValueError(f"t must be at least 2, got {t}")
    violation = find_t_wise_violation(A, L, t)
    if violation:
        raise HypothesisError(
            "t-wise-L-intersecting",
            f"members {list(violation)} meet in a size outside L",
            list(violation),
        )
    for index, mask in enumerate(A.members):
        if mask.bit_count() in allowed:
            raise HypothesisError(
                "sizes-outside-L",
                f"member {index} has size {mask.bit_count()} in L",
                [index],
            )

    k = A.max_size
    seed = _seed_indices(A, k)
    order = list(seed)
    B = [A.members[i] for i in seed]
    C = list(B)
    remaining = [i for i in range(A.m) if i not in seed]

    while len(remaining) >= t - 1:
        sub = SubsetFamily(n=A.n, members=tuple(A.members[i] for i in remaining))
        found = find_t_wise_violation(sub, L, t - 1)
        if not found:
            break
        tuple_indices = [remaining[i] for i in found]
        first = tuple_indices[0]
        order.append(first)
        B.append(A.members[first])
        C.append(reduce(lambda x, y: x & y, (A.members[i] for i in tuple_indices)))
        remaining.remove(first)

    order.extend(remaining)
    F = [A.members[i] for i in remaining]

    checks = {}
    witnesses = {}
    checks["partition"] = len(B) + len(F) == A.m and not set(order[: len(B)]) & set(
        remaining
    )
    seed_members = [A.members[i] for i in order[: min(k + 1, A.m)]]
    seed_common = reduce(lambda x, y: x & y, seed_members, full_set(A.n))
    everything_common = reduce(lambda x, y: x & y, A.members, full_set(A.n))
    checks["seed"] = seed_common == everything_common and all(
        B[i] == C[i] == seed_members[i] for i in range(len(seed_members))
    )
    bad_containment = [i for i in range(len(B)) if C[i] & B[i] != C[i]]
    checks["containment"] = not bad_containment
    witnesses["containment"] = bad_containment
    bad_sizes = [i for i in range(len(C)) if C[i].bit_count() in allowed]
    checks["sizes-outside-L"] = not bad_sizes
    witnesses["sizes-outside-L"] = bad_sizes
    cross = next(
        (
            [i, j]
            for i in range(len(B))
            for j in range(len(C))
            if i != j and intersection_size(B[i], C[j]) not in allowed
        ),
        [],
    )
    checks["cross-intersections"] = not cross
    witnesses["cross-intersections"] = cross
    if t - 1 >= 2:
        rest_violation = find_t_wise_violation(
            SubsetFamily(n=A.n, members=tuple(F)), L, t - 1
        )
    else:
        rest_violation = None
    checks["remainder"] = rest_violation is None
    witnesses["remainder"] = list(rest_violation or [])

    logger.info(
        "Partitioned %d members into |B|=%d and |F|=%d", A.m, len(B), len(F)
    )
    return TwisePartition(
        order=order, B=B, C=C, F=F, checks=checks, witnesses=witnesses
    )


def verify_bounds(result: SearchResult, problem: SearchProblem) -> ConformanceReport:
    """
    Compare a search result with every applicable bound.

    A proven bound whose hypotheses hold is violated when the optimum exceeds
    it (or reaches it, for strict bounds); a witness is a real family, so this
    holds whether or not the search completed. Equality is reported as tight
    only for completed searches. Unproven bounds are never violations; being
    exceeded is listed separately. Reaching a bound whose extremal families
    are characterized, with a family outside that characterization, is a
    violation listed as "<theorem>-equality".
    """
    bounds = applicable_bounds(problem)
    violated, tight, exceeded = [], [], []
    for report in bounds:
        if not report.hypotheses_met:
            continue
        over = result.optimum > report.value or (
            report.strict and result.optimum >= report.value
        )
        if over and report.proven:
            violated.append(report.theorem)
            logger.warning(
                "Optimum %d violates %s (%d)",
                result.optimum,
                report.theorem,
                report.value,
            )
        elif over:
            exceeded.append(report.theorem)
        elif result.optimum == report.value:
            if equality_case_broken(report, problem, result.witness):
                violated.append(f"{report.theorem}-equality")
                logger.warning(
                    "Optimum %d reaches %s outside its equality case",
                    result.optimum,
                    report.theorem,
                )
            elif result.completed:
                tight.append(report.theorem)
    return ConformanceReport(
        optimum=result.optimum,
        completed=result.completed,
        regime=regime(problem),
        bounds=bounds,
        violated=violated,
        tight=tight,
        conjecture_exceeded=exceeded,
    )
