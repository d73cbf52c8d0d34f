"""
Pydantic models for families, constraints, bounds, certificates and searches.
"""

from enum import Enum
from fractions import Fraction
from typing import Annotated, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sympy import isprime

MAX_GROUND_SET = 64


class SizeRule(str, Enum):
    """Unary rule restricting which member sizes (or dimensions) are allowed."""

    NONE = "none"
    IN_K = "in-K"
    NOT_IN_L = "not-in-L"
    SNEVILY = "snevily"


class Mode(str, Enum):
    """Whether the L constraint applies to pairs or to t-tuples of members."""

    PAIRWISE = "pairwise"
    T_WISE = "t-wise"


class Universe(str, Enum):
    """Kind of objects a family is drawn from."""

    SETS = "sets"
    SUBSPACES = "subspaces"


class SubsetFamily(BaseModel):
    """
    Distinct subsets of [n], each stored as a bitmask where element i is bit i-1.
    """

    model_config = ConfigDict(frozen=True)

    n: Annotated[int, Field(ge=0, le=MAX_GROUND_SET)]
    members: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def _check_members(self):
        limit = 1 << self.n
        seen = set()
        for index, mask in enumerate(self.members):
            if mask < 0 or mask >= limit:
                raise ValueError(f"member {index} is not a subset of [{self.n}]")
            if mask in seen:
                raise ValueError(f"member {index} duplicates an earlier member")
            seen.add(mask)
        return self

    @property
    def m(self) -> int:
        """Number of members."""
        return len(self.members)

    @property
    def max_size(self) -> int:
        """Largest member size, 0 for the empty family."""
        return max((mask.bit_count() for mask in self.members), default=0)


class IntersectionSpec(BaseModel):
    """
    The constraint system: allowed intersection sizes L, optional sizes K, t and
    the rule applied to member sizes.
    """

    model_config = ConfigDict(frozen=True)

    L: Tuple[int, ...]
    K: Optional[Tuple[int, ...]] = None
    t: Annotated[int, Field(ge=2)] = 2
    mode: Mode = Mode.PAIRWISE
    size_rule: SizeRule = SizeRule.NONE

    @field_validator("L")
    @classmethod
    def _check_l(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("L must be nonempty")
        if any(l < 0 for l in value):
            raise ValueError("L must contain natural numbers")
        if any(a >= b for a, b in zip(value, value[1:])):
            raise ValueError("L must be strictly increasing")
        return value

    @field_validator("K")
    @classmethod
    def _check_k(cls, value: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
        if value is None:
            return value
        if any(k <= 0 for k in value):
            raise ValueError("K must contain positive integers")
        if len(set(value)) != len(value):
            raise ValueError("K must not repeat a size")
        return tuple(sorted(value))

    @model_validator(mode="after")
    def _check_rule(self):
        if self.size_rule in (SizeRule.IN_K, SizeRule.SNEVILY) and self.K is None:
            raise ValueError(f"size rule {self.size_rule.value} needs K")
        if self.size_rule == SizeRule.SNEVILY:
            if not self.K or max(self.L) >= min(self.K):
                raise ValueError("size rule snevily needs max(L) < min(K)")
        return self

    @property
    def s(self) -> int:
        """Number of allowed intersection sizes."""
        return len(self.L)

    @property
    def l1(self) -> int:
        """Smallest allowed intersection size."""
        return self.L[0]

    @property
    def effective_t(self) -> int:
        """Arity of the constraint: t in t-wise mode, otherwise 2."""
        return self.t if self.mode == Mode.T_WISE else 2


class BoundReport(BaseModel):
    """One theorem's bound evaluated at concrete parameters."""

    theorem: str
    value: Annotated[int, Field(ge=0)]
    hypotheses_met: bool
    hypothesis_notes: List[str] = Field(default_factory=list)
    strict: bool = False
    proven: bool = True


class Subspace(BaseModel):
    """
    A subspace of GF(q)^n, identified by its reduced row echelon basis.
    """

    model_config = ConfigDict(frozen=True)

    n: Annotated[int, Field(ge=0)]
    q: Annotated[int, Field(ge=2)]
    basis: Tuple[Tuple[int, ...], ...] = ()

    @field_validator("q")
    @classmethod
    def _check_prime(cls, value: int) -> int:
        if not isprime(value):
            raise ValueError(f"q must be prime, got {value}")
        return value

    @model_validator(mode="after")
    def _check_rref(self):
        last_pivot = -1
        pivots = []
        for index, row in enumerate(self.basis):
            if len(row) != self.n:
                raise ValueError(f"basis row {index} does not have {self.n} entries")
            if any(x < 0 or x >= self.q for x in row):
                raise ValueError(f"basis row {index} has entries outside GF({self.q})")
            pivot = next((j for j, x in enumerate(row) if x), None)
            if pivot is None:
                raise ValueError(f"basis row {index} is zero")
            if row[pivot] != 1 or pivot <= last_pivot:
                raise ValueError("basis is not in reduced row echelon form")
            last_pivot = pivot
            pivots.append(pivot)
        for pivot_index, pivot in enumerate(pivots):
            if any(
                row[pivot] for i, row in enumerate(self.basis) if i != pivot_index
            ):
                raise ValueError("basis is not in reduced row echelon form")
        return self

    @property
    def dim(self) -> int:
        """Dimension, the number of basis rows."""
        return len(self.basis)

    @property
    def pivots(self) -> Tuple[int, ...]:
        """Pivot column of each basis row."""
        return tuple(next(j for j, x in enumerate(row) if x) for row in self.basis)

    @property
    def sort_key(self) -> Tuple[int, Tuple[Tuple[int, ...], ...]]:
        """Canonical order: dimension, then basis entries."""
        return (self.dim, self.basis)


class SpernerReport(BaseModel):
    """Size of a Sperner family of subspaces against the q-Sperner bounds."""

    size: int
    sperner_bound: int
    within_bound: bool
    dimension_cap: int
    capped_bound: int
    equality_checked: bool
    equality_holds: Optional[bool] = None


class SubspaceFamily(BaseModel):
    """Distinct subspaces of one ambient space GF(q)^n."""

    model_config = ConfigDict(frozen=True)

    n: Annotated[int, Field(ge=0)]
    q: Annotated[int, Field(ge=2)]
    members: Tuple[Subspace, ...] = ()

    @model_validator(mode="after")
    def _check_members(self):
        seen = set()
        for index, member in enumerate(self.members):
            if member.n != self.n or member.q != self.q:
                raise ValueError(
                    f"member {index} lives in GF({member.q})^{member.n}, "
                    f"not GF({self.q})^{self.n}"
                )
            if member.basis in seen:
                raise ValueError(f"member {index} duplicates an earlier member")
            seen.add(member.basis)
        return self

    @property
    def m(self) -> int:
        """Number of members."""
        return len(self.members)


class MultilinearPoly(BaseModel):
    """
    Multilinear polynomial over the rationals.

    Terms map a monomial, written as the bitmask of its variables, to a nonzero
    coefficient. The empty mask is the constant term.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: Annotated[int, Field(ge=0, le=MAX_GROUND_SET)]
    terms: Dict[int, Fraction] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_terms(self):
        limit = 1 << self.n
        for monomial, coefficient in self.terms.items():
            if monomial < 0 or monomial >= limit:
                raise ValueError(
                    f"monomial {monomial:b} uses variables outside [{self.n}]"
                )
            if coefficient == 0:
                raise ValueError("zero coefficients are not stored")
        return self

    @property
    def degree(self) -> int:
        """Largest monomial size, -1 for the zero polynomial."""
        return max((monomial.bit_count() for monomial in self.terms), default=-1)


class IndependenceCertificate(BaseModel):
    """Outcome of exact elimination on a list of polynomials."""

    poly_count: Annotated[int, Field(ge=0)]
    ambient_dimension: Annotated[int, Field(ge=0)]
    rank: Annotated[int, Field(ge=0)]
    independent: bool
    pivot_monomials: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_rank(self):
        if self.independent != (self.rank == self.poly_count):
            raise ValueError("independent must equal rank == poly_count")
        if self.rank > min(self.poly_count, self.ambient_dimension):
            raise ValueError("rank exceeds the number of rows or columns")
        if len(self.pivot_monomials) != self.rank:
            raise ValueError("one pivot monomial is needed per unit of rank")
        return self


class CrossFamilyCertificate(BaseModel):
    """
    Everything checked while certifying two families A, B with the
    intersection polynomials plus the auxiliary polynomials g_R.
    """

    n: int
    L: Tuple[int, ...]
    m: int
    auxiliary_count: int
    polynomials: List[MultilinearPoly]
    evaluation_pattern_ok: bool
    certificate: IndependenceCertificate
    dimension_bound: int
    dimension_ok: bool
    family_bound: int
    family_bound_ok: bool

    @property
    def verified(self) -> bool:
        """True when every check passed."""
        return (
            self.evaluation_pattern_ok
            and self.certificate.independent
            and self.dimension_ok
            and self.family_bound_ok
        )


class SearchProblem(BaseModel):
    """A maximum-family question: universe, constraints and search limits."""

    model_config = ConfigDict(frozen=True)

    universe: Universe = Universe.SETS
    n: Annotated[int, Field(ge=0, le=MAX_GROUND_SET)]
    q: Optional[int] = None
    spec: IntersectionSpec
    sperner: bool = False
    candidate_cap: Optional[Annotated[int, Field(ge=0)]] = None
    time_budget: Optional[Annotated[float, Field(gt=0)]] = None
    threads: Annotated[int, Field(ge=1)] = 1
    symmetry_breaking: bool = False

    @model_validator(mode="after")
    def _check_universe(self):
        if self.universe == Universe.SUBSPACES:
            if self.q is None:
                raise ValueError("a subspace universe needs q")
            if not isprime(self.q):
                raise ValueError(f"q must be prime, got {self.q}")
            if self.spec.mode == Mode.T_WISE and self.spec.t > 2:
                raise ValueError("t-wise search is only available for sets")
        return self


class SearchResult(BaseModel):
    """Best family found, with the bounds it was compared against."""

    optimum: Annotated[int, Field(ge=0)]
    witness: Union[SubsetFamily, SubspaceFamily]
    nodes_explored: Annotated[int, Field(ge=0)] = 0
    completed: bool = True
    bound_reports: List[BoundReport] = Field(default_factory=list)


class ConformanceReport(BaseModel):
    """Comparison of a search optimum with every applicable bound."""

    optimum: int
    completed: bool
    regime: str
    bounds: List[BoundReport]
    violated: List[str] = Field(default_factory=list)
    tight: List[str] = Field(default_factory=list)
    conjecture_exceeded: List[str] = Field(default_factory=list)

    @property
    def conforms(self) -> bool:
        """True when no proven bound with met hypotheses is exceeded."""
        return not self.violated


class TwisePartition(BaseModel):
    """
    Split of a t-wise family into the seeded part B (with shrunken partners C)
    and the remainder F.
    """

    order: List[int]
    B: List[int]
    C: List[int]
    F: List[int]
    checks: Dict[str, bool]
    witnesses: Dict[str, List[int]] = Field(default_factory=dict)

    @property
    def all_green(self) -> bool:
        """True when every check passed."""
        return all(self.checks.values())
