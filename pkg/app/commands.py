"""
Commands behind the command line: bound tables, family checks, certificates,
subspace enumeration, LYM sums, single searches and parameter scans.

Every command takes a validated RunConfig and returns a CommandResult holding
the rendered output and the process exit code.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from typing import (
    Annotated,
    Any,
    Dict,
    List,
    Literal,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from extremal.bounds import applicable_bounds, default_L, size_rule_needs_k
from extremal.exactnum import as_decimal_string, rational_to_string
from extremal.models import (
    MAX_GROUND_SET,
    BoundReport,
    ConformanceReport,
    IntersectionSpec,
    Mode,
    SearchProblem,
    SearchResult,
    SizeRule,
    SubsetFamily,
    SubspaceFamily,
    Universe,
)
from extremal.polymethod import certificate_to_text, lemma27_certify, replay_certificate
from extremal.qspace import (
    count_table,
    enumerate_subspaces,
    family_of,
    find_subspace_L_violation,
    find_subspace_sperner_violation,
    format_subspace_family,
    load_subspace_family,
    lym_sum,
    make_subspace,
    parse_subspace_family,
    q_sperner_report,
)
from extremal.search import solve, verify_bounds
from extremal.setfamily import (
    elements_of,
    find_L_violation,
    find_size_rule_violation,
    find_sperner_violation,
    find_t_wise_violation,
    format_set_family,
    load_set_family,
    make_family,
    parse_set_family,
    size_allowed,
)
from extremal.utils import get_setting, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HYPOTHESIS = 2
EXIT_BUDGET = 3
EXIT_VIOLATION = 4

BOUND_COLUMNS = ["theorem", "value", "applies", "strict", "proven", "notes"]
CHECK_COLUMNS = ["check", "passed", "witness"]
SCAN_COLUMNS = [
    "universe",
    "n",
    "q",
    "L",
    "K",
    "t",
    "size_rule",
    "sperner",
    "regime",
    "optimum",
    "completed",
    "nodes",
    "tight",
    "violated",
    "conjecture_exceeded",
    "error",
]

Command = Literal["bounds", "check", "certify", "enumerate", "lym", "search", "scan"]
Family = Union[SubsetFamily, SubspaceFamily]


class RunConfig(BaseModel):
    """Parameters of one command-line invocation."""

    command: Command
    universe: Universe = Universe.SETS
    n: Optional[Annotated[int, Field(ge=0, le=MAX_GROUND_SET)]] = None
    q: Optional[int] = None
    L: Optional[Tuple[int, ...]] = None
    K: Optional[Tuple[int, ...]] = None
    s: Optional[Annotated[int, Field(ge=1)]] = None
    t: Annotated[int, Field(ge=2)] = 2
    size_rule: Optional[SizeRule] = None
    sperner: bool = False
    dim: Optional[Annotated[int, Field(ge=0)]] = None
    inputs: List[str] = Field(default_factory=list)
    out: Optional[str] = None
    format: Optional[Literal["json", "csv", "text"]] = None
    threads: Optional[Annotated[int, Field(ge=1)]] = None
    time_budget: Optional[Annotated[float, Field(gt=0)]] = None
    candidate_cap: Optional[Annotated[int, Field(ge=0)]] = None
    symmetry_breaking: bool = False
    count_only: bool = False
    replay: bool = False
    config_path: Optional[str] = None
    # scan grid
    n_range: Optional[Tuple[int, int]] = None
    s_range: Optional[Tuple[int, int]] = None
    t_range: Optional[Tuple[int, int]] = None
    size_rules: Optional[List[SizeRule]] = None
    l_max: Optional[Annotated[int, Field(ge=0)]] = None

    @model_validator(mode="after")
    def _check_command(self):
        if self.size_rule is None:
            # an explicit K without a rule restricts sizes to K
            self.size_rule = SizeRule.IN_K if self.K is not None else SizeRule.NONE
        if self.L is not None and any(a >= b for a, b in zip(self.L, self.L[1:])):
            raise ValueError("L must be strictly increasing")
        needs_q = self.universe == Universe.SUBSPACES
        if self.command in ("bounds", "search") and self.n is None:
            raise ValueError(f"{self.command} needs --n")
        if self.command in ("bounds", "search") and needs_q and self.q is None:
            raise ValueError(f"{self.command} over subspaces needs --q")
        if self.command == "enumerate" and (self.n is None or self.q is None):
            raise ValueError("enumerate needs --n and --q")
        if self.command == "scan":
            if self.n_range is None:
                raise ValueError("scan needs --n")
            if needs_q and self.q is None:
                raise ValueError("scan over subspaces needs --q")
        if self.command in ("check", "lym") and len(self.inputs) != 1:
            raise ValueError(f"{self.command} reads exactly one family file")
        if self.command == "certify" and not 1 <= len(self.inputs) <= 2:
            raise ValueError("certify reads one or two family files")
        return self

    @property
    def output_format(self) -> str:
        """Requested format, JSON by default for search and scan."""
        if self.format:
            return self.format
        return "json" if self.command in ("search", "scan") else "text"


class CommandResult(BaseModel):
    """Rendered output of a command and the exit code it maps to."""

    output: str = ""
    exit_code: int = EXIT_OK


def resolve_L(cfg: RunConfig) -> Optional[Tuple[int, ...]]:
    """L as given, else {0, ..., s-1} when only s is given."""
    if cfg.L is not None:
        return cfg.L
    if cfg.s is not None:
        return tuple(default_L(cfg.s))
    return None


def build_spec(
    cfg: RunConfig, L: Sequence[int], K: Optional[Tuple[int, ...]] = None
) -> IntersectionSpec:
    """Constraint system of a command; t > 2 selects the t-wise mode."""
    return IntersectionSpec(
        L=tuple(L),
        K=K if K is not None else cfg.K,
        t=cfg.t,
        mode=Mode.T_WISE if cfg.t > 2 else Mode.PAIRWISE,
        size_rule=cfg.size_rule,
    )


def build_problem(cfg: RunConfig) -> SearchProblem:
    """
    Search problem described by the command-line parameters.

    Raises:
        ValueError: If neither L nor s is given.
    """
    L = resolve_L(cfg)
    if L is None:
        raise ValueError(f"{cfg.command} needs --L or --s")
    return SearchProblem(
        universe=cfg.universe,
        n=cfg.n,
        q=cfg.q if cfg.universe == Universe.SUBSPACES else None,
        spec=build_spec(cfg, L),
        sperner=cfg.sperner,
        candidate_cap=cfg.candidate_cap,
        time_budget=cfg.time_budget,
        threads=cfg.threads or get_setting("search", "threads", 1),
        symmetry_breaking=cfg.symmetry_breaking,
    )


def render_table(records: List[Dict[str, Any]], fmt: str, columns: List[str]) -> str:
    """Render records as a JSON list, CSV, or an aligned text table."""
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    frame = pd.DataFrame(records, columns=columns)
    if fmt == "csv":
        return frame.to_csv(index=False)
    return frame.to_string(index=False) + "\n"


def bound_record(report: BoundReport) -> Dict[str, Any]:
    """A bound as an output row; the value is a decimal string."""
    return {
        "theorem": report.theorem,
        "value": as_decimal_string(report.value),
        "applies": report.hypotheses_met,
        "strict": report.strict,
        "proven": report.proven,
        "notes": "; ".join(report.hypothesis_notes),
    }


def read_text(path: str) -> str:
    """
    Read an input file.

    Raises:
        FileNotFoundError: If the file does not exist.
        PermissionError: If the file cannot be read.
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            return file.read()
    except FileNotFoundError as e:
        logger.error("File not found: %s", e)
        raise
    except PermissionError as e:
        logger.error("Permission denied: %s", e)
        raise


def parse_family(text: str) -> Family:
    """Parse either family format, chosen by the header line."""
    first = next((line.strip() for line in text.splitlines() if line.strip()), "")
    if first.startswith("subspace-family"):
        return parse_subspace_family(text)
    return parse_set_family(text)


def family_to_json(family: Family) -> List[List[Any]]:
    """Members as element lists (sets) or basis row lists (subspaces)."""
    if isinstance(family, SubspaceFamily):
        return [[list(row) for row in member.basis] for member in family.members]
    return [elements_of(mask) for mask in family.members]


def family_from_json(problem: SearchProblem, witness: List[List[Any]]) -> Family:
    """Inverse of family_to_json for the universe of a problem."""
    if problem.universe == Universe.SUBSPACES:
        return family_of(
            (make_subspace(rows, problem.n, problem.q) for rows in witness),
            problem.n,
            problem.q,
        )
    return make_family(problem.n, witness)


def load_search_result(text: str) -> Tuple[SearchProblem, Family]:
    """
    Problem and witness of a search result written by `search`.

    Raises:
        ValueError: If the JSON lacks the problem or witness.
    """
    data = json.loads(text)
    try:
        problem = SearchProblem.model_validate(data["problem"])
        witness = data["witness"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"not a search result, missing {e}") from e
    return problem, family_from_json(problem, witness)


def _witness_members(family: Family, indices: Optional[Sequence[int]]) -> List[Any]:
    if not indices:
        return []
    return [family_to_json(family)[i] for i in indices]


def family_checks(
    family: Family, spec: Optional[IntersectionSpec], sperner: bool
) -> List[Dict[str, Any]]:
    """
    Run every hypothesis predicate that the parameters call for.

    Returns:
        One row per check with the members witnessing a failure.
    """
    rows = [{"check": "distinct-members", "passed": True, "witness": []}]

    def add(name: str, violation: Optional[Sequence[int]]):
        rows.append(
            {
                "check": name,
                "passed": violation is None,
                "witness": _witness_members(family, violation),
            }
        )

    if isinstance(family, SubspaceFamily):
        if spec is not None:
            if spec.effective_t > 2:
                raise ValueError("t-wise checks are only available for sets")
            add("L-intersecting", find_subspace_L_violation(family, spec.L))
            if spec.size_rule != SizeRule.NONE:
                bad = next(
                    (
                        i
                        for i, member in enumerate(family.members)
                        if not size_allowed(member.dim, spec)
                    ),
                    None,
                )
                add("size-rule", None if bad is None else [bad])
        if sperner:
            add("sperner", find_subspace_sperner_violation(family))
        return rows

    if spec is not None:
        if spec.effective_t > 2:
            add(
                "t-wise-L-intersecting",
                find_t_wise_violation(family, spec.L, spec.t),
            )
        else:
            add("L-intersecting", find_L_violation(family, spec.L))
        if spec.size_rule != SizeRule.NONE:
            bad = find_size_rule_violation(family, spec)
            add("size-rule", None if bad is None else [bad])
    if sperner:
        add("sperner", find_sperner_violation(family))
    return rows


def cmd_bounds(cfg: RunConfig) -> CommandResult:
    """Table of every bound for the parameters, smallest value first."""
    problem = build_problem(cfg)
    records = [bound_record(report) for report in applicable_bounds(problem)]
    return CommandResult(
        output=render_table(records, cfg.output_format, BOUND_COLUMNS)
    )


def cmd_check(cfg: RunConfig) -> CommandResult:
    """
    Check a family file, or the witness of a search result, against the
    L-intersection, t-wise, size rule and Sperner conditions.

    A search result is checked against its own problem; a family file against
    the command-line parameters.
    """
    text = read_text(cfg.inputs[0])
    if text.lstrip().startswith("{"):
        problem, family = load_search_result(text)
        spec, sperner = problem.spec, problem.sperner
    else:
        family = parse_family(text)
        L = resolve_L(cfg)
        spec = build_spec(cfg, L) if L is not None else None
        sperner = cfg.sperner
    rows = family_checks(family, spec, sperner)
    failed = [row["check"] for row in rows if not row["passed"]]
    if failed:
        logger.info("Family in %s fails: %s", cfg.inputs[0], ", ".join(failed))
    return CommandResult(
        output=render_table(rows, cfg.output_format, CHECK_COLUMNS),
        exit_code=EXIT_HYPOTHESIS if failed else EXIT_OK,
    )


def cmd_certify(cfg: RunConfig) -> CommandResult:
    """
    Certify a family (one file) or a pair A, B (two files) with the polynomial
    method, or replay a serialized certificate with --replay.
    """
    if cfg.replay:
        matches = replay_certificate(read_text(cfg.inputs[0]))
        return CommandResult(
            output=f"replay: {'match' if matches else 'mismatch'}\n",
            exit_code=EXIT_OK if matches else EXIT_VIOLATION,
        )
    L = resolve_L(cfg)
    if L is None:
        raise ValueError("certify needs --L or --s")
    families = [load_set_family(path) for path in cfg.inputs]
    A = families[0]
    B = families[1] if len(families) > 1 else A
    result = lemma27_certify(A, B, L)
    if cfg.output_format == "json":
        summary = {
            "n": result.n,
            "L": list(result.L),
            "m": result.m,
            "auxiliary": result.auxiliary_count,
            "rank": result.certificate.rank,
            "independent": result.certificate.independent,
            "evaluation_pattern_ok": result.evaluation_pattern_ok,
            "dimension_bound": as_decimal_string(result.dimension_bound),
            "family_bound": as_decimal_string(result.family_bound),
            "verified": result.verified,
            "certificate": certificate_to_text(result),
        }
        output = json.dumps(summary, indent=2) + "\n"
    else:
        output = certificate_to_text(result)
    return CommandResult(
        output=output, exit_code=EXIT_OK if result.verified else EXIT_VIOLATION
    )


def cmd_enumerate(cfg: RunConfig) -> CommandResult:
    """All subspaces of GF(q)^n (of one dimension with --dim), or their counts."""
    if cfg.count_only:
        records = [
            {
                "dim": k,
                "count": as_decimal_string(count),
                "qbinom": as_decimal_string(expected),
            }
            for k, (count, expected) in count_table(cfg.n, cfg.q).items()
        ]
        return CommandResult(
            output=render_table(
                records, cfg.output_format, ["dim", "count", "qbinom"]
            )
        )
    family = enumerate_subspaces(cfg.n, cfg.q, cfg.dim)
    if cfg.output_format == "json":
        output = json.dumps(family_to_json(family)) + "\n"
    else:
        output = format_subspace_family(family)
    return CommandResult(output=output)


def cmd_lym(cfg: RunConfig) -> CommandResult:
    """LYM sum and q-Sperner comparison of a subspace family."""
    family = load_subspace_family(cfg.inputs[0])
    total = lym_sum(family)
    report = q_sperner_report(family, cfg.dim)
    record = {"lym_sum": rational_to_string(total), **report.model_dump()}
    conforms = (
        total <= 1 and report.within_bound and report.equality_holds is not False
    )
    columns = ["lym_sum"] + list(report.model_dump())
    return CommandResult(
        output=render_table([record], cfg.output_format, columns),
        exit_code=EXIT_OK if conforms else EXIT_VIOLATION,
    )


def search_record(
    problem: SearchProblem, result: SearchResult, conformance: ConformanceReport
) -> Dict[str, Any]:
    """The JSON record of one search."""
    return {
        "problem": problem.model_dump(mode="json"),
        "optimum": result.optimum,
        "witness": family_to_json(result.witness),
        "bounds": [bound_record(report) for report in result.bound_reports],
        "nodes": result.nodes_explored,
        "completed": result.completed,
        "regime": conformance.regime,
        "tight": conformance.tight,
        "violated": conformance.violated,
        "conjecture_exceeded": conformance.conjecture_exceeded,
    }


def _search_exit_code(conformance: ConformanceReport) -> int:
    if conformance.violated:
        return EXIT_VIOLATION
    if not conformance.completed:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_search(cfg: RunConfig) -> CommandResult:
    """Exact maximum family for one problem, compared with every bound."""
    problem = build_problem(cfg)
    result = solve(problem)
    conformance = verify_bounds(result, problem)
    exit_code = _search_exit_code(conformance)
    if cfg.output_format == "json":
        record = search_record(problem, result, conformance)
        return CommandResult(
            output=json.dumps(record, indent=2) + "\n", exit_code=exit_code
        )

    records = []
    for report in result.bound_reports:
        row = bound_record(report)
        row["tight"] = report.theorem in conformance.tight
        row["violated"] = report.theorem in conformance.violated
        records.append(row)
    table = render_table(
        records, cfg.output_format, BOUND_COLUMNS + ["tight", "violated"]
    )
    if cfg.output_format == "csv":
        return CommandResult(output=table, exit_code=exit_code)
    if isinstance(result.witness, SubspaceFamily):
        witness = format_subspace_family(result.witness)
    else:
        witness = format_set_family(result.witness)
    header = (
        f"optimum: {result.optimum} (completed={result.completed}, "
        f"nodes={result.nodes_explored}, regime={conformance.regime})\n"
    )
    return CommandResult(
        output=header + witness + "\n" + table, exit_code=exit_code
    )


def _scan_L_sets(cfg: RunConfig) -> List[Tuple[int, ...]]:
    """Every L of the grid: given explicitly, or all s-subsets of {0..l_max}."""
    if cfg.L is not None:
        return [cfg.L]
    s_low, s_high = cfg.s_range or (1, 1)
    l_max = cfg.l_max if cfg.l_max is not None else s_high - 1
    return [
        L
        for s in range(s_low, s_high + 1)
        for L in combinations(range(l_max + 1), s)
    ]


def scan_problems(cfg: RunConfig) -> List[SearchProblem]:
    """
    Instances of a scan in their output order: n, then L, size rule, K and t.

    Rules defined through K sweep every singleton K = {k} unless --K is given.
    Combinations that do not form a valid problem are skipped.
    """
    n_low, n_high = cfg.n_range
    t_low, t_high = cfg.t_range or (cfg.t, cfg.t)
    rules = cfg.size_rules or list(SizeRule)
    q = cfg.q if cfg.universe == Universe.SUBSPACES else None
    problems = []
    for n in range(n_low, n_high + 1):
        for L in _scan_L_sets(cfg):
            for rule in rules:
                if size_rule_needs_k(rule):
                    choices = [cfg.K] if cfg.K else [(k,) for k in range(1, n + 1)]
                else:
                    choices = [None]
                for K in choices:
                    for t in range(t_low, t_high + 1):
                        try:
                            spec = IntersectionSpec(
                                L=L,
                                K=K,
                                t=t,
                                mode=Mode.T_WISE if t > 2 else Mode.PAIRWISE,
                                size_rule=rule,
                            )
                            problems.append(
                                SearchProblem(
                                    universe=cfg.universe,
                                    n=n,
                                    q=q,
                                    spec=spec,
                                    sperner=cfg.sperner,
                                    candidate_cap=cfg.candidate_cap,
                                    time_budget=cfg.time_budget,
                                    symmetry_breaking=cfg.symmetry_breaking,
                                )
                            )
                        except ValidationError as e:
                            logger.debug(
                                "Skipping n=%d L=%s rule=%s K=%s t=%d: %s",
                                n,
                                L,
                                rule.value,
                                K,
                                t,
                                e.errors()[0]["msg"],
                            )
    logger.info("Scan grid has %d instances", len(problems))
    return problems


def run_instance(problem: SearchProblem) -> Dict[str, Any]:
    """Search one scan instance and compare it with the bounds."""
    record: Dict[str, Any] = {"problem": problem.model_dump(mode="json")}
    try:
        result = solve(problem)
    except ValueError as e:
        logger.warning("Instance skipped: %s", e)
        record["error"] = str(e)
        return record
    conformance = verify_bounds(result, problem)
    record.update(
        {
            "regime": conformance.regime,
            "optimum": result.optimum,
            "completed": result.completed,
            "nodes": result.nodes_explored,
            "tight": conformance.tight,
            "violated": conformance.violated,
            "conjecture_exceeded": conformance.conjecture_exceeded,
            "conforms": conformance.conforms,
        }
    )
    return record


def _scan_row(record: Dict[str, Any]) -> Dict[str, Any]:
    problem = record["problem"]
    spec = problem["spec"]
    return {
        "universe": problem["universe"],
        "n": problem["n"],
        "q": problem["q"],
        "L": ",".join(str(l) for l in spec["L"]),
        "K": ",".join(str(k) for k in spec["K"] or []),
        "t": spec["t"],
        "size_rule": spec["size_rule"],
        "sperner": problem["sperner"],
        "regime": record.get("regime"),
        "optimum": record.get("optimum"),
        "completed": record.get("completed"),
        "nodes": record.get("nodes"),
        "tight": ",".join(record.get("tight", [])),
        "violated": ",".join(record.get("violated", [])),
        "conjecture_exceeded": ",".join(record.get("conjecture_exceeded", [])),
        "error": record.get("error", ""),
    }


def cmd_scan(cfg: RunConfig) -> CommandResult:
    """
    Search every instance of a parameter grid.

    Instances run in up to --threads worker processes; records come back in
    grid order. JSON output is one record per line.

    Returns:
        Exit code 4 iff a completed instance violates a bound whose hypotheses
        hold.
    """
    problems = scan_problems(cfg)
    threads = cfg.threads or get_setting("search", "threads", 1)
    if threads > 1 and len(problems) > 1:
        with ProcessPoolExecutor(
            max_workers=threads, initializer=load_config, initargs=(cfg.config_path,)
        ) as pool:
            records = list(pool.map(run_instance, problems))
    else:
        records = [run_instance(problem) for problem in problems]

    violated = any(
        record.get("completed") and record.get("violated") for record in records
    )
    if cfg.output_format == "json":
        output = "".join(json.dumps(record) + "\n" for record in records)
    else:
        rows = [_scan_row(record) for record in records]
        output = render_table(rows, cfg.output_format, SCAN_COLUMNS)
    return CommandResult(
        output=output, exit_code=EXIT_VIOLATION if violated else EXIT_OK
    )


COMMANDS = {
    "bounds": cmd_bounds,
    "check": cmd_check,
    "certify": cmd_certify,
    "enumerate": cmd_enumerate,
    "lym": cmd_lym,
    "search": cmd_search,
    "scan": cmd_scan,
}


def run_command(cfg: RunConfig) -> CommandResult:
    """Dispatch a configuration to its command."""
    logger.debug("Running %s with %s", cfg.command, cfg)
    return COMMANDS[cfg.command](cfg)
