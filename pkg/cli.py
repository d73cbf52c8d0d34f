"""
Command line for bounds, checks and exact searches on L-intersecting families.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands import (
    EXIT_HYPOTHESIS,
    EXIT_USAGE,
    RunConfig,
    run_command,
)
from app.utils import int_list, int_range, is_debug_mode, size_rule_list
from extremal.errors import FamilyFormatError, HypothesisError
from extremal.models import SizeRule, Universe
from extremal.utils import load_config, reset_config

logger = logging.getLogger(__name__)


class UsageParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _problem_options(parser: argparse.ArgumentParser, grid: bool = False) -> None:
    parser.add_argument(
        "--universe", type=Universe, default=Universe.SETS, help="sets or subspaces"
    )
    if grid:
        parser.add_argument("--n", dest="n_range", type=int_range, help="range a..b")
        parser.add_argument("--s", dest="s_range", type=int_range, help="range a..b")
        parser.add_argument("--t", dest="t_range", type=int_range, help="range a..b")
        parser.add_argument(
            "--size-rule", dest="size_rules", type=size_rule_list, help="comma list"
        )
        parser.add_argument("--l-max", type=int, help="largest value in the L grid")
    else:
        parser.add_argument("--n", type=int, help="ground set size or dimension")
        parser.add_argument("--s", type=int, help="use L = {0..s-1}")
        parser.add_argument("--t", type=int, default=2, help="t > 2 means t-wise")
        parser.add_argument(
            "--size-rule",
            type=SizeRule,
            help="none, in-K, not-in-L or snevily; in-K when --K is given",
        )
    parser.add_argument("--q", type=int, help="prime field order for subspaces")
    parser.add_argument("--L", type=int_list, help="allowed intersections, e.g. 0,1")
    parser.add_argument("--K", type=int_list, help="allowed sizes, e.g. 2,3")
    parser.add_argument("--sperner", action="store_true", help="require an antichain")


def _search_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=int, help="workers")
    parser.add_argument("--time-budget", type=float, help="seconds per search")
    parser.add_argument("--candidate-cap", type=int, help="largest candidate list")
    parser.add_argument(
        "--symmetry-breaking",
        action="store_true",
        help="start from one member per size class",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "text"])
    common.add_argument("--out", help="write the output here instead of stdout")
    common.add_argument("--config", dest="config_path", help="alternative config.yaml")
    common.add_argument("--log-file", help="write the log here instead of stderr")

    parser = UsageParser(prog="cli.py", description=__doc__.strip())
    commands = parser.add_subparsers(
        dest="command", required=True, parser_class=UsageParser
    )

    bounds = commands.add_parser("bounds", parents=[common], help="bound table")
    _problem_options(bounds)

    check = commands.add_parser("check", parents=[common], help="check a family")
    _problem_options(check)
    check.add_argument("inputs", nargs=1, help="family file or search JSON")

    certify = commands.add_parser(
        "certify", parents=[common], help="polynomial-method certificate"
    )
    _problem_options(certify)
    certify.add_argument("inputs", nargs="+", help="family A [family B]")
    certify.add_argument(
        "--replay", action="store_true", help="re-verify a certificate file"
    )

    enumerate_ = commands.add_parser(
        "enumerate", parents=[common], help="subspaces of GF(q)^n"
    )
    enumerate_.add_argument("--n", type=int)
    enumerate_.add_argument("--q", type=int)
    enumerate_.add_argument("--dim", type=int, help="only this dimension")
    enumerate_.add_argument(
        "--count-only", action="store_true", help="counts next to qbinom"
    )

    lym = commands.add_parser("lym", parents=[common], help="LYM sum of subspaces")
    lym.add_argument("inputs", nargs=1, help="subspace family file")
    lym.add_argument("--dim", type=int, help="dimension cap of the family")

    search = commands.add_parser("search", parents=[common], help="exact maximum")
    _problem_options(search)
    _search_options(search)

    scan = commands.add_parser("scan", parents=[common], help="search a grid")
    _problem_options(scan, grid=True)
    _search_options(scan)
    return parser


def write_output(text: str, path: Optional[str]) -> None:
    """Write to a file, or to stdout when no path is given."""
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as file:
            file.write(text)
        logger.info("Wrote output to %s", path)
    except IOError as e:
        logger.error("Error writing output file: %s", e)
        raise


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    options = vars(args)
    log_file = options.pop("log_file")

    # Configure logging
    logging.basicConfig(
        level=logging.DEBUG if is_debug_mode() else logging.WARN,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        filename=log_file,
        filemode="w",
    )
    reset_config()
    load_config(options.get("config_path"))

    try:
        cfg = RunConfig(**{k: v for k, v in options.items() if v is not None})
        result = run_command(cfg)
        write_output(result.output, cfg.out)
    except HypothesisError as e:
        sys.stderr.write(f"hypothesis failed: {e}\n")
        if e.witness:
            sys.stderr.write(f"witness: {e.witness}\n")
        return EXIT_HYPOTHESIS
    except FamilyFormatError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_USAGE
    except ValidationError as e:
        sys.stderr.write(f"invalid parameters: {e}\n")
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
