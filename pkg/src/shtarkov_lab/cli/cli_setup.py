"""Command-line parsing, configuration initialization and dispatch."""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any

import pandas as pd

from shtarkov_lab import __version__
from shtarkov_lab.config.schema import RunConfig
from shtarkov_lab.models.report_types import Report
from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.shared.constants import DEFAULT_DELTA_GRID, DEFAULT_MC_SAMPLES
from shtarkov_lab.shared.exceptions import (
    ConfigurationError,
    DegenerateClassError,
    EnumerationBudgetExceeded,
    UnsupportedClassError,
    ValidationError,
)
from shtarkov_lab.tools import (
    cnml_tools,
    covers_tools,
    game_tools,
    linlab_tools,
    shtarkov_tools,
    truncation_tools,
    verify_tools,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3

logger = logging.getLogger(__name__)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _global_flags() -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand.

    Defaults are suppressed so a flag given at one level is not reset by the other.
    """
    flags = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    flags.add_argument(
        "--config", type=Path, help="Path to YAML configuration file (default: config/config.yaml)"
    )
    flags.add_argument("--spec", help="Class-spec JSON file")
    flags.add_argument("--horizon", type=int, help="Game horizon T")
    flags.add_argument("--seed", type=int, help="Seed for every random draw")
    flags.add_argument("--budget", type=int, help="Budget for every enumeration kind")
    flags.add_argument("--budget-trees", dest="budget_trees", type=int, help="Context-tree budget")
    flags.add_argument("--budget-seqs", dest="budget_seqs", type=int, help="Label-path budget")
    flags.add_argument(
        "--grid", type=float, help="Simplex-grid step 1/n for the grid oracle, e.g. 0.01"
    )
    flags.add_argument("--out", choices=["json", "table"], help="Report format")
    flags.add_argument("--tolerance", type=float, help="Equality tolerance")
    flags.add_argument("--timing", action="store_true", help="Include wall time in the report")
    flags.add_argument("--verbose", "-v", action="store_true", help="Log at INFO on stderr")
    return flags


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(
        prog="shtarkov-lab",
        description="Exact minimax regret, Shtarkov sums and cNML on small finite instances",
        parents=[flags],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def leaf(group, name: str, help: str) -> argparse.ArgumentParser:
        return group.add_parser(name, help=help, parents=[flags])

    # shtarkov
    shtarkov = commands.add_parser("shtarkov", help="Shtarkov-sum variants")
    group = shtarkov.add_subparsers(dest="action", required=True)
    leaf(group, "contextfree", "Context-free Shtarkov sum")
    p = leaf(group, "conditional", "Shtarkov sum at a fixed context sequence")
    p.add_argument("--contexts", type=_int_list, required=True, help="e.g. 0,1,1")
    p = leaf(group, "contextual", "Shtarkov sum along a context tree")
    p.add_argument("--tree", type=Path, required=True)
    p = leaf(group, "prefix", "Shtarkov sum of the continuations of a prefix")
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--prefix", type=Path, required=True)
    p = leaf(group, "worstcase", "Worst-case Shtarkov sum over context trees")
    p.add_argument("--prefix", type=Path)
    p.add_argument("--constraint", type=Path)
    p = leaf(group, "bruteforce", "Worst case by enumerating every context tree")
    p.add_argument("--constraint", type=Path)
    p = leaf(group, "mc", "Monte Carlo estimate along a context tree")
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    p = leaf(group, "general", "General Shtarkov sum of the induced sub-probability class")
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--prefix", type=Path)

    # game
    game = commands.add_parser("game", help="Game values")
    group = game.add_subparsers(dest="action", required=True)
    p = leaf(group, "solve", "Primal, dual and worst-case Shtarkov values")
    p.add_argument("--constraint", type=Path)
    p = leaf(group, "fixed", "Fixed-design minimax regret")
    p.add_argument("--constraint", type=Path)

    # cnml
    cnml = commands.add_parser("cnml", help="Contextual NML forecaster")
    group = cnml.add_subparsers(dest="action", required=True)
    p = leaf(group, "play", "Play one game against a worst-case or fixed-sequence adversary")
    p.add_argument("--forecaster", choices=cnml_tools.FORECASTERS, default="cnml")
    p.add_argument(
        "--adversary",
        default="worstcase",
        help='worstcase, or sequence:FILE holding {"contexts": [...], "labels": [...]}',
    )
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--constraint", type=Path)
    p = leaf(group, "worst", "Worst realized regret over every sequence")
    p.add_argument("--forecaster", choices=cnml_tools.FORECASTERS, default="cnml")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--constraint", type=Path)
    p = leaf(group, "predict", "cNML prediction after a prefix")
    p.add_argument("--prefix", type=Path, required=True)
    p.add_argument("--constraint", type=Path)

    # covers
    covers = commands.add_parser("covers", help="Covers, entropies and fat-shattering")
    group = covers.add_subparsers(dest="action", required=True)
    p = leaf(group, "min", "Minimum sequential cover on a tree")
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p = leaf(group, "entropy", "Sequential and global entropies")
    p.add_argument("--alpha", type=float, required=True)
    p = leaf(group, "global", "Smallest global sequential cover")
    p.add_argument("--alpha", type=float, required=True)
    p = leaf(group, "fat", "Sequential fat-shattering dimension")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p = leaf(group, "bounds", "Cover-based regret bounds over a scale grid")
    p.add_argument(
        "--alpha-grid", dest="alphas", type=_float_list, default=[0.05, 0.1, 0.2, 0.4]
    )

    # truncate
    truncate = commands.add_parser("truncate", help="Smooth truncation")
    group = truncate.add_subparsers(dest="action", required=True)
    p = leaf(group, "check", "Truncated-regret inequality over a delta grid")
    p.add_argument(
        "--delta-grid", dest="deltas", type=_float_list, default=list(DEFAULT_DELTA_GRID)
    )

    # linlab
    linlab = commands.add_parser("linlab", help="Linear classes on the unit ball")
    group = linlab.add_subparsers(dest="action", required=True)
    p = leaf(group, "lowerbound", "Conditional Shtarkov sum on the orthonormal design")
    p.add_argument("--dim", type=int)
    p = leaf(group, "sup", "Sup log-likelihood of a label sequence")
    p.add_argument("--labels", type=_int_list, required=True)
    p.add_argument("--dim", type=int)
    p = leaf(group, "compare", "Lin and AbsLin grid-class cover sizes")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--resolution", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.25)

    # verify
    p = leaf(commands, "verify", "Run every cross-check and report a pass/fail matrix")
    p.add_argument("--only", type=lambda s: [v for v in s.split(",") if v], help="Check names")

    return parser


def dispatch(args: argparse.Namespace) -> dict[str, Any]:
    """Call the tool handler for the parsed command."""
    action = getattr(args, "action", None)
    match (args.command, action):
        case ("shtarkov", "contextfree"):
            return shtarkov_tools.contextfree()
        case ("shtarkov", "conditional"):
            return shtarkov_tools.conditional(args.contexts)
        case ("shtarkov", "contextual"):
            return shtarkov_tools.contextual(args.tree)
        case ("shtarkov", "prefix"):
            return shtarkov_tools.prefix(args.tree, args.prefix)
        case ("shtarkov", "worstcase"):
            return shtarkov_tools.worstcase(args.prefix, args.constraint)
        case ("shtarkov", "bruteforce"):
            return shtarkov_tools.bruteforce(args.constraint)
        case ("shtarkov", "mc"):
            return shtarkov_tools.monte_carlo(args.tree, args.samples)
        case ("shtarkov", "general"):
            return shtarkov_tools.general(args.tree, args.prefix)
        case ("game", "solve"):
            return game_tools.solve(getattr(args, "grid", None), args.constraint)
        case ("game", "fixed"):
            return game_tools.fixed_design(args.constraint)
        case ("cnml", "play"):
            return cnml_tools.play(args.forecaster, args.adversary, args.delta, args.constraint)
        case ("cnml", "worst"):
            return cnml_tools.worst(args.forecaster, args.delta, args.constraint)
        case ("cnml", "predict"):
            return cnml_tools.predict(args.prefix, args.constraint)
        case ("covers", "min"):
            return covers_tools.min_cover(args.tree, args.alpha)
        case ("covers", "entropy"):
            return covers_tools.entropy(args.alpha)
        case ("covers", "global"):
            return covers_tools.global_cover(args.alpha)
        case ("covers", "fat"):
            return covers_tools.fat(args.alpha, args.max_depth)
        case ("covers", "bounds"):
            return covers_tools.bounds(args.alphas)
        case ("truncate", "check"):
            return truncation_tools.check(args.deltas)
        case ("linlab", "lowerbound"):
            return linlab_tools.lowerbound(args.dim)
        case ("linlab", "sup"):
            return linlab_tools.sup(args.labels, args.dim)
        case ("linlab", "compare"):
            return linlab_tools.compare_covers(args.dim, args.resolution, args.alpha)
        case ("verify", _):
            return verify_tools.verify(args.only)
    raise ValidationError(f"unknown command {args.command} {action}")


def _exit_code(command: str, result: dict[str, Any]) -> int:
    if command != "verify":
        return EXIT_OK
    if result["failed"]:
        return EXIT_VERIFY_FAILED
    if result["skipped"]:
        return EXIT_BUDGET
    return EXIT_OK


def render_json(report: Report) -> str:
    document = report.model_dump()
    if document["wall_time"] is None:
        del document["wall_time"]
    return json.dumps(document, sort_keys=True, allow_nan=True)


def render_table(report: Report) -> str:
    """Scalars as one key/value table, each list of records as its own table."""
    scalars = {}
    blocks = [" ".join(report.command)]
    for key, value in sorted(report.result.items()):
        if isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            blocks.append(f"\n{key}:\n{pd.DataFrame(value).to_string(index=False)}")
        else:
            scalars[key] = value
    if scalars:
        frame = pd.DataFrame({"value": [str(v) for v in scalars.values()]}, index=list(scalars))
        blocks.insert(1, frame.to_string())
    blocks.append(f"\nversion {report.version}")
    if report.wall_time is not None:
        blocks.append(f"wall time {report.wall_time:.3f}s")
    return "\n".join(blocks)


def initialize_config(args: argparse.Namespace) -> RunConfig:
    """Load configuration from YAML and environment, then apply CLI overrides."""
    if getattr(args, "config", None):
        os.environ["CONFIG_PATH"] = str(args.config)
    config = RunConfig.load()
    config.apply_cli_overrides(args)
    logging.getLogger().setLevel(config.log_level.upper())

    logger.info("Using configuration:")
    logger.info(f"  - Spec: {config.spec_path}")
    logger.info(f"  - Horizon: {config.horizon}, seed: {config.seed}")
    logger.info(f"  - Budgets: {config.effective_budgets.model_dump()}")
    return config


def run(argv: list[str]) -> int:
    """Run one command and write its report to stdout.

    Returns:
        0 on success, 1 when a verify check fails, 2 on invalid input or
        configuration, 3 when an enumeration budget is exhausted (or a verify
        check was skipped for that reason)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID

    started = time.perf_counter()
    try:
        config = initialize_config(args)
        ServiceContainer.set_config(config)
        result = dispatch(args)
    except EnumerationBudgetExceeded as e:
        logger.warning(f"Budget exhausted: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (
        ValidationError,
        ConfigurationError,
        UnsupportedClassError,
        DegenerateClassError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    report = Report(
        command=[args.command, *([args.action] if getattr(args, "action", None) else [])],
        config=config.model_dump(mode="json"),
        result=result,
        version=__version__,
        wall_time=time.perf_counter() - started if config.output.include_timing else None,
    )
    text = render_table(report) if config.output.format == "table" else render_json(report)
    print(text)
    return _exit_code(args.command, result)
