"""
Command-line surface: count, enumerate, kernel and verify.

Each command handler takes the parsed arguments and the Settings of the
invocation and returns a CommandResult. Handlers raise ForestKernelError
subclasses for usage, parse, limit and domain errors; main.py turns those
into exit status 2.
"""

import argparse
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

from .config import Settings
from .config_manager import ConfigManager
from .count import CountQuery, closed_form_count, count_recursion
from .enumeration import brute_force_count, enumerate_forests
from .errors import PreconditionError
from .export import EXPORT_FORMATS, export_forests
from .kernel import q_count, q_eval, q_eval_by_enumeration, q_eval_by_matrix_tree
from .limits import check_size
from .model import Configuration, NumericMode, format_scalar, resolve_mode
from .schemas import OracleCheck, RunReport
from .verify import run_battery, user_case_from_file

logger = logging.getLogger(__name__)

KERNEL_METHODS = ("recursion", "enumeration", "matrix-tree")


@dataclass
class CommandResult:
    """A report, plus raw text when the command's output is an export."""
    report: RunReport
    text: Optional[str] = None


def non_negative_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {number}")
    return number


def positive_int(value: str) -> int:
    number = non_negative_int(value)
    if number == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return number


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_count(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """N(m|n) with optional cross-checks."""
    query = CountQuery(m=args.m, n=args.n)
    value = closed_form_count(query)
    report = RunReport(command="count", inputs={"m": query.m, "n": query.n}, outputs={"N": value})

    if args.check_recursion:
        report.checks.append(OracleCheck.compare(
            "count", "closed form vs recursion", value, count_recursion(query)))
    if args.check_enumeration:
        limit = settings.effective_enumeration_limit
        check_size(query.m + query.n, limit)
        brute = brute_force_count(Configuration.anonymous(query.m, query.n), limit)
        report.checks.append(OracleCheck.compare("count", "closed form vs brute force", value, brute))
    if args.check_kernel:
        report.checks.append(OracleCheck.compare(
            "count", "closed form vs Q(1,1)", value, q_count(query.m, query.n)))
    return CommandResult(report)


def cmd_enumerate(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """Every forest of a configuration file, exported as DOT, JSON or CSV."""
    config_file = ConfigManager(args.config).load()
    config = config_file.to_configuration()
    forests = enumerate_forests(
        config, limit=settings.effective_enumeration_limit, workers=settings.workers,
    )
    text = export_forests(forests, args.format)

    report = RunReport(
        command="enumerate",
        inputs={"config": str(args.config), "format": args.format},
        outputs={"forests": len(forests)},
    )
    if args.output:
        target = Path(args.output)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        report.outputs["output"] = str(target)
        return CommandResult(report)
    return CommandResult(report, text=text)


def cmd_kernel(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """Q_{h,nu}(eta|gamma) for a configuration file."""
    config_file = ConfigManager(args.config).load()
    config = config_file.to_configuration()
    h, nu = config_file.h, config_file.kernel
    mode = resolve_mode(h, nu, NumericMode(args.mode))

    pivot = None
    if args.pivot is not None:
        matches = [label for label in config.root_labels if str(label) == args.pivot]
        if not matches:
            raise PreconditionError(f"Pivot {args.pivot!r} is not a root")
        pivot = matches[0]

    report = RunReport(
        command="kernel",
        inputs={
            "config": str(args.config), "mode": mode.value, "method": args.method,
            "m": config.m, "n": config.n, "kernel": nu.kind,
        },
    )
    if config.overlap:
        shared = ", ".join(sorted(str(label) for label in config.overlap))
        report.notes.append(f"overlap boundary: roots and vertices share {shared}, Q = 0")

    tolerance = settings.float_tolerance
    if args.method == "recursion":
        value = q_eval(
            config, h, nu, pivot=pivot, mode=mode, limit=settings.effective_kernel_limit,
            debug=settings.debug_memo, tolerance=tolerance,
        )
    elif args.method == "enumeration":
        value = q_eval_by_enumeration(config, h, nu, mode=mode, limit=settings.effective_enumeration_limit)
    else:
        value = q_eval_by_matrix_tree(config, h, nu, mode=mode)
    report.outputs["Q"] = format_scalar(value)

    if args.check_enumeration and args.method != "enumeration":
        by_forests = q_eval_by_enumeration(config, h, nu, mode=mode, limit=settings.effective_enumeration_limit)
        report.outputs["Q_enumeration"] = format_scalar(by_forests)
        report.checks.append(OracleCheck.compare(
            "kernel", f"{args.method} vs enumeration", by_forests, value, tolerance))
    return CommandResult(report)


def cmd_verify(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """Full verification battery."""
    user_case = None
    if args.config:
        user_case = user_case_from_file(ConfigManager(args.config).load())

    started = time.perf_counter()
    report = run_battery(
        max_total=args.max_total,
        seed=args.seed,
        trials=args.trials,
        tolerance=settings.float_tolerance,
        limit=settings.effective_enumeration_limit,
        workers=settings.workers,
        user_case=user_case,
        dump_dir=Path(args.dump_dir) if args.dump_dir else None,
    )
    if args.config:
        report.inputs["config"] = str(args.config)
    if args.timing:
        report.elapsed_seconds = time.perf_counter() - started
    return CommandResult(report)


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], CommandResult]] = {
    "count": cmd_count,
    "enumerate": cmd_enumerate,
    "kernel": cmd_kernel,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _global_options(suppress: bool) -> argparse.ArgumentParser:
    # Subcommands repeat the global flags; SUPPRESS keeps them from resetting
    # a value given before the subcommand name.
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument(
        "--json",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="Print the report as JSON"
    )
    options.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        default=argparse.SUPPRESS if suppress else None,
        help="Log level (default: FOREST_KERNEL_LOG_LEVEL or WARNING)"
    )
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forest-kernel",
        description="Rooted labeled forests, the forest kernel Q and the count N(m|n) = m(m+n)^(n-1)",
        parents=[_global_options(suppress=False)],
    )
    common = _global_options(suppress=True)
    subparsers = parser.add_subparsers(dest="command", required=True)

    count = subparsers.add_parser("count", parents=[common], help="Number of forests N(m|n)")
    count.add_argument("--m", type=non_negative_int, required=True, help="Number of roots")
    count.add_argument("--n", type=non_negative_int, required=True, help="Number of non-root vertices")
    count.add_argument("--check-recursion", action="store_true", help="Compare with the count recursion")
    count.add_argument("--check-enumeration", action="store_true", help="Compare with brute-force enumeration")
    count.add_argument("--check-kernel", action="store_true", help="Compare with Q for h = nu = 1")

    enumerate_ = subparsers.add_parser("enumerate", parents=[common], help="List every forest of a configuration")
    enumerate_.add_argument("config", help="Configuration file (.json, .yaml)")
    enumerate_.add_argument("--format", choices=EXPORT_FORMATS, default="dot", help="Export format (default: dot)")
    enumerate_.add_argument("--output", "-o", help="Write the export here instead of stdout")

    kernel = subparsers.add_parser("kernel", parents=[common], help="Evaluate Q_{h,nu}(eta|gamma)")
    kernel.add_argument("config", help="Configuration file (.json, .yaml)")
    kernel.add_argument(
        "--mode",
        choices=[m.value for m in NumericMode],
        default=NumericMode.EXACT.value,
        help="Arithmetic (default: exact)"
    )
    kernel.add_argument("--method", choices=KERNEL_METHODS, default="recursion", help="Evaluator (default: recursion)")
    kernel.add_argument("--pivot", help="Root label peeled first")
    kernel.add_argument("--check-enumeration", action="store_true", help="Compare with the sum over enumerated forests")

    verify = subparsers.add_parser("verify", parents=[common], help="Run the verification battery")
    verify.add_argument("--max-total", type=positive_int, default=6, help="Largest m + n in the sweeps (default: 6)")
    verify.add_argument("--seed", type=int, default=1, help="Corpus seed (default: 1)")
    verify.add_argument("--trials", type=non_negative_int, default=50, help="Random configurations (default: 50)")
    verify.add_argument("--config", help="Also check this configuration file")
    verify.add_argument("--dump-dir", help="Write failing configurations here")
    verify.add_argument("--timing", action="store_true", help="Include elapsed time in the report")

    return parser
