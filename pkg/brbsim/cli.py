"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

from tabulate import tabulate

from .constants import (
    CHECKS,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    MODES,
    PREDICATES,
    SCHEMES,
    VERSION,
)
from .converters import (
    argtype,
    load_document,
    parse_checks,
    parse_hex,
    parse_ids,
    parse_int_list,
    parse_points,
)
from .errors import BRBError, ConfigurationError, MalformedTraceError
from .simulator import RunTrace, ScenarioConfig, run
from .sweep import SweepSpec, campaign_configs, run_campaign, run_sweep, write_csv
from .utils import truncate_text
from .verification import PropertyReport, check_brb, run_checks

log: logging.Logger = logging.getLogger("seina.brbsim.cli")

__all__: Tuple[str, ...] = ("build_parser", "main")


DEFAULT_POINTS: str = "4x1,4x3,5x2,7x4"


def _scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", type=Path, help="JSON scenario file; flags override it")
    parser.add_argument("--n", type=int, help="number of processes")
    parser.add_argument("--t", type=int, help="Byzantine resilience threshold")
    parser.add_argument("--sender", type=int, help="sender id (default 1)")
    parser.add_argument(
        "--byzantine", type=argtype(parse_ids), help="Byzantine ids, e.g. 3,4 or 2-4"
    )
    parser.add_argument("--predicate", choices=PREDICATES)
    parser.add_argument("--adversary", help="descriptor, e.g. crash:process=1,round=1")
    parser.add_argument("--message", type=argtype(parse_hex), help="sender input as hex")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--scheme", choices=SCHEMES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brbsim",
        description="Synchronous Byzantine reliable broadcast with signature chains.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="simulate one scenario and write its trace")
    _scenario_arguments(run_parser)
    run_parser.add_argument("--out", type=Path, default=Path("trace.json"))
    run_parser.set_defaults(func=cmd_run)

    sweep = commands.add_parser("sweep", help="run a parameter grid and write CSV rows")
    sweep.add_argument("--spec", type=Path, help="JSON sweep spec; flags override it")
    sweep.add_argument("--n", type=argtype(parse_int_list))
    sweep.add_argument("--t", type=argtype(parse_int_list))
    sweep.add_argument("--byzantine-counts", type=argtype(parse_int_list))
    sweep.add_argument("--predicates", help="comma separated, e.g. gcl,lsp")
    sweep.add_argument(
        "--adversary", action="append", dest="adversaries", help="repeat for several"
    )
    sweep.add_argument("--seeds", type=argtype(parse_int_list))
    sweep.add_argument("--mode", choices=MODES)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--out", type=Path, help="CSV path, stdout when omitted")
    sweep.set_defaults(func=cmd_sweep)

    verify = commands.add_parser("verify", help="check properties on a recorded trace")
    verify.add_argument("trace", type=Path)
    verify.add_argument(
        "--checks", type=argtype(parse_checks), default=CHECKS, help=", ".join(CHECKS)
    )
    verify.add_argument("--out", type=Path, help="write the report as JSON")
    verify.set_defaults(func=cmd_verify)

    campaign = commands.add_parser("campaign", help="run every adversary and check everything")
    campaign.add_argument("--points", type=argtype(parse_points), default=DEFAULT_POINTS)
    campaign.add_argument("--seeds", type=argtype(parse_int_list), default=(0, 1, 2, 3))
    campaign.add_argument("--predicate", choices=PREDICATES, default="gcl")
    campaign.add_argument("--mode", choices=MODES, default="immediate")
    campaign.add_argument("--checks", type=argtype(parse_checks), default=CHECKS)
    campaign.add_argument("--workers", type=int, default=1)
    campaign.add_argument("--out", type=Path, help="write failing results as JSON")
    campaign.set_defaults(func=cmd_campaign)
    return parser


def _scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    data: Dict[str, Any] = load_document(args.scenario) if args.scenario else {}
    overrides = {
        "n": args.n,
        "t": args.t,
        "sender": args.sender,
        "byzantine": sorted(args.byzantine) if args.byzantine is not None else None,
        "predicate": args.predicate,
        "adversary": args.adversary,
        "message": args.message.hex() if args.message is not None else None,
        "seed": args.seed,
        "mode": args.mode,
        "scheme": args.scheme,
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    for key in ("n", "t"):
        if data.get(key) is None:
            raise ConfigurationError(f"--{key} is required (or set it in --scenario).")
    config = ScenarioConfig.from_dict(data)
    config.validate()
    return config


def _print_report(report: PropertyReport, stream: TextIO) -> None:
    print(tabulate(report.rows(), headers=("Property", "Verdict"), tablefmt="simple"), file=stream)
    for counterexample in report.counterexamples:
        print(f"  {counterexample}", file=stream)


def cmd_run(args: argparse.Namespace) -> int:
    config = _scenario_from_args(args)
    trace = run(config)
    args.out.write_text(trace.to_json(), encoding="utf-8")
    rows: List[Tuple[Any, ...]] = []
    for pid in config.members:
        delivery = trace.delivery_of(pid)
        role = "sender" if pid == config.sender else ""
        if pid in config.byzantine:
            rows.append((pid, (role + " byzantine").strip(), "-", "-"))
        elif delivery is None:
            rows.append((pid, role, "-", "-"))
        else:
            shown = "(none)" if delivery.message is None else truncate_text(str(delivery.message))
            rows.append((pid, role, delivery.round, shown))
    print(config)
    print(tabulate(rows, headers=("Process", "Role", "Round", "Delivered"), tablefmt="simple"))
    metrics = trace.metrics
    print(
        tabulate(
            [
                ("messages (correct)", metrics.correct_messages_sent),
                ("signatures (correct)", metrics.correct_signatures_sent),
                ("rejected chains", metrics.rejected_chains),
                ("rounds", metrics.rounds_executed),
            ],
            tablefmt="plain",
        )
    )
    print(f"trace written to {args.out}")
    report = check_brb(trace)
    if not report.ok:
        _print_report(report, sys.stdout)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    data: Dict[str, Any] = load_document(args.spec) if args.spec else {}
    overrides = {
        "n": list(args.n) if args.n is not None else None,
        "t": list(args.t) if args.t is not None else None,
        "byzantine_counts": (
            list(args.byzantine_counts) if args.byzantine_counts is not None else None
        ),
        "predicates": (
            [item.strip() for item in args.predicates.split(",") if item.strip()]
            if args.predicates
            else None
        ),
        "adversaries": args.adversaries,
        "seeds": list(args.seeds) if args.seeds is not None else None,
        "mode": args.mode,
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    for key in ("n", "t"):
        if key not in data:
            raise ConfigurationError(f"--{key} is required (or set it in --spec).")
    spec = SweepSpec.from_dict(data)
    rows = run_sweep(spec, workers=args.workers)
    if args.out is None:
        write_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as file:
            write_csv(rows, file)
        print(f"{len(rows)} rows written to {args.out}", file=sys.stderr)
    violations = sum(1 for row in rows if not row.brb_ok)
    late = sum(1 for row in rows if not row.latency_ok)
    print(
        f"{len(rows)} rows: {violations} BRB violations, {late} off the latency formula.",
        file=sys.stderr,
    )
    return EXIT_VIOLATION if violations or late else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        text = args.trace.read_text(encoding="utf-8")
    except OSError as error:
        raise MalformedTraceError(f"Cannot read {args.trace}: {error}") from error
    trace = RunTrace.from_json(text)
    report = run_checks(trace, args.checks)
    _print_report(report, sys.stdout)
    if args.out is not None:
        args.out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_campaign(args: argparse.Namespace) -> int:
    configs = campaign_configs(
        args.points, args.seeds, predicate=args.predicate, mode=args.mode
    )
    results = run_campaign(configs, args.checks, workers=args.workers)
    failing = [result for result in results if not result.ok]
    summary: Dict[Tuple[int, int, str], List[int]] = {}
    for result in results:
        key = (result.config.n, result.config.t, result.config.adversary.kind)
        counts = summary.setdefault(key, [0, 0])
        counts[0] += 1
        counts[1] += 0 if result.ok else 1
    rows = [(n, t, kind, runs, failed) for (n, t, kind), (runs, failed) in sorted(summary.items())]
    print(
        tabulate(
            rows,
            headers=("n", "t", "Adversary", "Runs", "Failed"),
            tablefmt="simple",
        )
    )
    for result in failing[:10]:
        print(f"FAIL {result.config}: {result.error or ', '.join(result.report.failures)}")
    if args.out is not None:
        document = {"runs": len(results), "failing": [item.to_dict() for item in failing]}
        args.out.write_text(json.dumps(document, indent=2, sort_keys=True))
    return EXIT_VIOLATION if failing else EXIT_OK


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (ConfigurationError, MalformedTraceError) as error:
        print(f"brbsim: error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except BRBError as error:
        log.error("Run aborted: %s", error)
        print(f"brbsim: violation: {error}", file=sys.stderr)
        return EXIT_VIOLATION
