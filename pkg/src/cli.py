"""
Command Line Interface
Scenario-driven runs, explorations, sweeps, emergence checks and logic queries.
"""

import argparse
import io
import logging
import os
import sys
from typing import List, Optional, Sequence

from src import config
from src.exceptions import (
    ConfigurationError,
    FlpeError,
    FormulaSyntaxError,
    PreconditionError,
    ResourceCapError,
    TopologyError,
    TraceFormatError,
)
from src.formulas import parse_sequent
from src.measurement import FeatureId, count_faulty_total, execution_profile, fault_counters
from src.paralogic import LogicId, entails
from src.phases import Transformation, bridge_verdict, check_emergence, sweep
from src.scheduler import check_admissible, explore, run
from src.utils.scenario import Scenario, load_scenario, with_overrides
from src.utils.trace_io import replay_trace, write_sweep_csv, write_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_RESOURCE = 4


def _scenario(args) -> Scenario:
    path = args.scenario_file or args.scenario
    if not path:
        raise ConfigurationError("No scenario given (use --scenario <path>)")
    scenario = load_scenario(path)
    return with_overrides(
        scenario,
        seed=getattr(args, "seed", None),
        depth_bound=getattr(args, "depth", None),
        state_cap=getattr(args, "cap", None),
    )


def _out_dir(args) -> str:
    return args.out or config.output_dir()


def _parse_range(text: Optional[str], scenario: Scenario) -> List[int]:
    """``a..b`` inclusive; an inverted range is empty. Default: 0..crash_budget."""
    if text is None:
        return list(range(scenario.crash_budget + 1))
    try:
        low, high = (int(part) for part in text.split(".."))
    except ValueError:
        raise ConfigurationError(f"Range must look like '0..2', got {text!r}")
    return list(range(low, high + 1))


def cmd_run(args) -> int:
    scenario = _scenario(args)
    system = scenario.materialize()
    adversary = scenario.to_adversary(system.topology)
    execution = run(
        system.topology, system.initial, system.protocol, adversary, scenario.step_bound
    )

    path = os.path.join(_out_dir(args), f"{scenario.name}_seed{scenario.seed}.jsonl")
    write_trace(path, scenario, execution)

    profile = execution_profile(execution)
    report = check_admissible(execution)
    counters = " ".join(
        f"g_{level}={count}" for level, count in enumerate(fault_counters(execution))
    )
    print(f"scenario: {scenario.name}")
    print(f"profile: {profile.code[0]},{profile.code[1]},{profile.code[2]}")
    print(f"faults: {counters} g_inf={count_faulty_total(execution)}")
    print(
        f"admissible: {'yes' if report.admissible else 'no'} "
        f"(hierarchy: {'yes' if report.hierarchy_admissible else 'no'}"
        f"{', advisory' if report.advisory else ''})"
    )
    print(f"steps: {len(execution.steps)}{' (truncated)' if execution.truncated else ''}")
    print(f"trace: {path}")
    return EXIT_OK


def cmd_explore(args) -> int:
    scenario = _scenario(args)
    system = scenario.materialize()
    result = explore(
        system.topology,
        system.initial,
        system.protocol,
        depth_bound=scenario.depth_bound,
        crash_budget=scenario.crash_budget,
        crash_targets=system.crash_targets(scenario.crash_level),
        state_cap=scenario.state_cap,
    )
    print(
        f"scenario: {scenario.name} "
        f"(depth {result.depth_bound}, crash budget {scenario.crash_budget})"
    )
    print(
        f"visited: {result.visited} terminal: {result.terminal_count} "
        f"cut off: {result.truncated_count}"
    )
    for profile, witness in sorted(result.profiles.items()):
        path = os.path.join(_out_dir(args), f"{scenario.name}_witness_{profile.code}.jsonl")
        write_trace(path, scenario, witness)
        print(f"profile {profile} witness {len(witness.steps)} steps: {path}")
    if result.partial:
        print("partial: state cap reached")
        return EXIT_RESOURCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _scenario(args)
    feature = FeatureId.parse(args.feature)
    values = _parse_range(args.range, scenario)
    rows = sweep(scenario, feature, values)

    out_dir = _out_dir(args)
    witness_paths = {}
    for row in rows:
        if not row.profiles:
            continue
        fresh = sorted(row.profiles)[0]
        path = os.path.join(out_dir, f"{scenario.name}_{feature}_{row.value}.jsonl")
        write_trace(path, scenario, row.witnesses[fresh])
        witness_paths[row.value] = path

    buffer = io.StringIO()
    write_sweep_csv(buffer, str(feature), rows, witness_paths)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{scenario.name}_sweep.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())

    if args.format == "csv":
        sys.stdout.write(buffer.getvalue())
    else:
        for row in rows:
            profiles = " ".join(str(p) for p in sorted(row.profiles))
            suffix = " (partial)" if row.partial else ""
            worst = row.worst if row.worst is not None else "unknown"
            print(f"{feature}={row.value}: {profiles or '-'} worst {worst}{suffix}")
        print(f"report: {csv_path}")
    return EXIT_RESOURCE if any(row.partial for row in rows) else EXIT_OK


def cmd_emergence(args) -> int:
    scenario = _scenario(args)
    transformation = Transformation.parse(args.transform)
    values = _parse_range(args.range, scenario)
    verdict = check_emergence(scenario, transformation, values, args.target)
    print(f"baseline: {verdict.transition.describe()}")
    if verdict.transformed is not None:
        print(f"after {verdict.postponement}: {verdict.transformed.describe()}")
    print(verdict.render())
    return EXIT_OK


def cmd_logic(args) -> int:
    try:
        logic = LogicId.parse(args.logic)
    except ValueError as e:
        raise ConfigurationError(str(e))
    gamma, goal = parse_sequent(args.query)
    print(entails(logic, gamma, goal).verdict())
    return EXIT_OK


def cmd_bridge(args) -> int:
    try:
        logic = LogicId.parse(args.logic)
    except ValueError as e:
        raise ConfigurationError(str(e))
    _, execution = replay_trace(args.trace)
    print(bridge_verdict(execution, logic))
    return EXIT_OK


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario_file", nargs="?", help="Scenario file")
    parser.add_argument("--scenario", help="Scenario file")
    parser.add_argument("--out", help="Output directory (default FLPE_OUT or ./out)")
    parser.add_argument("--seed", type=int, help="Override the scenario seed")
    parser.add_argument("--depth", type=int, help="Exploration depth bound")
    parser.add_argument("--cap", type=int, help="Visited-state cap (overrides FLPE_CAP)")
    parser.add_argument("--format", choices=["csv", "text"], default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flpe",
        description="Consensus phase-transition simulator and paraconsistent logic engine",
    )
    parser.add_argument(
        "--log-level", default=None, help="Logging level (default LOG_LEVEL or WARNING)"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("run", help="Run one seeded execution and write its trace")
    _add_scenario_flags(p)
    p.set_defaults(handler=cmd_run)

    p = commands.add_parser("explore", help="Explore every schedule up to the depth bound")
    _add_scenario_flags(p)
    p.set_defaults(handler=cmd_explore)

    p = commands.add_parser("sweep", help="Sweep a fault-count feature and report profiles")
    _add_scenario_flags(p)
    p.add_argument("--feature", default="level:0", help="'fault-count' or 'level:<n>'")
    p.add_argument("--range", help="Inclusive range, e.g. 0..2 (default 0..crash_budget)")
    p.set_defaults(handler=cmd_sweep)

    p = commands.add_parser("emergence", help="Check a transition recurs after postponement")
    _add_scenario_flags(p)
    p.add_argument("--transform", default="add-oracle", help="'add-oracle' or 'pad:<k>'")
    p.add_argument("--range", help="Inclusive fault-count range (default 0..crash_budget)")
    p.add_argument("--target", type=int, help="Process the added oracle monitors")
    p.set_defaults(handler=cmd_emergence)

    p = commands.add_parser("logic", help="Decide 'GAMMA |- GOAL' in a logic")
    p.add_argument("logic", help="cpl, mbc or c1..c5")
    p.add_argument("query", help="e.g. 'A, ~A |- B'")
    p.set_defaults(handler=cmd_logic)

    p = commands.add_parser("bridge", help="Judge a trace's outcome under CPL and a chosen logic")
    p.add_argument("trace", help="Trace file written by run/explore/sweep")
    p.add_argument("logic", nargs="?", default="mbc", help="Logic to compare with CPL")
    p.set_defaults(handler=cmd_bridge)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or config.log_level("WARNING")).upper(),
        format=config.LOG_FORMAT,
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (ConfigurationError, FormulaSyntaxError, TraceFormatError, TopologyError) as e:
        logger.error(f"Input error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as e:
        logger.error(f"Precondition not met: {e}")
        print(f"not applicable: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceCapError as e:
        logger.error(f"Resource cap: {e}")
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except FlpeError as e:
        logger.error(f"Failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
