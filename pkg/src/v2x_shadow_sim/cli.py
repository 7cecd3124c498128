"""
Command-line entry point.

Subcommands:
    run      single simulation
    sweep    densities x seeds x policies
    compare  all policies on shared seeds (policy comparison table)
    cdf      pooled per-window PRR CDF per policy
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import __version__
from .config import ChannelParams, PolicyKind, ScenarioConfig, SimConfig, load_scenario_file
from .engine import RunMetrics, collect_cdf, run
from .exceptions import ConfigurationError, SimulatorError, map_validation_error
from .relay import DecisionEvent
from .reports import (
    ReportRow,
    render_cdf,
    render_report,
    render_sweep,
    write_atomic,
    write_jsonl_atomic,
)
from .sweep import ALL_POLICIES, compare_policies, sweep_density, with_policy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser raising ConfigurationError instead of exiting."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def parse_seeds(text: str) -> list[int]:
    """Expand '7', '1..20' and comma lists such as '1..3,9' into seeds."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        try:
            if ".." in part:
                low, high = (int(v) for v in part.split("..", 1))
                if low > high:
                    raise ValueError
                seeds.extend(range(low, high + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigurationError(f"Invalid seed specification {part!r}", flag="--seed") from None
    if any(not 0 <= s < 2**64 for s in seeds):
        raise ConfigurationError("Seeds must be unsigned 64-bit integers", flag="--seed")
    return seeds


def parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"Invalid number list {text!r}", flag=flag) from None
    return values


def parse_policies(text: str) -> list[PolicyKind]:
    try:
        return [PolicyKind(name.strip()) for name in text.split(",")]
    except ValueError:
        valid = ", ".join(p.value for p in PolicyKind)
        raise ConfigurationError(f"Unknown policy in {text!r} (expected one of {valid})", flag="--policy") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="Scenario TOML file")
    common.add_argument("--policy", help="Policy name, or comma list for sweep/compare/cdf")
    common.add_argument("--seed", help="Seed, range 'a..b' or comma list")
    common.add_argument("--density", help="Spawn spacing N in meters (comma list for sweep)")
    common.add_argument("--speed", type=float, help="Ego target speed in km/h")
    common.add_argument("--compression", type=int, choices=(16, 32), help="Point-cloud compression rate")
    common.add_argument("--duration", type=float, help="Simulated seconds")
    common.add_argument("--retransmissions", type=int, help="Extra attempts per hop")
    common.add_argument("--out", type=Path, default=Path("results"), help="Output directory")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table", help="Report format")
    common.add_argument("--jobs", type=int, default=1, help="Parallel runs")
    common.add_argument("--trace", action="store_true", help="Write relay decision traces (JSON Lines)")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")

    parser = _ArgumentParser(prog="v2x-shadow-sim", description="V2X obstacle-shadowing relay selection simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    commands.add_parser("run", parents=[common], help="Run a single simulation")
    commands.add_parser("sweep", parents=[common], help="Density sweep over seeds and policies")
    commands.add_parser("compare", parents=[common], help="Compare all policies on shared seeds")
    commands.add_parser("cdf", parents=[common], help="Export the pooled per-window PRR CDF")
    return parser


def resolve_configs(args: argparse.Namespace) -> tuple[ScenarioConfig, SimConfig, ChannelParams]:
    """Combine the scenario file with flag overrides into validated configs."""
    if args.scenario is not None:
        scenario, channel = load_scenario_file(args.scenario)
    else:
        scenario, channel = ScenarioConfig(), ChannelParams()

    scenario_updates: dict[str, Any] = {}
    if args.speed is not None:
        scenario_updates["ego_target_speed"] = args.speed
    if args.duration is not None:
        scenario_updates["duration"] = args.duration
    sim_updates: dict[str, Any] = {}
    if args.compression is not None:
        sim_updates["compression_rate"] = args.compression
    if args.retransmissions is not None:
        sim_updates["retransmissions"] = args.retransmissions

    try:
        scenario = ScenarioConfig.model_validate({**scenario.model_dump(), **scenario_updates})
        sim = SimConfig.model_validate(sim_updates)
    except ValidationError as e:
        raise map_validation_error(e, source="command line") from e
    return scenario, sim, channel


def _run_stem(metrics: RunMetrics) -> str:
    return f"run_{metrics.policy}_seed{metrics.seed}_n{metrics.spawn_spacing_n:g}"


def _write_runs(out: Path, metrics: list[RunMetrics]) -> None:
    for m in metrics:
        write_atomic(out / f"{_run_stem(m)}.json", m.model_dump_json(indent=2) + "\n")


def _write_config_echo(out: Path, command: str, scenario: ScenarioConfig, sim: SimConfig,
                       channel: ChannelParams, **extra: Any) -> None:
    echo = {
        "command": command,
        "scenario": scenario.model_dump(mode="json"),
        "sim": sim.model_dump(mode="json"),
        "channel": channel.model_dump(mode="json"),
        **extra,
    }
    write_atomic(out / "config.json", json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _report_extension(fmt: str) -> str:
    return {"table": "txt", "csv": "csv", "json": "json"}[fmt]


def _cmd_run(args, scenario: ScenarioConfig, sim: SimConfig, channel: ChannelParams) -> int:
    policies = parse_policies(args.policy) if args.policy else [PolicyKind.MOHED]
    if len(policies) != 1:
        raise ConfigurationError("run takes exactly one policy", flag="--policy")
    seeds = parse_seeds(args.seed) if args.seed else [scenario.seed]
    if len(seeds) != 1:
        raise ConfigurationError("run takes exactly one seed", flag="--seed")
    updates: dict[str, Any] = {"seed": seeds[0]}
    if args.density:
        densities = parse_floats(args.density, "--density")
        if len(densities) != 1:
            raise ConfigurationError("run takes exactly one density", flag="--density")
        updates["spawn_spacing_n"] = densities[0]
    try:
        scenario = ScenarioConfig.model_validate({**scenario.model_dump(), **updates})
    except ValidationError as e:
        raise map_validation_error(e, source="command line") from e
    sim = with_policy(sim, policies[0])

    trace: list[DecisionEvent] | None = [] if args.trace else None
    metrics = run(scenario, sim, channel, trace=trace)

    _write_config_echo(args.out, "run", scenario, sim, channel)
    _write_runs(args.out, [metrics])
    if trace is not None:
        write_jsonl_atomic(args.out / f"trace_{_run_stem(metrics)[4:]}.jsonl", (e.to_dict() for e in trace))

    if args.format == "json":
        print(metrics.model_dump_json(indent=2))
    else:
        row = ReportRow.from_prr(str(metrics.policy), metrics.prr, float(metrics.relay_switches))
        print(render_report([row], args.format), end="")
    return EXIT_OK


def _sweep_inputs(args, scenario: ScenarioConfig) -> tuple[list[float], list[int], list[PolicyKind]]:
    densities = parse_floats(args.density, "--density") if args.density else [scenario.spawn_spacing_n]
    seeds = parse_seeds(args.seed) if args.seed else [scenario.seed]
    policies = parse_policies(args.policy) if args.policy else list(ALL_POLICIES)
    if any(d <= 0 for d in densities):
        raise ConfigurationError("Densities must be positive", flag="--density")
    if args.jobs < 1:
        raise ConfigurationError("--jobs must be >= 1", flag="--jobs")
    return densities, seeds, policies


def _cmd_sweep(args, scenario: ScenarioConfig, sim: SimConfig, channel: ChannelParams) -> int:
    densities, seeds, policies = _sweep_inputs(args, scenario)

    async def sweep():
        return await sweep_density(densities, seeds, scenario, sim, channel, policies, args.jobs)

    rows, metrics = asyncio.run(sweep())
    _write_config_echo(args.out, "sweep", scenario, sim, channel, densities=densities, seeds=seeds,
                       policies=[str(p) for p in policies])
    _write_runs(args.out, metrics)
    file_format = "json" if args.format == "json" else "csv"
    write_atomic(args.out / f"sweep.{file_format}", render_sweep(rows, file_format))
    print(render_sweep(rows, args.format), end="")
    return EXIT_OK


def _cmd_compare(args, scenario: ScenarioConfig, sim: SimConfig, channel: ChannelParams) -> int:
    densities, seeds, policies = _sweep_inputs(args, scenario)
    if len(densities) != 1:
        raise ConfigurationError("compare takes exactly one density", flag="--density")
    scenario = scenario.model_copy(update={"spawn_spacing_n": densities[0]})

    async def compare():
        return await compare_policies(seeds, scenario, sim, channel, policies, args.jobs)

    rows, metrics = asyncio.run(compare())
    _write_config_echo(args.out, "compare", scenario, sim, channel, seeds=seeds, policies=[str(p) for p in policies])
    _write_runs(args.out, metrics)
    report = render_report(rows, args.format)
    write_atomic(args.out / f"compare.{_report_extension(args.format)}", report)
    print(report, end="")
    return EXIT_OK


def _cmd_cdf(args, scenario: ScenarioConfig, sim: SimConfig, channel: ChannelParams) -> int:
    densities, seeds, policies = _sweep_inputs(args, scenario)

    async def sweep():
        return await sweep_density(densities, seeds, scenario, sim, channel, policies, args.jobs)

    _, metrics = asyncio.run(sweep())
    _write_config_echo(args.out, "cdf", scenario, sim, channel, densities=densities, seeds=seeds,
                       policies=[str(p) for p in policies])
    file_format = "json" if args.format == "json" else "csv"
    for kind in policies:
        points = collect_cdf(m for m in metrics if m.policy == kind)
        path = write_atomic(args.out / f"cdf_{kind}.{file_format}", render_cdf(points, file_format))
        print(path)
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "cdf": _cmd_cdf,
}


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        scenario, sim, channel = resolve_configs(args)
        return COMMANDS[args.command](args, scenario, sim, channel)
    except SimulatorError as e:
        print(str(e), file=sys.stderr)
        if args is not None and args.format == "json":
            print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_CONFIG if isinstance(e, ConfigurationError) else EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
