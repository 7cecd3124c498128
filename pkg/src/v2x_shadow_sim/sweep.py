"""
Parallel Sweeps

Full-factorial runs over densities x seeds x policies, dispatched to a
process pool from asyncio and merged into sweep cells or comparison rows
once every run has finished.
"""

import asyncio
import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import NamedTuple

import pandas as pd

from .config import ChannelParams, PolicyKind, ScenarioConfig, SimConfig
from .engine import RunMetrics, run
from .reports import ReportRow, SweepRow

logger = logging.getLogger(__name__)

ALL_POLICIES = (PolicyKind.MOHED, PolicyKind.SIGNAL_STRENGTH, PolicyKind.RANDOM, PolicyKind.DIRECT)


class RunSpec(NamedTuple):
    scenario: ScenarioConfig
    sim: SimConfig
    channel: ChannelParams | None = None


def with_policy(sim: SimConfig, kind: PolicyKind) -> SimConfig:
    return sim.model_copy(update={"policy": sim.policy.model_copy(update={"kind": kind})})


def expand_runs(
    densities: Sequence[float],
    seeds: Sequence[int],
    policies: Sequence[PolicyKind],
    scenario: ScenarioConfig,
    sim: SimConfig,
    channel: ChannelParams | None = None,
) -> list[RunSpec]:
    """Factorial run list, ordered by density, policy, seed."""
    if not densities or not seeds or not policies:
        raise ValueError("densities, seeds and policies must be non-empty")
    specs = []
    for density in densities:
        for kind in policies:
            for seed in seeds:
                specs.append(
                    RunSpec(
                        scenario.model_copy(update={"spawn_spacing_n": float(density), "seed": int(seed)}),
                        with_policy(sim, kind),
                        channel,
                    )
                )
    return specs


class SweepRunner:
    """
    Dispatch independent runs with bounded parallelism.

    With jobs == 1 the runs execute sequentially in the calling process.
    """

    def __init__(self, jobs: int = 1):
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs

    async def _run_in_executor(self, executor: ProcessPoolExecutor, semaphore: asyncio.Semaphore, spec: RunSpec):
        async with semaphore:
            loop = asyncio.get_running_loop()
            return await loop.run_in_executor(executor, partial(run, spec.scenario, spec.sim, spec.channel))

    async def run_all(self, specs: Sequence[RunSpec]) -> list[RunMetrics]:
        """Run every spec; results keep the order of specs."""
        logger.info(f"Dispatching {len(specs)} run(s) with jobs={self.jobs}")
        if self.jobs == 1:
            return [run(spec.scenario, spec.sim, spec.channel) for spec in specs]

        semaphore = asyncio.Semaphore(self.jobs)
        with ProcessPoolExecutor(max_workers=self.jobs) as executor:
            results = await asyncio.gather(*(self._run_in_executor(executor, semaphore, spec) for spec in specs))
        logger.info(f"Merged {len(results)} run(s)")
        return list(results)


def _runs_frame(metrics: Iterable[RunMetrics]) -> pd.DataFrame:
    return pd.DataFrame.from_records(
        [
            {
                "spawn_spacing_n": m.spawn_spacing_n,
                "policy": str(m.policy),
                "seed": m.seed,
                "prr": m.prr,
                "generated": m.packets_generated,
                "delivered": m.packets_delivered,
                "switches": m.relay_switches,
            }
            for m in metrics
        ]
    )


def _aggregate(metrics: Iterable[RunMetrics], keys: list[str]) -> pd.DataFrame:
    grouped = _runs_frame(metrics).groupby(keys, as_index=False, sort=True)
    table = grouped.agg(
        runs=("seed", "size"),
        mean_prr=("prr", "mean"),
        std_prr=("prr", lambda x: float(x.std(ddof=0))),
        generated=("generated", "sum"),
        delivered=("delivered", "sum"),
        mean_switches=("switches", "mean"),
    )
    table["pooled_prr"] = (table["delivered"] / table["generated"]).where(table["generated"] > 0, 0.0)
    return table


def summarize_sweep(metrics: Iterable[RunMetrics]) -> list[SweepRow]:
    """Per (density, policy) means, standard deviations and pooled PRR."""
    table = _aggregate(metrics, ["spawn_spacing_n", "policy"])
    return [
        SweepRow(
            spawn_spacing_n=float(row.spawn_spacing_n),
            policy=row.policy,
            runs=int(row.runs),
            mean_prr=float(row.mean_prr),
            std_prr=float(row.std_prr),
            pooled_prr=float(row.pooled_prr),
            mean_switches=float(row.mean_switches),
        )
        for row in table.itertuples(index=False)
    ]


def summarize_policies(metrics: Iterable[RunMetrics]) -> list[ReportRow]:
    """One comparison row per policy."""
    table = _aggregate(metrics, ["policy"])
    return [
        ReportRow.from_prr(
            row.policy,
            float(row.mean_prr),
            float(row.mean_switches),
            std_prr=float(row.std_prr),
            pooled_prr=float(row.pooled_prr),
            runs=int(row.runs),
        )
        for row in table.itertuples(index=False)
    ]


async def sweep_density(
    densities: Sequence[float],
    seeds: Sequence[int],
    scenario: ScenarioConfig,
    sim: SimConfig,
    channel: ChannelParams | None = None,
    policies: Sequence[PolicyKind] = ALL_POLICIES,
    jobs: int = 1,
) -> tuple[list[SweepRow], list[RunMetrics]]:
    """
    Density sweep over densities x seeds x policies.

    Returns:
        Tuple of (one SweepRow per density and policy, every RunMetrics)
    """
    specs = expand_runs(densities, seeds, policies, scenario, sim, channel)
    metrics = await SweepRunner(jobs).run_all(specs)
    return summarize_sweep(metrics), metrics


async def compare_policies(
    seeds: Sequence[int],
    scenario: ScenarioConfig,
    sim: SimConfig,
    channel: ChannelParams | None = None,
    policies: Sequence[PolicyKind] = ALL_POLICIES,
    jobs: int = 1,
) -> tuple[list[ReportRow], list[RunMetrics]]:
    """All policies on shared seeds at the scenario's density."""
    specs = expand_runs([scenario.spawn_spacing_n], seeds, policies, scenario, sim, channel)
    metrics = await SweepRunner(jobs).run_all(specs)
    return summarize_policies(metrics), metrics


def run_sweep(*args, **kwargs) -> tuple[list[SweepRow], list[RunMetrics]]:
    """Synchronous wrapper of sweep_density."""
    return asyncio.run(sweep_density(*args, **kwargs))


def run_comparison(*args, **kwargs) -> tuple[list[ReportRow], list[RunMetrics]]:
    """Synchronous wrapper of compare_policies."""
    return asyncio.run(compare_policies(*args, **kwargs))
