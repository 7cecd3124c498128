"""
Simulation Engine

Runs one deterministic simulation: mobility steps, APMM fusion triggering,
relay (re-)selection, per-hop packet draws and metric accumulation.
"""

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .apm import (
    Apm,
    assess_provider,
    build_apm,
    build_mobility_height_layer,
    combine_layers,
    find_blind_zones,
    should_trigger_fusion,
    synth_perception,
)
from .config import ChannelParams, PolicyKind, ScenarioConfig, SimConfig
from .exceptions import ConfigurationError
from .propagation import link_budget, packet_success_probability
from .relay import DecisionEvent, RelayDecision, decide, maybe_reselect
from .scenario import VehicleState, WorldState, generate_intersection, step_mobility

logger = logging.getLogger(__name__)

# Random streams derived from the scenario seed
PACKET_STREAM = 11
POLICY_STREAM = 12


class RunMetrics(BaseModel):
    """Outcome of one simulation run."""

    model_config = ConfigDict(frozen=True)

    policy: PolicyKind
    seed: int
    spawn_spacing_n: float
    packets_generated: int = Field(ge=0)
    packets_delivered: int = Field(ge=0)
    prr: float = Field(ge=0.0, le=1.0)
    per: float = Field(ge=0.0, le=1.0)
    window_prr_samples: list[float] = Field(default_factory=list)
    window_starts: list[float] = Field(default_factory=list)
    relay_switches: int = Field(0, ge=0)
    frames_emitted: int = Field(0, ge=0)
    packets_per_frame: int = Field(0, ge=0)
    frame_delivery_ratio: float = Field(0.0, ge=0.0, le=1.0)
    fusion_triggered_at: float | None = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunMetrics":
        if self.packets_delivered > self.packets_generated:
            raise ValueError("packets_delivered exceeds packets_generated")
        if abs(self.prr + self.per - 1.0) > 1e-12:
            raise ValueError("prr + per must equal 1")
        if len(self.window_prr_samples) != len(self.window_starts):
            raise ValueError("window samples and starts differ in length")
        if any(not 0.0 <= s <= 1.0 for s in self.window_prr_samples):
            raise ValueError("window PRR samples must lie in [0, 1]")
        return self


def deliver_packets(
    hop_probabilities: Sequence[float],
    n_packets: int,
    seed: int,
    frame_index: int,
    retransmissions: int = 0,
) -> int:
    """
    Number of packets delivered over a path of independent hops.

    Each hop gets 1 + retransmissions attempts per packet; a packet is
    delivered iff every hop succeeds. Draws are keyed by (seed, frame, hop,
    attempt), so extra retransmissions only add attempts to the same draws.
    """
    if n_packets <= 0:
        return 0
    delivered = np.ones(n_packets, dtype=bool)
    for hop, probability in enumerate(hop_probabilities):
        hop_ok = np.zeros(n_packets, dtype=bool)
        for attempt in range(retransmissions + 1):
            rng = np.random.default_rng([seed, PACKET_STREAM, frame_index, hop, attempt])
            hop_ok |= rng.random(n_packets) < probability
        delivered &= hop_ok
    return int(delivered.sum())


def _grid(vehicle: VehicleState, sim: SimConfig, clock: float) -> Apm:
    cells = np.zeros((sim.apm_m, sim.apm_n), dtype=np.uint32)
    return Apm(vehicle.position, vehicle.heading, sim.apm_k, cells, vehicle.id, clock)


def _perceive(world: WorldState, vehicle: VehicleState, sim: SimConfig, clock: float) -> Apm:
    samples = synth_perception(world, vehicle, sim.lidar_rays, sim.lidar_range, sim.lidar_step)
    return build_apm(samples, vehicle.position, vehicle.heading, sim.apm_k, sim.apm_m, sim.apm_n, vehicle.id, clock)


def fusion_benefit_triggered(world: WorldState, sim: SimConfig, clock: float) -> bool:
    """APMM check: do the sharing node's perceptions cover enough of the ego's blind zones?"""
    ego, sharing = world.ego, world.sharing_node
    ego_apm = _perceive(world, ego, sim, clock)
    zones = find_blind_zones(ego_apm, sim.t1, sim.window_sizes)
    if not zones:
        return False
    provider = _perceive(world, sharing, sim, clock)
    report = assess_provider(sharing.id, zones, provider, sim.effective_t2)
    return bool(should_trigger_fusion([report], sim.effective_t2))


def mohed_layer(world: WorldState, sim: SimConfig, clock: float):
    """Ego mobility-height layer combined with the one shared by the sharing node."""
    ego, sharing = world.ego, world.sharing_node
    own = build_mobility_height_layer(world, _grid(ego, sim, clock), exclude_ids={ego.id})
    shared = build_mobility_height_layer(world, _grid(sharing, sim, clock), exclude_ids={sharing.id})
    return combine_layers(own, shared)


def _hop_probabilities(
    world: WorldState,
    decision: RelayDecision,
    sim: SimConfig,
    params: ChannelParams,
) -> list[float]:
    ego, sharing = world.ego, world.sharing_node
    if decision.relay_id is None:
        hops = [(ego, sharing)]
    else:
        relay = world.vehicle(decision.relay_id)
        hops = [(ego, relay), (relay, sharing)]

    if sim.forced_psr is not None:
        return [sim.forced_psr] * len(hops)
    return [
        packet_success_probability(link_budget(a.antenna, b.antenna, world, params, {a.id, b.id}).rx_power, params)
        for a, b in hops
    ]


def _relay_present(world: WorldState, decision: RelayDecision) -> bool:
    return decision.relay_id is None or any(v.id == decision.relay_id for v in world.vehicles)


def run(
    scenario_config: ScenarioConfig,
    sim_config: SimConfig,
    channel_params: ChannelParams | None = None,
    trace: list[DecisionEvent] | None = None,
) -> RunMetrics:
    """
    Run one simulation.

    Args:
        scenario_config: World layout, density, seed and duration
        sim_config: Loop timing, traffic, APMM and policy settings
        channel_params: Radio parameters (defaults when omitted)
        trace: Optional list receiving one DecisionEvent per policy evaluation

    Returns:
        RunMetrics of the run

    Raises:
        ConfigurationError: If the configurations are inconsistent
    """
    params = channel_params or ChannelParams()
    dt = sim_config.dt
    total_steps = round(scenario_config.duration / dt)
    if total_steps < sim_config.steps_per_period:
        raise ConfigurationError("duration is shorter than one sensor period", duration=scenario_config.duration)

    policy = sim_config.policy
    seed = scenario_config.seed
    policy_rng = np.random.default_rng([seed, POLICY_STREAM])
    packets_per_frame = sim_config.packets_per_frame

    world = generate_intersection(scenario_config)
    decision: RelayDecision | None = None
    triggered_at: float | None = None
    switches = 0
    frames = 0
    frames_ok = 0
    generated = 0
    delivered = 0
    windows: dict[int, list[int]] = {}

    for step in range(1, total_steps + 1):
        world = step_mobility(world, dt)
        if step % sim_config.steps_per_period:
            continue
        clock = step * dt
        frame_index = step // sim_config.steps_per_period

        if triggered_at is None:
            if not fusion_benefit_triggered(world, sim_config, clock):
                continue
            triggered_at = clock
            logger.info(f"Fusion triggered at t={clock:.2f}s (seed={seed}, policy={policy.kind})")

        def select(current: RelayDecision | None = decision, snapshot: WorldState = world, now: float = clock):
            layer = mohed_layer(snapshot, sim_config, now) if policy.kind == PolicyKind.MOHED else None
            return decide(policy, snapshot, layer, params, policy_rng, current, now)

        previous = decision
        if decision is not None and not _relay_present(world, decision):
            decision = select()
            switched = decision.relay_id != previous.relay_id
        else:
            decision, switched = maybe_reselect(clock, decision, policy, select)
        if switched:
            switches += 1
        if trace is not None and decision is not previous:
            trace.append(DecisionEvent.from_decision(decision, switched))

        probabilities = _hop_probabilities(world, decision, sim_config, params)
        ok = deliver_packets(probabilities, packets_per_frame, seed, frame_index, sim_config.retransmissions)

        frames += 1
        generated += packets_per_frame
        delivered += ok
        if ok >= sim_config.frame_success_threshold * packets_per_frame:
            frames_ok += 1
        window = windows.setdefault(math.floor(clock / sim_config.window_length + 1e-9), [0, 0])
        window[0] += packets_per_frame
        window[1] += ok

    prr = delivered / generated if generated else 0.0
    if not generated:
        logger.warning(f"Fusion never triggered within {scenario_config.duration}s (seed={seed})")

    ordered = sorted(windows.items())
    metrics = RunMetrics(
        policy=policy.kind,
        seed=seed,
        spawn_spacing_n=scenario_config.spawn_spacing_n,
        packets_generated=generated,
        packets_delivered=delivered,
        prr=prr,
        per=1.0 - prr,
        window_prr_samples=[ok / total for _, (total, ok) in ordered],
        window_starts=[index * sim_config.window_length for index, _ in ordered],
        relay_switches=switches,
        frames_emitted=frames,
        packets_per_frame=packets_per_frame,
        frame_delivery_ratio=frames_ok / frames if frames else 0.0,
        fusion_triggered_at=triggered_at,
    )
    logger.info(
        f"Run finished: policy={policy.kind} seed={seed} N={scenario_config.spawn_spacing_n} "
        f"PRR={metrics.prr:.4f} switches={switches}"
    )
    return metrics


def collect_cdf(metrics: Iterable[RunMetrics]) -> list[tuple[float, float]]:
    """Empirical CDF of the pooled per-window PRR samples."""
    samples = sorted(s for m in metrics for s in m.window_prr_samples)
    count = len(samples)
    return [(sample, (index + 1) / count) for index, sample in enumerate(samples)]


def pooled_prr(metrics: Iterable[RunMetrics]) -> float:
    """Delivered over generated packets across runs."""
    metrics = list(metrics)
    generated = sum(m.packets_generated for m in metrics)
    return sum(m.packets_delivered for m in metrics) / generated if generated else 0.0
