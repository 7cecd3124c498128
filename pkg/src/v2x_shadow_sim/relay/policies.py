"""Relay path selectors: MoHeD, signal strength, random and direct link."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..apm.layer import MobilityHeightLayer
from ..config import ChannelParams, PolicyKind, RelayPolicy
from ..geometry import Vector2
from ..propagation import link_budget
from ..scenario import VehicleState, WorldState
from .risk import predicted_link_risk

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class CandidateAssessment:
    """Evaluation of one path; candidate_id None is the direct link."""

    candidate_id: int | None
    hop_risks: tuple[float, ...] = ()
    hop_rx_power: tuple[float, ...] = ()
    # longer hop (m) at the end of the re-selection window; relays only
    span: float = 0.0

    @property
    def total_risk(self) -> float:
        return sum(self.hop_risks)

    @property
    def score(self) -> float:
        """Summed hop received power in dBm."""
        return sum(self.hop_rx_power)

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "hop_risks": list(self.hop_risks),
            "total_risk": self.total_risk,
            "hop_rx_power": list(self.hop_rx_power),
            "span": self.span,
        }


@dataclass(frozen=True, slots=True)
class RelayDecision:
    relay_id: int | None
    decided_at: float
    assessments: tuple[CandidateAssessment, ...] = ()
    policy: PolicyKind = PolicyKind.DIRECT

    @property
    def is_direct(self) -> bool:
        return self.relay_id is None

    @property
    def path(self) -> str:
        return "direct" if self.relay_id is None else f"via:{self.relay_id}"


def _same(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def candidate_set(
    world: WorldState,
    ego: VehicleState,
    sharing_node: VehicleState,
    radius: float,
) -> list[VehicleState]:
    """V2X-enabled vehicles within radius of the ego, excluding both endpoints, ordered by id."""
    found = [
        v for v in world.vehicles
        if v.v2x_enabled
        and v.id not in (ego.id, sharing_node.id)
        and v.position.distance_to(ego.position) <= radius
    ]
    found.sort(key=lambda v: v.id)
    return found


def _span(ego: VehicleState, relay: VehicleState, sharing_node: VehicleState, seconds: float) -> float:
    """Longer hop of the relayed path after `seconds` of constant-velocity motion."""
    e, r, s = (v.advanced(seconds).position for v in (ego, relay, sharing_node))
    return max(e.distance_to(r), r.distance_to(s))


def select_mohed(
    world: WorldState,
    layer: MobilityHeightLayer,
    ego: VehicleState,
    sharing_node: VehicleState,
    candidates: Sequence[VehicleState],
    current: RelayDecision | None,
    policy: RelayPolicy,
    params: ChannelParams | None = None,
    clock: float | None = None,
) -> RelayDecision:
    """
    Choose the path with the least NLOS risk predicted over the re-selection window.

    Ties keep the current path when it is among the minima, otherwise the
    direct link, then the relay whose longer hop is shortest at the end of
    the window, then the lowest relay id.
    """
    params = params or ChannelParams()
    eps = policy.epsilon
    clock = world.clock if clock is None else clock
    horizon = policy.reselect_window
    buildings = world.buildings if policy.include_buildings else ()

    def hop(a: VehicleState, b: VehicleState, v_ref: Vector2) -> float:
        return predicted_link_risk(
            layer, world, a, b, v_ref, params, eps, horizon, policy.prediction_samples, buildings
        )

    assessments = [CandidateAssessment(None, (hop(ego, sharing_node, ego.velocity),))]
    for candidate in candidates:
        second_ref = ego.velocity if policy.second_hop_reference == "ego" else candidate.velocity
        hops = (hop(ego, candidate, ego.velocity), hop(candidate, sharing_node, second_ref))
        span = _span(ego, candidate, sharing_node, horizon)
        assessments.append(CandidateAssessment(candidate.id, hops, span=span))

    best = min(a.total_risk for a in assessments)
    minimal = [a for a in assessments if _same(a.total_risk, best)]
    ids = [a.candidate_id for a in minimal]
    if current is not None and current.relay_id in ids:
        chosen = current.relay_id
    elif None in ids:
        chosen = None
    else:
        chosen = min(minimal, key=lambda a: (round(a.span, 6), a.candidate_id)).candidate_id

    logger.debug(f"MoHeD picked {chosen} at {clock:.2f} s (risk {best:.3f}, {len(minimal)} tied)")
    return RelayDecision(chosen, clock, tuple(assessments), PolicyKind.MOHED)


def _rx(world: WorldState, a: VehicleState, b: VehicleState, params: ChannelParams) -> float:
    return link_budget(a.antenna, b.antenna, world, params, {a.id, b.id}).rx_power


def select_signal_strength(
    world: WorldState,
    ego: VehicleState,
    sharing_node: VehicleState,
    candidates: Sequence[VehicleState],
    params: ChannelParams,
    clock: float | None = None,
    rng: np.random.Generator | None = None,
    noise_db: float = 0.0,
) -> RelayDecision:
    """
    Choose the relay with the strongest summed hop power (dBm).

    The direct link wins only if its received power exceeds the weaker hop
    of the best candidate. Given a generator and a positive noise_db, each
    hop is a single discovery measurement: the link budget plus a normal
    error of that spread, drawn for the direct link first and then for
    each candidate's two hops in id order.
    """
    clock = world.clock if clock is None else clock
    ideal = [_rx(world, ego, sharing_node, params)]
    for candidate in candidates:
        ideal.extend((_rx(world, ego, candidate, params), _rx(world, candidate, sharing_node, params)))
    measured = np.asarray(ideal)
    if rng is not None and noise_db > 0:
        measured = measured + rng.normal(0.0, noise_db, size=len(ideal))

    direct = CandidateAssessment(None, hop_rx_power=(float(measured[0]),))
    assessments = [direct]
    for index, candidate in enumerate(candidates):
        hops = (float(measured[1 + 2 * index]), float(measured[2 + 2 * index]))
        assessments.append(CandidateAssessment(candidate.id, hop_rx_power=hops))

    relays = assessments[1:]
    if not relays:
        return RelayDecision(None, clock, tuple(assessments), PolicyKind.SIGNAL_STRENGTH)

    best = max(relays, key=lambda a: (a.score, -a.candidate_id))
    chosen = None if direct.score > min(best.hop_rx_power) else best.candidate_id
    return RelayDecision(chosen, clock, tuple(assessments), PolicyKind.SIGNAL_STRENGTH)


def reachable_candidates(
    world: WorldState,
    ego: VehicleState,
    sharing_node: VehicleState,
    candidates: Sequence[VehicleState],
    params: ChannelParams,
) -> list[VehicleState]:
    """Candidates whose estimated power reaches the receiver sensitivity on at least one hop."""
    sensitivity = params.receiver_sensitivity
    return [
        c for c in candidates
        if _rx(world, ego, c, params) >= sensitivity or _rx(world, c, sharing_node, params) >= sensitivity
    ]


def select_random(
    candidates: Sequence[VehicleState],
    rng: np.random.Generator,
    clock: float = 0.0,
) -> RelayDecision:
    """Uniform choice among the (reachable) candidates; direct when there are none."""
    if not candidates:
        return RelayDecision(None, clock, (), PolicyKind.RANDOM)
    ordered = sorted(candidates, key=lambda v: v.id)
    chosen = ordered[int(rng.integers(len(ordered)))]
    assessments = tuple(CandidateAssessment(c.id) for c in ordered)
    return RelayDecision(chosen.id, clock, assessments, PolicyKind.RANDOM)


def select_direct(clock: float = 0.0) -> RelayDecision:
    return RelayDecision(None, clock, (CandidateAssessment(None),), PolicyKind.DIRECT)


def decide(
    policy: RelayPolicy,
    world: WorldState,
    layer: MobilityHeightLayer | None,
    params: ChannelParams,
    rng: np.random.Generator,
    current: RelayDecision | None,
    clock: float,
) -> RelayDecision:
    """Run the configured policy once on the current world snapshot."""
    if policy.kind == PolicyKind.DIRECT:
        return select_direct(clock)

    ego, sharing = world.ego, world.sharing_node
    candidates = candidate_set(world, ego, sharing, policy.candidate_radius)

    if policy.kind == PolicyKind.MOHED:
        if layer is None:
            raise ValueError("MoHeD selection needs a mobility-height layer")
        return select_mohed(world, layer, ego, sharing, candidates, current, policy, params, clock)
    if policy.kind == PolicyKind.SIGNAL_STRENGTH:
        return select_signal_strength(world, ego, sharing, candidates, params, clock, rng, policy.rsrp_noise_db)
    return select_random(reachable_candidates(world, ego, sharing, candidates, params), rng, clock)
