"""
NLOS risk of a link from the mobility-height layer.

Each obstacle on a link contributes its knife-edge loss weighted by how
long the obstruction is likely to persist: an obstacle moving with the
link endpoints (similar velocity) keeps blocking, so its weight is high.
Buildings from the map add their wall loss as stationary obstacles, and
the predicted risk averages the link over the re-selection window.
"""

import logging
from collections.abc import Iterable, Sequence
from typing import NamedTuple

import numpy as np

from ..apm.layer import MobilityHeightLayer, ObstacleRecord
from ..config import ChannelParams
from ..exceptions import DomainError
from ..geometry import ORIGIN, Vector2, line_height_at, obstacle_split, segment_footprint_crossings
from ..propagation import building_penetration_loss, obstacle_diffraction
from ..scenario import Building, VehicleState, WorldState

logger = logging.getLogger(__name__)


def mobility_similarity(v_endpoint: Vector2, v_obstacle: Vector2, v_ego: Vector2, epsilon: float) -> float:
    """
    Mobility similarity of an obstacle to a link endpoint and the ego.

    S = 1 / max(|v_endpoint - v_obstacle|, eps) + 1 / max(|v_ego - v_obstacle|, eps)
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    first = max((v_endpoint - v_obstacle).norm(), epsilon)
    second = max((v_ego - v_obstacle).norm(), epsilon)
    return 1.0 / first + 1.0 / second


def _obstructs(record: ObstacleRecord, a: VehicleState, b: VehicleState) -> bool:
    split = obstacle_split(a.antenna, b.antenna, record.footprint)
    if split is None:
        return False
    return record.height > line_height_at(a.antenna, b.antenna, split.peak_point)


def _default_min_height(a: VehicleState, b: VehicleState, min_height: float | None) -> float:
    return min(a.antenna_height, b.antenna_height) if min_height is None else min_height


def _filter(
    records: Iterable[ObstacleRecord],
    a: VehicleState,
    b: VehicleState,
    min_height: float,
    seconds: float = 0.0,
) -> list[ObstacleRecord]:
    """Records blocking a->b, each moved `seconds` along its velocity first."""
    x_lo, x_hi = sorted((a.position.x, b.position.x))
    y_lo, y_hi = sorted((a.position.y, b.position.y))
    found = []
    for record in records:
        if record.id in (a.id, b.id) or not record.height > min_height:
            continue
        shift = record.velocity.scale(seconds)
        left, bottom, right, top = record.footprint.bounds()
        if right + shift.x < x_lo or left + shift.x > x_hi or top + shift.y < y_lo or bottom + shift.y > y_hi:
            continue
        moved = record.advanced(seconds) if seconds else record
        if _obstructs(moved, a, b):
            found.append(moved)
    found.sort(key=lambda r: r.id)
    return found


def _members(layer: MobilityHeightLayer, rows: range, cols: range, min_height: float) -> list[ObstacleRecord]:
    ids: set[int] = set()
    for i in rows:
        for j in cols:
            if layer.max_height[i, j] > min_height:
                ids.update(layer.members.get((i, j), ()))
    return [layer.records[vehicle_id] for vehicle_id in ids]


def obstacles_between(
    layer: MobilityHeightLayer,
    a: VehicleState,
    b: VehicleState,
    min_height: float | None = None,
    world: WorldState | None = None,
) -> list[ObstacleRecord]:
    """
    Valid obstacles on the a->b link, searched in the sub-matrix spanned by the endpoint cells.

    Cells are prefiltered by max_height > min_height (default: the lower
    antenna height); each returned obstacle crosses the 2D segment and rises
    above the direct line at its peak. When an endpoint lies outside the
    layer, the world vehicles (or, without a world, every layer record) are
    scanned instead.

    Returns:
        Obstacle records ordered by id
    """
    if a.id == b.id:
        raise DomainError(f"Link endpoints must differ, got vehicle {a.id} twice")
    threshold = _default_min_height(a, b, min_height)

    cell_a = layer.apm.cell_of(a.position)
    cell_b = layer.apm.cell_of(b.position)
    if cell_a is None or cell_b is None:
        if world is not None:
            candidates = [ObstacleRecord.from_vehicle(v) for v in world.vehicles]
        else:
            candidates = list(layer.records.values())
        return _filter(candidates, a, b, threshold)

    rows = range(min(cell_a[0], cell_b[0]), max(cell_a[0], cell_b[0]) + 1)
    cols = range(min(cell_a[1], cell_b[1]), max(cell_a[1], cell_b[1]) + 1)
    return _filter(_members(layer, rows, cols, threshold), a, b, threshold)


def obstacles_between_bruteforce(
    layer: MobilityHeightLayer,
    a: VehicleState,
    b: VehicleState,
    min_height: float | None = None,
) -> list[ObstacleRecord]:
    """Reference search over every cell of the layer."""
    threshold = _default_min_height(a, b, min_height)
    m, n = layer.shape
    return _filter(_members(layer, range(m), range(n), threshold), a, b, threshold)


class RiskTerm(NamedTuple):
    obstacle_id: int
    loss: float
    similarity: float

    @property
    def risk(self) -> float:
        return self.loss * self.similarity


def risk_terms(
    a: VehicleState,
    b: VehicleState,
    obstacles: Iterable[ObstacleRecord],
    v_ego: Vector2,
    params: ChannelParams,
    epsilon: float,
) -> list[RiskTerm]:
    """Per-obstacle knife-edge loss and mobility similarity of the a->b link (endpoint b)."""
    terms = []
    for record in obstacles:
        diffraction = obstacle_diffraction(a.antenna, b.antenna, record.footprint, params.wavelength)
        loss = diffraction.loss if diffraction is not None else 0.0
        terms.append(RiskTerm(record.id, loss, mobility_similarity(b.velocity, record.velocity, v_ego, epsilon)))
    return terms


def link_nlos_risk(
    a: VehicleState,
    b: VehicleState,
    obstacles: Iterable[ObstacleRecord],
    v_ego: Vector2,
    params: ChannelParams,
    epsilon: float,
) -> float:
    """NLOS risk of the a->b link: sum over obstacles of loss x similarity."""
    return sum(term.risk for term in risk_terms(a, b, obstacles, v_ego, params, epsilon))


def static_nlos_risk(
    a: VehicleState,
    b: VehicleState,
    buildings: Iterable[Building],
    v_ego: Vector2,
    epsilon: float,
) -> float:
    """Wall loss of the buildings crossed by a->b, weighted as a stationary obstacle."""
    walls = sum(
        segment_footprint_crossings(a.position, b.position, building.footprint) * building.walls_per_crossing
        for building in buildings
    )
    if walls == 0:
        return 0.0
    return building_penetration_loss(walls) * mobility_similarity(b.velocity, ORIGIN, v_ego, epsilon)


def _predicted_obstacles(
    layer: MobilityHeightLayer,
    world: WorldState | None,
    a: VehicleState,
    b: VehicleState,
    seconds: float,
) -> list[ObstacleRecord]:
    inside = layer.apm.cell_of(a.position) is not None and layer.apm.cell_of(b.position) is not None
    if inside or world is None:
        records: Iterable[ObstacleRecord] = layer.records.values()
    else:
        records = (ObstacleRecord.from_vehicle(v) for v in world.vehicles)
    return _filter(records, a, b, _default_min_height(a, b, None), seconds)


def predicted_link_risk(
    layer: MobilityHeightLayer,
    world: WorldState | None,
    a: VehicleState,
    b: VehicleState,
    v_ego: Vector2,
    params: ChannelParams,
    epsilon: float,
    horizon: float = 0.0,
    samples: int = 1,
    buildings: Sequence[Building] = (),
) -> float:
    """
    Mean NLOS risk of the a->b link over the next `horizon` seconds.

    Endpoints and obstacles move at constant velocity; the link is scored at
    `samples` evenly spaced offsets from now to the horizon. The first sample
    is the present snapshot searched through the sub-matrix. With one sample
    this is link_nlos_risk plus the building term.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if horizon < 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")

    offsets = np.linspace(0.0, horizon, samples) if samples > 1 else np.zeros(1)
    total = 0.0
    for offset in offsets:
        seconds = float(offset)
        if seconds == 0.0:
            at_a, at_b = a, b
            obstacles = obstacles_between(layer, a, b, world=world)
        else:
            at_a, at_b = a.advanced(seconds), b.advanced(seconds)
            obstacles = _predicted_obstacles(layer, world, at_a, at_b, seconds)
        total += link_nlos_risk(at_a, at_b, obstacles, v_ego, params, epsilon)
        total += static_nlos_risk(at_a, at_b, buildings, v_ego, epsilon)
    return total / len(offsets)
