"""
Intersection Scenario

Builds and advances the occluded-intersection world: a 5-lane vertical road
crossing a 4-lane horizontal road, four corner building blocks, the role
vehicles (ego, collision vehicle, sharing node, blocking platoon) and
Poisson-spawned background traffic.

Lane layout (lane width w, default 3.5 m):
- vertical: x = -2w, -w southbound; x = 0, w northbound; x = 2w northbound
  right-turn lane, reserved for the blocking platoon
- horizontal: y = -1.5w, -0.5w eastbound; y = 0.5w, 1.5w westbound
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np

from .config import ScenarioConfig, kmh_to_ms
from .exceptions import DomainError
from .geometry import AntennaPoint, Footprint, Point2, Vector2

logger = logging.getLogger(__name__)

# Fixed ids of the role vehicles; blocking and background ids start above them
EGO_ID = 0
COLLISION_ID = 1
SHARING_NODE_ID = 2
FIRST_BLOCKING_ID = 10
FIRST_BACKGROUND_ID = 100

# Random streams derived from the scenario seed
SPAWN_STREAM = 1
INFLOW_STREAM = 2

# Sharing node waits in the outer westbound lane this far east of the crossing
SHARING_NODE_OFFSET = 25.0
PLATOON_GAP = 2.0
PLATOON_FRONT_CLEARANCE = 5.5
SPAWN_CLEARANCE = 8.0
EGO_ANTENNA_HEIGHT = 1.5


class VehicleRole(StrEnum):
    EGO = "ego"
    COLLISION = "collision"
    SHARING_NODE = "sharing_node"
    BLOCKING = "blocking"
    BACKGROUND = "background"


@dataclass(frozen=True, slots=True)
class BodyClass:
    """Representative dimensions of a vehicle class."""

    name: str
    length: float
    width: float
    height: float
    antenna_height: float


SEDAN = BodyClass("sedan", 4.6, 1.9, 1.5, 1.6)
SUV = BodyClass("suv", 4.9, 2.0, 1.8, 1.9)
BUS = BodyClass("bus", 11.0, 2.5, 3.0, 2.5)
TRUCK = BodyClass("truck", 8.0, 2.5, 4.0, 2.5)

BODY_CLASSES = {body.name: body for body in (SEDAN, SUV, BUS, TRUCK)}


@dataclass(frozen=True, slots=True)
class VehicleState:
    id: int
    role: VehicleRole
    body: str
    position: Point2
    velocity: Vector2
    heading: float
    length: float
    width: float
    height: float
    antenna_height: float
    v2x_enabled: bool
    lane: str | None = None

    def __post_init__(self):
        if not self.height > 0:
            raise DomainError(f"Vehicle {self.id} height must be positive")
        if self.antenna_height > self.height + 0.5 + 1e-9:
            raise DomainError(f"Vehicle {self.id} antenna above roof allowance", antenna_height=self.antenna_height)

    @property
    def speed(self) -> float:
        return self.velocity.norm()

    @property
    def footprint(self) -> Footprint:
        return Footprint.box(self.position, self.heading, self.length, self.width, self.height)

    @property
    def antenna(self) -> AntennaPoint:
        return AntennaPoint(self.position, self.antenna_height)

    def advanced(self, seconds: float) -> "VehicleState":
        """Constant-velocity extrapolation of the position."""
        return replace(self, position=self.position + self.velocity.scale(seconds))


@dataclass(frozen=True, slots=True)
class Building:
    footprint: Footprint
    walls_per_crossing: float = 1.0

    def __post_init__(self):
        if self.footprint.height < 3.0:
            raise DomainError(f"Building height must be at least 3 m, got {self.footprint.height}")


@dataclass(frozen=True, slots=True)
class Lane:
    """Straight lane centerline running across the whole map."""

    name: str
    origin: Point2
    direction: Vector2
    length: float
    turning: bool = False

    @property
    def heading(self) -> float:
        return math.atan2(self.direction.y, self.direction.x)

    def point_at(self, s: float) -> Point2:
        return self.origin + self.direction.scale(s)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the simulated world."""

    clock: float
    vehicles: tuple[VehicleState, ...]
    buildings: tuple[Building, ...]
    lanes: tuple[Lane, ...] = ()
    step_index: int = 0
    next_id: int = FIRST_BACKGROUND_ID
    config: ScenarioConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        ids = [v.id for v in self.vehicles]
        if len(ids) != len(set(ids)):
            raise DomainError("Vehicle ids must be unique")

    def vehicle(self, vehicle_id: int) -> VehicleState:
        for v in self.vehicles:
            if v.id == vehicle_id:
                return v
        raise KeyError(vehicle_id)

    def by_role(self, role: VehicleRole) -> list[VehicleState]:
        return [v for v in self.vehicles if v.role == role]

    @property
    def ego(self) -> VehicleState:
        return self.vehicle(EGO_ID)

    @property
    def sharing_node(self) -> VehicleState:
        return self.vehicle(SHARING_NODE_ID)


def _make_vehicle(
    vehicle_id: int,
    role: VehicleRole,
    body: BodyClass,
    position: Point2,
    heading: float,
    speed: float,
    v2x_enabled: bool,
    lane: str | None = None,
    height: float | None = None,
    antenna_height: float | None = None,
) -> VehicleState:
    height = body.height if height is None else height
    antenna = body.antenna_height if antenna_height is None else antenna_height
    antenna = min(antenna, height + 0.5)
    velocity = Point2(math.cos(heading), math.sin(heading)).scale(speed)
    # snap axis-aligned headings so lane coordinates stay exact
    velocity = Point2(round(velocity.x, 12), round(velocity.y, 12))
    return VehicleState(
        id=vehicle_id,
        role=role,
        body=body.name,
        position=position,
        velocity=velocity,
        heading=heading,
        length=body.length,
        width=body.width,
        height=height,
        antenna_height=antenna,
        v2x_enabled=v2x_enabled,
        lane=lane,
    )


def build_lanes(config: ScenarioConfig) -> tuple[Lane, ...]:
    """Lane centerlines of both roads."""
    w = config.lane_width
    extent = config.map_half_extent
    length = 2.0 * extent
    north, south = Point2(0.0, 1.0), Point2(0.0, -1.0)
    east, west = Point2(1.0, 0.0), Point2(-1.0, 0.0)
    return (
        Lane("v_south_outer", Point2(-2 * w, extent), south, length),
        Lane("v_south_inner", Point2(-w, extent), south, length),
        Lane("v_north_inner", Point2(0.0, -extent), north, length),
        Lane("v_north_outer", Point2(w, -extent), north, length),
        Lane("v_north_turn", Point2(2 * w, -extent), north, length, turning=True),
        Lane("h_east_outer", Point2(-extent, -1.5 * w), east, length),
        Lane("h_east_inner", Point2(-extent, -0.5 * w), east, length),
        Lane("h_west_inner", Point2(extent, 0.5 * w), west, length),
        Lane("h_west_outer", Point2(extent, 1.5 * w), west, length),
    )


def build_buildings(config: ScenarioConfig) -> tuple[Building, ...]:
    """Four corner blocks between the roads, out to the map edge."""
    x0 = 2.5 * config.lane_width + config.building_setback
    y0 = 2.0 * config.lane_width + config.building_setback
    e = config.map_half_extent
    h = config.building_height
    return (
        Building(Footprint.rect(x0, y0, e, e, h)),
        Building(Footprint.rect(-e, y0, -x0, e, h)),
        Building(Footprint.rect(-e, -e, -x0, -y0, h)),
        Building(Footprint.rect(x0, -e, e, -y0, h)),
    )


def _role_vehicles(config: ScenarioConfig) -> list[VehicleState]:
    w = config.lane_width
    ego_speed = config.ego_speed
    collision_speed = kmh_to_ms(config.collision_speed)
    conflict_y = 0.5 * w

    ego = _make_vehicle(
        EGO_ID, VehicleRole.EGO, SEDAN, Point2(w, -config.ego_start_distance), math.pi / 2, ego_speed,
        v2x_enabled=True, lane="v_north_outer", antenna_height=EGO_ANTENNA_HEIGHT,
    )

    # reaches the conflict point when the ego does
    arrival = (config.ego_start_distance + conflict_y) / ego_speed
    collision = _make_vehicle(
        COLLISION_ID, VehicleRole.COLLISION, SEDAN, Point2(w + collision_speed * arrival, conflict_y), math.pi,
        collision_speed, v2x_enabled=False, lane="h_west_inner",
    )

    sharing = _make_vehicle(
        SHARING_NODE_ID, VehicleRole.SHARING_NODE, SEDAN, Point2(SHARING_NODE_OFFSET, 1.5 * w), math.pi, 0.0,
        v2x_enabled=True, lane="h_west_outer",
    )

    vehicles = [ego, collision, sharing]
    front = -(2.0 * w + PLATOON_FRONT_CLEARANCE)
    for index, height in enumerate(config.blocking_vehicle_heights):
        body = TRUCK if height >= 3.5 else BUS
        center = Point2(2 * w, front - body.length / 2.0)
        vehicles.append(
            _make_vehicle(
                FIRST_BLOCKING_ID + index, VehicleRole.BLOCKING, body, center, math.pi / 2, config.blocking_speed,
                v2x_enabled=False, lane="v_north_turn", height=height,
            )
        )
        front -= body.length + PLATOON_GAP
    return vehicles


def _draw_body(rng: np.random.Generator, config: ScenarioConfig) -> BodyClass:
    u = rng.random()
    if u < config.large_vehicle_share:
        return TRUCK if rng.random() < 0.5 else BUS
    if u < config.large_vehicle_share + config.suv_share:
        return SUV
    return SEDAN


def _draw_speed(rng: np.random.Generator, config: ScenarioConfig) -> float:
    low, high = config.background_speed_range
    return kmh_to_ms(rng.uniform(low, high))


def _clear_of(position: Point2, occupied: Iterable[Point2]) -> bool:
    return all(position.distance_to(p) >= SPAWN_CLEARANCE for p in occupied)


def _spawn_background(
    config: ScenarioConfig,
    lanes: Iterable[Lane],
    reserved: list[Point2],
    rng: np.random.Generator,
    first_id: int,
) -> list[VehicleState]:
    """Poisson process along each lane with mean spacing N."""
    vehicles: list[VehicleState] = []
    next_id = first_id
    for lane in lanes:
        if lane.turning:
            continue
        s = rng.exponential(config.spawn_spacing_n)
        while s < lane.length:
            position = lane.point_at(s)
            body = _draw_body(rng, config)
            speed = _draw_speed(rng, config)
            if _clear_of(position, reserved):
                vehicles.append(
                    _make_vehicle(next_id, VehicleRole.BACKGROUND, body, position, lane.heading, speed, True, lane.name)
                )
                next_id += 1
            s += rng.exponential(config.spawn_spacing_n)
    return vehicles


def generate_intersection(config: ScenarioConfig) -> WorldState:
    """
    Generate the designed intersection world.

    Args:
        config: Scenario configuration

    Returns:
        WorldState at clock 0 with role vehicles and seeded background traffic
    """
    lanes = build_lanes(config)
    buildings = build_buildings(config)
    roles = _role_vehicles(config)

    rng = np.random.default_rng([config.seed, SPAWN_STREAM])
    background = _spawn_background(config, lanes, [v.position for v in roles], rng, FIRST_BACKGROUND_ID)

    vehicles = tuple(roles + background)
    logger.debug(f"Generated intersection: {len(background)} background vehicles, seed={config.seed}")
    return WorldState(
        clock=0.0,
        vehicles=vehicles,
        buildings=buildings,
        lanes=lanes,
        step_index=0,
        next_id=FIRST_BACKGROUND_ID + len(background),
        config=config,
    )


def _outside_map(vehicle: VehicleState, extent: float) -> bool:
    margin = extent + vehicle.length
    return abs(vehicle.position.x) > margin or abs(vehicle.position.y) > margin


def step_mobility(world: WorldState, dt: float) -> WorldState:
    """
    Advance every vehicle along its lane by dt.

    Background vehicles leaving the map are despawned; each regular lane
    receives a new background vehicle at its entry with probability
    v_mean * dt / N, drawn from a generator keyed by (seed, step index).

    Raises:
        DomainError: If dt is not positive
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")

    moved = [replace(v, position=v.position + v.velocity.scale(dt)) for v in world.vehicles]

    config = world.config
    next_id = world.next_id
    if config is not None:
        extent = config.map_half_extent
        moved = [v for v in moved if v.role != VehicleRole.BACKGROUND or not _outside_map(v, extent)]

        rng = np.random.default_rng([config.seed, INFLOW_STREAM, world.step_index])
        low, high = config.background_speed_range
        inflow = kmh_to_ms((low + high) / 2.0) * dt / config.spawn_spacing_n
        occupied = [v.position for v in moved]
        for lane in world.lanes:
            if lane.turning:
                continue
            arrives = rng.random() < inflow
            body = _draw_body(rng, config)
            speed = _draw_speed(rng, config)
            if arrives and _clear_of(lane.origin, occupied):
                moved.append(
                    _make_vehicle(next_id, VehicleRole.BACKGROUND, body, lane.origin, lane.heading, speed, True, lane.name)
                )
                occupied.append(lane.origin)
                next_id += 1

    return replace(
        world,
        clock=world.clock + dt,
        vehicles=tuple(moved),
        step_index=world.step_index + 1,
        next_id=next_id,
    )
