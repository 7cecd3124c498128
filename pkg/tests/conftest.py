"""
Pytest Fixtures for V2X Shadow Sim Tests

Provides hand-built vehicles and worlds, default radio parameters and
fast scenario/simulation configs for engine-level tests.
"""

import math
from collections.abc import Callable

import pytest

from v2x_shadow_sim.config import ChannelParams, ScenarioConfig, SimConfig
from v2x_shadow_sim.geometry import Point2
from v2x_shadow_sim.scenario import BODY_CLASSES, Building, VehicleRole, VehicleState, WorldState


@pytest.fixture
def channel() -> ChannelParams:
    """Default channel parameters."""
    return ChannelParams()


@pytest.fixture
def make_vehicle() -> Callable[..., VehicleState]:
    """Factory for vehicles placed by hand (heading in radians, speed in m/s)."""

    def factory(
        vehicle_id: int,
        x: float,
        y: float,
        heading: float = 0.0,
        speed: float = 0.0,
        body: str = "sedan",
        height: float | None = None,
        antenna_height: float | None = None,
        role: VehicleRole = VehicleRole.BACKGROUND,
        v2x_enabled: bool = True,
    ) -> VehicleState:
        cls = BODY_CLASSES[body]
        return VehicleState(
            id=vehicle_id,
            role=role,
            body=cls.name,
            position=Point2(x, y),
            velocity=Point2(math.cos(heading) * speed, math.sin(heading) * speed),
            heading=heading,
            length=cls.length,
            width=cls.width,
            height=cls.height if height is None else height,
            antenna_height=cls.antenna_height if antenna_height is None else antenna_height,
            v2x_enabled=v2x_enabled,
        )

    return factory


@pytest.fixture
def make_world() -> Callable[..., WorldState]:
    """Factory for static worlds without lanes or traffic inflow."""

    def factory(vehicles=(), buildings: tuple[Building, ...] = (), clock: float = 0.0) -> WorldState:
        return WorldState(clock=clock, vehicles=tuple(vehicles), buildings=tuple(buildings))

    return factory


@pytest.fixture
def blocked_world(make_vehicle, make_world) -> WorldState:
    """
    Ego (id 0) and sharing node (id 2) 40 m apart with a parked truck (id 10)
    across the direct link and a relay candidate (id 100) off to the side.
    """
    ego = make_vehicle(0, 0.0, 0.0, math.pi / 2, 8.0, antenna_height=1.5, role=VehicleRole.EGO)
    sharing = make_vehicle(2, 40.0, 0.0, math.pi, 0.0, role=VehicleRole.SHARING_NODE)
    truck = make_vehicle(10, 20.0, 0.0, math.pi / 2, 0.0, body="truck", role=VehicleRole.BLOCKING, v2x_enabled=False)
    relay = make_vehicle(100, 20.0, 10.0, 0.0, 10.0)
    return make_world([ego, sharing, truck, relay])


@pytest.fixture
def quick_scenario() -> ScenarioConfig:
    """Small, sparse map so engine tests stay fast."""
    return ScenarioConfig(
        spawn_spacing_n=100.0,
        duration=1.0,
        seed=3,
        map_half_extent=120.0,
        ego_start_distance=60.0,
    )


@pytest.fixture
def quick_sim() -> SimConfig:
    """Coarse lidar and a short re-selection window."""
    return SimConfig(lidar_rays=90, lidar_range=40.0, lidar_step=2.0)
