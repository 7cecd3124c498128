"""Synthetic lidar perception from ground-truth world snapshots."""

import numpy as np
from numpy.typing import NDArray

from ..geometry import cast_rays
from ..scenario import VehicleState, WorldState


def synth_perception(
    world: WorldState,
    sensor_vehicle: VehicleState,
    rays: int,
    max_range: float,
    step: float = 1.0,
) -> NDArray[np.float64]:
    """
    Perceived sample points of one vehicle's sweep.

    Rays are cast from the vehicle position against every other vehicle and
    every building; space behind occluders yields no samples.
    """
    obstacles = [v.footprint for v in world.vehicles if v.id != sensor_vehicle.id]
    obstacles.extend(b.footprint for b in world.buildings)
    return cast_rays(sensor_vehicle.position, obstacles, rays, max_range, step)
