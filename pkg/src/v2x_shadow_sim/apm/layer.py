"""Mobility-height layer attached to an APM grid."""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..geometry import Footprint, Point2, Vector2, footprints_overlap
from ..scenario import VehicleState, WorldState
from .matrix import Apm

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ObstacleRecord:
    """A vehicle as known to the layer: footprint, height and velocity."""

    id: int
    footprint: Footprint
    height: float
    velocity: Vector2

    @classmethod
    def from_vehicle(cls, vehicle: VehicleState) -> "ObstacleRecord":
        return cls(vehicle.id, vehicle.footprint, vehicle.height, vehicle.velocity)

    def advanced(self, seconds: float) -> "ObstacleRecord":
        """The record moved at constant velocity for the given time."""
        return ObstacleRecord(self.id, self.footprint.translated(self.velocity.scale(seconds)), self.height, self.velocity)


@dataclass(frozen=True, slots=True)
class MobilityHeightCell:
    max_height: float
    mean_velocity: Vector2
    sample_count: int
    vehicle_ids: tuple[int, ...] = ()


@dataclass(frozen=True, slots=True)
class LayerPayload:
    """Per-cell height (m) and mean velocity (m/s), as carried on the wire."""

    max_height: NDArray[np.float64]
    mean_velocity: NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class MobilityHeightLayer:
    apm: Apm
    max_height: NDArray[np.float64]
    mean_velocity: NDArray[np.float64]
    sample_count: NDArray[np.int64]
    members: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    records: dict[int, ObstacleRecord] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.apm.m, self.apm.n

    def cell(self, i: int, j: int) -> MobilityHeightCell:
        vx, vy = self.mean_velocity[i, j]
        return MobilityHeightCell(
            max_height=float(self.max_height[i, j]),
            mean_velocity=Point2(float(vx), float(vy)),
            sample_count=int(self.sample_count[i, j]),
            vehicle_ids=self.members.get((i, j), ()),
        )

    def payload(self) -> LayerPayload:
        return LayerPayload(self.max_height.copy(), self.mean_velocity.copy())


def _covered_cells(apm: Apm, footprint: Footprint) -> list[tuple[int, int]]:
    """Cells of the APM grid whose square overlaps the footprint (positive area)."""
    local = footprint.transformed(apm.frame)
    x_min, y_min, x_max, y_max = local.bounds()
    hx, hy = apm.half_extent
    i_lo = max(0, math.floor((x_min + hx) / apm.k))
    i_hi = min(apm.m - 1, math.floor((x_max + hx) / apm.k))
    j_lo = max(0, math.floor((y_min + hy) / apm.k))
    j_hi = min(apm.n - 1, math.floor((y_max + hy) / apm.k))

    cells = []
    for i in range(i_lo, i_hi + 1):
        for j in range(j_lo, j_hi + 1):
            square = Footprint.rect(*apm.cell_footprint_local(i, j), height=1.0)
            if footprints_overlap(local, square):
                cells.append((i, j))
    return cells


def layer_from_records(apm: Apm, records: Iterable[ObstacleRecord]) -> MobilityHeightLayer:
    """
    Summarize obstacle records on the APM grid.

    Every record is retained on the layer, including records that cover no
    cell of this grid.
    """
    m, n = apm.m, apm.n
    max_height = np.zeros((m, n))
    velocity_sum = np.zeros((m, n, 2))
    count = np.zeros((m, n), dtype=np.int64)
    members: dict[tuple[int, int], list[int]] = {}
    kept: dict[int, ObstacleRecord] = {}

    for record in sorted(records, key=lambda r: r.id):
        kept[record.id] = record
        for i, j in _covered_cells(apm, record.footprint):
            max_height[i, j] = max(max_height[i, j], record.height)
            velocity_sum[i, j] += (record.velocity.x, record.velocity.y)
            count[i, j] += 1
            members.setdefault((i, j), []).append(record.id)

    with np.errstate(invalid="ignore", divide="ignore"):
        mean_velocity = np.where(count[..., None] > 0, velocity_sum / count[..., None], 0.0)

    return MobilityHeightLayer(
        apm=apm,
        max_height=max_height,
        mean_velocity=mean_velocity,
        sample_count=count,
        members={cell: tuple(ids) for cell, ids in members.items()},
        records=kept,
    )


def build_mobility_height_layer(
    world: WorldState,
    apm: Apm,
    exclude_ids: Iterable[int] = (),
) -> MobilityHeightLayer:
    """
    Height and mobility statistics of the vehicles overlapping each APM cell.

    Args:
        world: World snapshot
        apm: APM whose grid the layer attaches to
        exclude_ids: Vehicles left out (typically the APM's own source)

    Returns:
        MobilityHeightLayer holding the records of every overlapping vehicle
    """
    excluded = set(exclude_ids)
    reach = math.hypot(*apm.half_extent)
    records = []
    for vehicle in world.vehicles:
        if vehicle.id in excluded:
            continue
        if vehicle.position.distance_to(apm.center) > reach + math.hypot(vehicle.length, vehicle.width):
            continue
        if _covered_cells(apm, vehicle.footprint):
            records.append(ObstacleRecord.from_vehicle(vehicle))
    return layer_from_records(apm, records)


def combine_layers(base: MobilityHeightLayer, *others: MobilityHeightLayer) -> MobilityHeightLayer:
    """Merge records received from other nodes into the base layer; base records win on shared ids."""
    records = dict(base.records)
    for other in others:
        for vehicle_id, record in other.records.items():
            records.setdefault(vehicle_id, record)
    combined = layer_from_records(base.apm, records.values())
    logger.debug(f"Combined layer: {len(base.records)} own + {len(records) - len(base.records)} shared records")
    return combined
