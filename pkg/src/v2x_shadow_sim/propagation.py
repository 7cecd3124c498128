"""
Obstacle Shadowing Propagation

Per-link loss decomposition: free-space loss, 9.6 dB per building wall and
single knife-edge diffraction per obstructing vehicle, summed in dB. The
received power is mapped to a packet success probability by a logistic
curve centered on the receiver sensitivity.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit

from .config import ChannelParams
from .exceptions import DomainError
from .geometry import AntennaPoint, line_height_at, obstacle_split, segment_footprint_crossings
from .scenario import WorldState

logger = logging.getLogger(__name__)

WALL_LOSS_DB = 9.6

__all__ = [
    "ChannelParams",
    "DiffractionParams",
    "LinkBudget",
    "WALL_LOSS_DB",
    "building_penetration_loss",
    "fresnel_nu",
    "free_space_loss",
    "knife_edge_loss",
    "link_budget",
    "packet_success_probability",
]


def fresnel_nu(h: ArrayLike, wavelength: ArrayLike, d1: ArrayLike, d2: ArrayLike):
    """
    Fresnel-Kirchhoff diffraction parameter.

    nu = h * sqrt((1 / wavelength) * (1 / d1 + 1 / d2))

    Raises:
        DomainError: If wavelength, d1 or d2 is not positive
    """
    wavelength, d1, d2 = np.asarray(wavelength, float), np.asarray(d1, float), np.asarray(d2, float)
    if np.any(wavelength <= 0) or np.any(d1 <= 0) or np.any(d2 <= 0):
        raise DomainError("wavelength, d1 and d2 must be positive")
    nu = np.asarray(h, float) * np.sqrt((1.0 / wavelength) * (1.0 / d1 + 1.0 / d2))
    return float(nu) if nu.ndim == 0 else nu


def knife_edge_loss(nu: ArrayLike):
    """Single knife-edge loss in dB; zero for obstacles at or below the direct line (nu <= 0)."""
    nu = np.asarray(nu, float)
    shifted = nu - 0.1
    with np.errstate(invalid="ignore", divide="ignore"):
        loss = 6.9 + 20.0 * np.log10(np.sqrt(shifted**2 + 1.0) + shifted)
    loss = np.where(nu > 0, loss, 0.0)
    return float(loss) if loss.ndim == 0 else loss


def free_space_loss(d: float, wavelength: float) -> float:
    """Free-space path loss 20*log10(4*pi*d/wavelength) in dB."""
    if not d > 0:
        raise DomainError(f"Link distance must be positive, got {d}")
    if not wavelength > 0:
        raise DomainError(f"Wavelength must be positive, got {wavelength}")
    return 20.0 * math.log10(4.0 * math.pi * d / wavelength)


def building_penetration_loss(crossings: float) -> float:
    """Building loss for the given number of penetrated walls."""
    if crossings < 0:
        raise DomainError(f"Wall crossings must be non-negative, got {crossings}")
    return WALL_LOSS_DB * crossings


@dataclass(frozen=True, slots=True)
class DiffractionParams:
    """Knife-edge geometry of one obstacle on one link."""

    h: float
    d1: float
    d2: float
    nu: float

    @classmethod
    def from_geometry(cls, h: float, wavelength: float, d1: float, d2: float) -> "DiffractionParams":
        return cls(h, d1, d2, fresnel_nu(h, wavelength, d1, d2))

    @property
    def loss(self) -> float:
        return knife_edge_loss(self.nu)


def obstacle_diffraction(
    tx: AntennaPoint,
    rx: AntennaPoint,
    footprint,
    wavelength: float,
) -> DiffractionParams | None:
    """Knife-edge parameters of a footprint on the tx-rx link, or None if it is off the path."""
    split = obstacle_split(tx, rx, footprint)
    if split is None:
        return None
    h = footprint.height - line_height_at(tx, rx, split.peak_point)
    return DiffractionParams.from_geometry(h, wavelength, split.d1, split.d2)


@dataclass(frozen=True, slots=True)
class LinkBudget:
    distance: float
    fspl: float
    building_loss: float
    vehicle_losses: tuple[tuple[int, float], ...]
    tx_power: float

    @property
    def vehicle_loss(self) -> float:
        return sum(loss for _, loss in self.vehicle_losses)

    @property
    def total_loss(self) -> float:
        return self.fspl + self.building_loss + self.vehicle_loss

    @property
    def rx_power(self) -> float:
        return self.tx_power - self.fspl - self.building_loss - self.vehicle_loss


def link_budget(
    tx: AntennaPoint,
    rx: AntennaPoint,
    world: WorldState,
    params: ChannelParams,
    exclude_ids: set[int] | frozenset[int] = frozenset(),
) -> LinkBudget:
    """
    Decompose the loss of the tx->rx link in the given world.

    Args:
        tx: Transmitting antenna
        rx: Receiving antenna
        world: World snapshot providing buildings and vehicle obstacles
        params: Channel parameters
        exclude_ids: Vehicle ids that never obstruct (at least the endpoints)

    Returns:
        LinkBudget with vehicle losses ordered by obstacle id
    """
    a, b = tx.position, rx.position
    distance = a.distance_to(b)
    wavelength = params.wavelength
    fspl = free_space_loss(distance, wavelength)

    walls = sum(
        segment_footprint_crossings(a, b, building.footprint) * building.walls_per_crossing
        for building in world.buildings
    )

    x_min, x_max = min(a.x, b.x), max(a.x, b.x)
    y_min, y_max = min(a.y, b.y), max(a.y, b.y)
    losses: list[tuple[int, float]] = []
    for vehicle in world.vehicles:
        if vehicle.id in exclude_ids:
            continue
        reach = math.hypot(vehicle.length, vehicle.width) / 2.0
        p = vehicle.position
        if p.x + reach < x_min or p.x - reach > x_max or p.y + reach < y_min or p.y - reach > y_max:
            continue
        diffraction = obstacle_diffraction(tx, rx, vehicle.footprint, wavelength)
        if diffraction is not None:
            losses.append((vehicle.id, diffraction.loss))

    losses.sort()
    return LinkBudget(
        distance=distance,
        fspl=fspl,
        building_loss=building_penetration_loss(walls),
        vehicle_losses=tuple(losses),
        tx_power=params.tx_power,
    )


def packet_success_probability(rx_power: ArrayLike, params: ChannelParams):
    """Logistic packet success curve with its midpoint at the receiver sensitivity."""
    probability = expit((np.asarray(rx_power, float) - params.receiver_sensitivity) / params.psr_shape_db)
    return float(probability) if np.ndim(probability) == 0 else probability
