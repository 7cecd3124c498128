"""
Abstract perception matrices.

An APM is an m x n grid of perception-index counts anchored at its source
vehicle: local x runs along the source heading, local y to its left, and
cell (i, j) covers local x in [i*k - m*k/2, (i+1)*k - m*k/2) and local y in
[j*k - n*k/2, (j+1)*k - n*k/2).
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from ..exceptions import DomainError
from ..geometry import EPS, WORLD_FRAME, Frame, Point2, as_sample_array, to_local, to_world

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Apm:
    center: Point2
    heading: float
    k: float
    cells: NDArray[np.uint32]
    source_id: int = 0
    timestamp: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"APM resolution k must be positive, got {self.k}")
        if self.cells.ndim != 2 or min(self.cells.shape) < 1:
            raise DomainError(f"APM cells must be a non-empty 2D grid, got shape {self.cells.shape}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Apm):
            return NotImplemented
        return (
            self.center == other.center
            and self.heading == other.heading
            and self.k == other.k
            and self.source_id == other.source_id
            and self.timestamp == other.timestamp
            and self.cells.dtype == other.cells.dtype
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def m(self) -> int:
        return self.cells.shape[0]

    @property
    def n(self) -> int:
        return self.cells.shape[1]

    @property
    def frame(self) -> Frame:
        return Frame(self.center, self.heading)

    @property
    def half_extent(self) -> tuple[float, float]:
        return self.m * self.k / 2.0, self.n * self.k / 2.0

    def cell_centers(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Local (x, y) coordinates of every cell center, each shaped (m, n)."""
        hx, hy = self.half_extent
        xs = (np.arange(self.m) + 0.5) * self.k - hx
        ys = (np.arange(self.n) + 0.5) * self.k - hy
        return np.meshgrid(xs, ys, indexing="ij")

    def cell_of(self, p: Point2) -> tuple[int, int] | None:
        """Cell index containing world point p, or None outside the extent."""
        local = to_local(p, self.frame)
        hx, hy = self.half_extent
        i = math.floor((local.x + hx) / self.k)
        j = math.floor((local.y + hy) / self.k)
        if 0 <= i < self.m and 0 <= j < self.n:
            return i, j
        return None

    def cell_footprint_local(self, i: int, j: int) -> tuple[float, float, float, float]:
        """Local bounds (x_min, y_min, x_max, y_max) of cell (i, j)."""
        hx, hy = self.half_extent
        return i * self.k - hx, j * self.k - hy, (i + 1) * self.k - hx, (j + 1) * self.k - hy


def build_apm(
    samples: NDArray[np.float64] | Sequence[Point2],
    center: Point2,
    heading: float,
    k: float,
    m: int,
    n: int,
    source_id: int = 0,
    timestamp: float = 0.0,
) -> Apm:
    """
    Bin perceived sample points into an APM.

    Samples are moved into the APM's local frame; those outside the m x n
    extent are pruned.
    """
    if not k > 0:
        raise DomainError(f"APM resolution k must be positive, got {k}")
    if m < 1 or n < 1:
        raise DomainError(f"APM dimensions must be >= 1, got {m}x{n}")

    points = as_sample_array(samples)
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    dx = points[:, 0] - center.x
    dy = points[:, 1] - center.y
    local_x = cos_h * dx + sin_h * dy
    local_y = -sin_h * dx + cos_h * dy

    i = np.floor((local_x + m * k / 2.0) / k).astype(np.int64)
    j = np.floor((local_y + n * k / 2.0) / k).astype(np.int64)
    inside = (i >= 0) & (i < m) & (j >= 0) & (j < n)
    counts = np.bincount(i[inside] * n + j[inside], minlength=m * n)

    return Apm(
        center=center,
        heading=heading,
        k=k,
        cells=counts.reshape(m, n).astype(np.uint32),
        source_id=source_id,
        timestamp=timestamp,
    )


@dataclass(frozen=True, slots=True)
class BlindZone:
    """Disc (center, radius) of under-perceived space."""

    center: Point2
    radius: float
    # (i0, i1, j0, j1) half-open cell rectangle in the source APM, when known
    cell_bounds: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"Blind zone radius must be positive, got {self.radius}")


def _window_sums(grid: NDArray, w: int) -> NDArray[np.float64]:
    """Sum of every w x w placement, shape (rows - w + 1, cols - w + 1)."""
    table = np.zeros((grid.shape[0] + 1, grid.shape[1] + 1))
    table[1:, 1:] = np.cumsum(np.cumsum(grid, axis=0, dtype=np.float64), axis=1)
    return table[w:, w:] - table[:-w, w:] - table[w:, :-w] + table[:-w, :-w]


def qualifying_placements(apm: Apm, t1: float, w: int) -> NDArray[np.bool_]:
    """Top-left placements of w x w windows whose mean index is below t1."""
    if w < 1 or w > min(apm.m, apm.n):
        raise DomainError(f"Window size {w} does not fit a {apm.m}x{apm.n} grid")
    return _window_sums(apm.cells, w) / (w * w) < t1


def find_blind_zones(apm: Apm, t1: float, window_sizes: Iterable[int]) -> list[BlindZone]:
    """
    Detect blind zones with square filter windows.

    Qualifying placements of every window size are unioned; each connected
    component of covered cells becomes one zone at its bounding rectangle
    center (world frame) with the rectangle half-diagonal as radius.

    Raises:
        DomainError: If a window does not fit the grid or t1 is negative
    """
    if t1 < 0:
        raise DomainError(f"T1 must be non-negative, got {t1}")

    covered = np.zeros((apm.m, apm.n), dtype=bool)
    for w in window_sizes:
        qualifying = qualifying_placements(apm, t1, w)
        if not qualifying.any():
            continue
        # a cell is covered if any placement starting within w-1 cells above/left qualifies
        padded = np.zeros((apm.m + w - 1, apm.n + w - 1))
        padded[w - 1:apm.m, w - 1:apm.n] = qualifying
        covered |= _window_sums(padded, w) > 0

    labels, count = ndimage.label(covered)
    zones: list[BlindZone] = []
    hx, hy = apm.half_extent
    for rows, cols in ndimage.find_objects(labels)[:count]:
        i0, i1, j0, j1 = rows.start, rows.stop, cols.start, cols.stop
        local = Point2((i0 + i1) / 2.0 * apm.k - hx, (j0 + j1) / 2.0 * apm.k - hy)
        radius = 0.5 * apm.k * math.hypot(i1 - i0, j1 - j0)
        zones.append(BlindZone(to_world(local, apm.frame), radius, (i0, i1, j0, j1)))

    logger.debug(f"APM {apm.source_id}: {len(zones)} blind zone(s)")
    return zones


def transform_zone(zone: BlindZone, source: Frame, target: Frame) -> BlindZone:
    """Re-express a zone given in the source frame in the target frame."""
    world = to_world(zone.center, source)
    return BlindZone(to_local(world, target), zone.radius, zone.cell_bounds)


def perception_benefit(zone: BlindZone, provider: Apm) -> float:
    """Sum of provider cell index x k^2 over cells centered inside the zone (zone in provider frame)."""
    xs, ys = provider.cell_centers()
    inside = (xs - zone.center.x) ** 2 + (ys - zone.center.y) ** 2 <= zone.radius**2 + EPS
    return float(provider.cells[inside].sum(dtype=np.float64) * provider.k**2)


@dataclass(frozen=True, slots=True)
class BenefitReport:
    candidate_id: int
    benefit: float
    triggered: bool

    def __post_init__(self):
        if self.benefit < 0:
            raise DomainError(f"Benefit must be non-negative, got {self.benefit}")


def assess_provider(
    candidate_id: int,
    zones: Iterable[BlindZone],
    provider: Apm,
    t2: float,
    source: Frame = WORLD_FRAME,
) -> BenefitReport:
    """Total benefit a provider APM offers for the given zones."""
    benefit = sum(perception_benefit(transform_zone(zone, source, provider.frame), provider) for zone in zones)
    return BenefitReport(candidate_id, benefit, benefit >= t2)


def should_trigger_fusion(reports: Iterable[BenefitReport], t2: float) -> list[int]:
    """Candidate ids whose benefit reaches T2, by descending benefit then ascending id."""
    if t2 < 0:
        raise DomainError(f"T2 must be non-negative, got {t2}")
    selected = [r for r in reports if r.benefit >= t2]
    selected.sort(key=lambda r: (-r.benefit, r.candidate_id))
    return [r.candidate_id for r in selected]
