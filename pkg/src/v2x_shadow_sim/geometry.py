"""
Planar Geometry

2D / 2.5D primitives shared by propagation, sensing and relay logic:
points, convex footprints with a height, segment clipping against
footprints, line-height interpolation, frame transforms and ray casting.

All predicates use a 1e-9 m tolerance. A segment that only grazes a
footprint (touches a vertex or runs along an edge) does not cross it.
"""

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .exceptions import DomainError

EPS = 1e-9


@dataclass(frozen=True, slots=True)
class Point2:
    """Point (or 2-vector) in meters, world or local frame."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"Non-finite coordinates ({self.x}, {self.y})")

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def scale(self, factor: float) -> "Point2":
        return Point2(self.x * factor, self.y * factor)

    def dot(self, other: "Point2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Point2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def rotate(self, angle: float) -> "Point2":
        c, s = math.cos(angle), math.sin(angle)
        return Point2(c * self.x - s * self.y, s * self.x + c * self.y)


# Velocities share the point arithmetic.
Vector2 = Point2

ORIGIN = Point2(0.0, 0.0)


class Frame(NamedTuple):
    """Rigid 2D frame: origin in world coordinates and heading in radians."""

    origin: Point2
    heading: float


WORLD_FRAME = Frame(ORIGIN, 0.0)


def to_local(p: Point2, frame: Frame) -> Point2:
    """Express a world point in the given frame."""
    return (p - frame.origin).rotate(-frame.heading)


def to_world(p: Point2, frame: Frame) -> Point2:
    """Express a frame-local point in world coordinates."""
    return p.rotate(frame.heading) + frame.origin


@dataclass(frozen=True, slots=True)
class Footprint:
    """Convex counter-clockwise polygon with an obstacle height."""

    vertices: tuple[Point2, ...]
    height: float

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise DomainError("Footprint needs at least 3 vertices", vertices=len(self.vertices))
        if not self.height > 0:
            raise DomainError(f"Footprint height must be positive, got {self.height}")
        count = len(self.vertices)
        for index in range(count):
            a = self.vertices[index]
            b = self.vertices[(index + 1) % count]
            c = self.vertices[(index + 2) % count]
            if (b - a).cross(c - b) < -EPS:
                raise DomainError("Footprint must be convex and counter-clockwise")

    @classmethod
    def box(cls, center: Point2, heading: float, length: float, width: float, height: float) -> "Footprint":
        """Rotated rectangle, length along the heading."""
        hl, hw = length / 2.0, width / 2.0
        corners = (Point2(-hl, -hw), Point2(hl, -hw), Point2(hl, hw), Point2(-hl, hw))
        frame = Frame(center, heading)
        return cls(tuple(to_world(corner, frame) for corner in corners), height)

    @classmethod
    def rect(cls, x_min: float, y_min: float, x_max: float, y_max: float, height: float) -> "Footprint":
        """Axis-aligned rectangle."""
        return cls(
            (Point2(x_min, y_min), Point2(x_max, y_min), Point2(x_max, y_max), Point2(x_min, y_max)),
            height,
        )

    def translated(self, offset: Vector2) -> "Footprint":
        return Footprint(tuple(v + offset for v in self.vertices), self.height)

    def edges(self) -> Iterator[tuple[Point2, Point2]]:
        count = len(self.vertices)
        for index in range(count):
            yield self.vertices[index], self.vertices[(index + 1) % count]

    def centroid(self) -> Point2:
        count = len(self.vertices)
        return Point2(
            sum(v.x for v in self.vertices) / count,
            sum(v.y for v in self.vertices) / count,
        )

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def bounding_radius(self) -> float:
        center = self.centroid()
        return max(center.distance_to(v) for v in self.vertices)

    def signed_clearance(self, p: Point2) -> float:
        """Smallest distance from p to an edge line, negative when p is outside."""
        clearance = math.inf
        for a, b in self.edges():
            edge = b - a
            clearance = min(clearance, edge.cross(p - a) / edge.norm())
        return clearance

    def contains(self, p: Point2, strict: bool = True) -> bool:
        clearance = self.signed_clearance(p)
        return clearance > EPS if strict else clearance >= -EPS

    def transformed(self, frame: Frame) -> "Footprint":
        """Footprint expressed in a local frame."""
        return Footprint(tuple(to_local(v, frame) for v in self.vertices), self.height)


@dataclass(frozen=True, slots=True)
class AntennaPoint:
    """Antenna location on the ground plane with its mounting height."""

    position: Point2
    antenna_height: float

    def __post_init__(self):
        if not self.antenna_height > 0:
            raise DomainError(f"Antenna height must be positive, got {self.antenna_height}")


class ObstacleSplit(NamedTuple):
    """Along-segment split at an obstacle's representative peak."""

    d1: float
    d2: float
    peak_point: Point2


def _clip_line(a: Point2, b: Point2, f: Footprint) -> tuple[float, float] | None:
    """
    Cyrus-Beck clip of the infinite line a + t(b - a) against a closed footprint.

    Returns the raw parameter interval (t_in, t_out) or None when the line
    misses the footprint.
    """
    direction = b - a
    t_in, t_out = -math.inf, math.inf
    for p, q in f.edges():
        edge = q - p
        # outward normal of a counter-clockwise edge
        normal = Point2(edge.y, -edge.x)
        numerator = normal.dot(a - p)
        denominator = normal.dot(direction)
        if abs(denominator) < 1e-15:
            if numerator > EPS * edge.norm():
                return None
            continue
        t = -numerator / denominator
        if denominator < 0:
            t_in = max(t_in, t)
        else:
            t_out = min(t_out, t)
        if t_in > t_out:
            return None
    return t_in, t_out


def _chord(a: Point2, b: Point2, f: Footprint) -> tuple[float, float, float, float] | None:
    """Non-grazing chord of segment ab through f as (t_in_raw, t_out_raw, t0, t1)."""
    length = a.distance_to(b)
    if length <= EPS:
        raise DomainError("Degenerate segment: endpoints coincide")
    interval = _clip_line(a, b, f)
    if interval is None:
        return None
    t_in, t_out = interval
    t0, t1 = max(t_in, 0.0), min(t_out, 1.0)
    if (t1 - t0) * length <= EPS:
        return None
    midpoint = a + (b - a).scale((t0 + t1) / 2.0)
    if not f.contains(midpoint, strict=True):
        return None
    return t_in, t_out, t0, t1


def segment_footprint_crossings(a: Point2, b: Point2, f: Footprint) -> int:
    """
    Count boundary crossings of segment ab with a footprint.

    An endpoint strictly inside the footprint contributes no crossing on
    its side, so a segment from inside to outside counts 1.
    """
    chord = _chord(a, b, f)
    if chord is None:
        return 0
    t_in, t_out, _, _ = chord
    tolerance = EPS / a.distance_to(b)
    crossings = 0
    if t_in >= -tolerance:
        crossings += 1
    if t_out <= 1.0 + tolerance:
        crossings += 1
    return crossings


def obstacle_split(a: AntennaPoint, b: AntennaPoint, f: Footprint) -> ObstacleSplit | None:
    """Split of segment ab at the midpoint of its chord through f, if any."""
    chord = _chord(a.position, b.position, f)
    if chord is None:
        return None
    _, _, t0, t1 = chord
    t_mid = (t0 + t1) / 2.0
    length = a.position.distance_to(b.position)
    d1 = t_mid * length
    peak = a.position + (b.position - a.position).scale(t_mid)
    return ObstacleSplit(d1, length - d1, peak)


def line_height_at(a: AntennaPoint, b: AntennaPoint, p: Point2) -> float:
    """Height of the direct antenna-to-antenna line above p's projection."""
    direction = b.position - a.position
    squared = direction.dot(direction)
    if squared <= EPS * EPS:
        return a.antenna_height
    fraction = min(1.0, max(0.0, (p - a.position).dot(direction) / squared))
    return a.antenna_height + fraction * (b.antenna_height - a.antenna_height)


def footprints_overlap(f: Footprint, g: Footprint) -> bool:
    """Separating-axis test; touching boundaries do not count as overlap."""
    for polygon in (f, g):
        for p, q in polygon.edges():
            edge = q - p
            axis = Point2(-edge.y, edge.x).scale(1.0 / edge.norm())
            f_proj = [axis.dot(v) for v in f.vertices]
            g_proj = [axis.dot(v) for v in g.vertices]
            if min(f_proj) >= max(g_proj) - EPS or min(g_proj) >= max(f_proj) - EPS:
                return False
    return True


def _edge_array(obstacles: Iterable[Footprint]) -> NDArray[np.float64]:
    rows = [(p.x, p.y, q.x, q.y) for f in obstacles for p, q in f.edges()]
    return np.asarray(rows, dtype=np.float64).reshape(-1, 4)


def cast_rays(
    origin: Point2,
    obstacles: Sequence[Footprint],
    n_rays: int,
    max_range: float,
    step: float,
) -> NDArray[np.float64]:
    """
    Synthetic lidar sweep.

    Emits sample points every `step` meters along n_rays equally spaced
    bearings until the first footprint hit or max_range. A hit point is
    included. The result is an (N, 2) array of world coordinates.
    """
    if n_rays < 1:
        raise DomainError(f"n_rays must be >= 1, got {n_rays}")
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")

    if any(f.contains(origin, strict=False) for f in obstacles):
        return np.array([[origin.x, origin.y]], dtype=np.float64)

    nearby = [
        f for f in obstacles
        if f.centroid().distance_to(origin) - f.bounding_radius() <= max_range + EPS
    ]

    bearings = 2.0 * np.pi * np.arange(n_rays) / n_rays
    directions = np.column_stack((np.cos(bearings), np.sin(bearings)))
    hit_range = np.full(n_rays, np.inf)

    edges = _edge_array(nearby)
    if len(edges):
        px = edges[:, 0] - origin.x
        py = edges[:, 1] - origin.y
        ex = edges[:, 2] - edges[:, 0]
        ey = edges[:, 3] - edges[:, 1]
        dx = directions[:, 0:1]
        dy = directions[:, 1:2]
        denominator = dx * ey - dy * ex
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (px * ey - py * ex) / denominator
            s = (px * dy - py * dx) / denominator
        valid = (np.abs(denominator) > 1e-15) & (r >= -EPS) & (s >= -EPS) & (s <= 1.0 + EPS)
        hit_range = np.where(valid, r, np.inf).min(axis=1)

    blocked = hit_range <= max_range + EPS
    limit = np.where(blocked, hit_range, max_range)
    # samples strictly before a hit, up to and including max_range when clear
    counts = np.where(
        blocked,
        np.ceil(limit / step - EPS) - 1,
        np.floor(limit / step + EPS),
    ).astype(np.int64)
    counts = np.maximum(counts, 0)

    ray_index = np.repeat(np.arange(n_rays), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ranges = (offsets + 1) * step

    hit_rays = np.flatnonzero(blocked)
    ray_index = np.concatenate((ray_index, hit_rays))
    ranges = np.concatenate((ranges, hit_range[hit_rays]))

    order = np.lexsort((ranges, ray_index))
    ray_index, ranges = ray_index[order], ranges[order]
    xs = origin.x + ranges * directions[ray_index, 0]
    ys = origin.y + ranges * directions[ray_index, 1]
    return np.column_stack((xs, ys))


def as_sample_array(samples: NDArray[np.float64] | Sequence[Point2]) -> NDArray[np.float64]:
    """Normalize sample input (array or Point2 sequence) to an (N, 2) array."""
    if isinstance(samples, np.ndarray):
        return samples.reshape(-1, 2).astype(np.float64, copy=False)
    return np.asarray([(p.x, p.y) for p in samples], dtype=np.float64).reshape(-1, 2)
