"""
Planar geometric primitives and predicates.

Scalar functions work on the immutable value types below; the ``*_batch``
variants take numpy arrays of shape (N, 2) and are what the cell classifiers
use. Contact on the boundary always counts as intersection.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from mvkit.errors import ConfigError

DEFAULT_TOL = 1e-9


class Degeneracy(Enum):
    """Outcome with a continuum of solutions instead of isolated points."""

    CONCENTRIC = "CONCENTRIC-DEGENERATE"


@dataclass(frozen=True)
class Point2:
    """A point in the plane (length units)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point2 coordinates must be finite, got ({self.x}, {self.y})")

    def __sub__(self, other: "Point2") -> Tuple[float, float]:
        return (self.x - other.x, self.y - other.y)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def of(cls, xy: Sequence[float]) -> "Point2":
        return cls(float(xy[0]), float(xy[1]))


@dataclass(frozen=True)
class Segment2:
    """Closed segment from ``a`` to ``b``; ``a == b`` behaves as a point."""

    a: Point2
    b: Point2

    @property
    def length(self) -> float:
        return self.a.distance_to(self.b)

    @property
    def is_degenerate(self) -> bool:
        return self.a == self.b


@dataclass(frozen=True)
class Capsule2:
    """Minkowski sum of a segment and a disc: the 2D volume of a link."""

    axis: Segment2
    radius: float

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius < 0:
            raise ValueError(f"Capsule radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class ObstaclePolygon:
    """
    A simple polygonal obstacle.

    Vertices are stored counterclockwise; clockwise input is reversed at
    construction. Self-intersecting outlines are rejected with BAD-POLYGON.
    """

    vertices: Tuple[Point2, ...]
    id: str

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(verts) < 3:
            raise ConfigError("BAD-POLYGON", f"obstacle '{self.id}' needs at least 3 vertices", self.id)
        ring = Polygon([(v.x, v.y) for v in verts])
        if not ring.is_valid or not ring.exterior.is_simple or ring.area <= 0:
            raise ConfigError("BAD-POLYGON", f"obstacle '{self.id}' is not a simple polygon", self.id)
        if not ring.exterior.is_ccw:
            verts = tuple(reversed(verts))
        object.__setattr__(self, "vertices", verts)

    @cached_property
    def shape(self) -> Polygon:
        return Polygon([(v.x, v.y) for v in self.vertices])


# =============================================================================
# SCALAR PREDICATES
# =============================================================================

CircleIntersection = Union[Tuple[Point2, ...], Degeneracy]


def circle_circle_intersection(c1: Point2, r1: float, c2: Point2, r2: float,
                               tol: float = DEFAULT_TOL) -> CircleIntersection:
    """
    Intersect two circles.

    Args:
        c1, r1: Center and radius of the first circle
        c2, r2: Center and radius of the second circle
        tol: Distance tolerance for tangency and coincidence

    Returns:
        Zero, one (tangency) or two points, or ``Degeneracy.CONCENTRIC`` when
        the circles coincide. With two points, the first lies to the left of
        the directed line c1 -> c2.
    """
    dx, dy = c2.x - c1.x, c2.y - c1.y
    d = math.hypot(dx, dy)
    if d <= tol:
        return Degeneracy.CONCENTRIC if abs(r1 - r2) <= tol else ()
    ux, uy = dx / d, dy / d
    if abs(d - (r1 + r2)) <= tol:
        return (Point2(c1.x + r1 * ux, c1.y + r1 * uy),)
    if abs(d - abs(r1 - r2)) <= tol:
        sign = 1.0 if r1 >= r2 else -1.0
        return (Point2(c1.x + sign * r1 * ux, c1.y + sign * r1 * uy),)
    if d > r1 + r2 or d < abs(r1 - r2):
        return ()
    a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    bx, by = c1.x + a * ux, c1.y + a * uy
    # left normal of c1 -> c2
    nx, ny = -uy, ux
    return (Point2(bx + h * nx, by + h * ny), Point2(bx - h * nx, by - h * ny))


def segment_point_distance(s: Segment2, p: Point2) -> float:
    """Euclidean distance from ``p`` to the nearest point of ``s``."""
    ax, ay = s.a.x, s.a.y
    vx, vy = s.b.x - ax, s.b.y - ay
    denom = vx * vx + vy * vy
    if denom == 0.0:
        return math.hypot(p.x - ax, p.y - ay)
    t = ((p.x - ax) * vx + (p.y - ay) * vy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (ax + t * vx), p.y - (ay + t * vy))


def _orientation(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def segment_segment_distance(s: Segment2, t: Segment2) -> float:
    """Minimum distance between two closed segments (0 when they cross)."""
    o1 = _orientation(s.a, s.b, t.a)
    o2 = _orientation(s.a, s.b, t.b)
    o3 = _orientation(t.a, t.b, s.a)
    o4 = _orientation(t.a, t.b, s.b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 0.0
    return min(
        segment_point_distance(s, t.a),
        segment_point_distance(s, t.b),
        segment_point_distance(t, s.a),
        segment_point_distance(t, s.b),
    )


def capsule_capsule_intersects(p: Capsule2, q: Capsule2) -> bool:
    """True iff the two capsules share at least one point."""
    return segment_segment_distance(p.axis, q.axis) <= p.radius + q.radius


def capsule_polygon_intersects(c: Capsule2, poly: ObstaclePolygon) -> bool:
    """True iff the capsule touches the polygon boundary or lies inside it."""
    if c.axis.is_degenerate:
        body = Point(c.axis.a.x, c.axis.a.y)
    else:
        body = LineString([(c.axis.a.x, c.axis.a.y), (c.axis.b.x, c.axis.b.y)])
    # polygon distance is 0 for anything inside
    return poly.shape.distance(body) <= c.radius


# =============================================================================
# BATCH KERNELS (numpy, shape (N, 2))
# =============================================================================

def circle_circle_intersection_batch(c1: np.ndarray, r1, c2: np.ndarray, r2,
                                     tol: float = DEFAULT_TOL):
    """
    Vectorized ``circle_circle_intersection``.

    Returns:
        tuple: (left, right, count) where ``left``/``right`` are (N, 2) arrays
        (NaN where absent) and ``count`` is 0, 1, 2, or -1 for concentric.
        For tangency both arrays hold the single point.
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    r1 = np.broadcast_to(np.asarray(r1, dtype=float), c1.shape[:1])
    r2 = np.broadcast_to(np.asarray(r2, dtype=float), c1.shape[:1])
    delta = c2 - c1
    d = np.hypot(delta[:, 0], delta[:, 1])
    safe_d = np.where(d > tol, d, 1.0)
    u = delta / safe_d[:, None]

    concentric = (d <= tol) & (np.abs(r1 - r2) <= tol)
    coincident_centers = d <= tol
    outer_tangent = ~coincident_centers & (np.abs(d - (r1 + r2)) <= tol)
    inner_tangent = ~coincident_centers & ~outer_tangent & (np.abs(d - np.abs(r1 - r2)) <= tol)
    apart = ~coincident_centers & ~outer_tangent & ~inner_tangent & (
        (d > r1 + r2) | (d < np.abs(r1 - r2)))
    two = ~coincident_centers & ~outer_tangent & ~inner_tangent & ~apart

    a = (safe_d ** 2 + r1 ** 2 - r2 ** 2) / (2.0 * safe_d)
    h = np.sqrt(np.clip(r1 ** 2 - a ** 2, 0.0, None))
    # tangent points sit on the center line
    a = np.where(outer_tangent, r1, a)
    a = np.where(inner_tangent, np.where(r1 >= r2, r1, -r1), a)
    h = np.where(two, h, 0.0)
    base = c1 + a[:, None] * u
    normal = np.stack([-u[:, 1], u[:, 0]], axis=1)
    left = base + h[:, None] * normal
    right = base - h[:, None] * normal

    count = np.zeros(d.shape, dtype=int)
    count[two] = 2
    count[outer_tangent | inner_tangent] = 1
    count[concentric] = -1
    absent = count <= 0
    left[absent] = np.nan
    right[absent] = np.nan
    return left, right, count


def segment_point_distance_batch(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Row-wise distance from points ``p`` to segments ``a``-``b``."""
    v = b - a
    w = p - a
    denom = np.einsum("ij,ij->i", v, v)
    safe = np.where(denom > 0.0, denom, 1.0)
    t = np.clip(np.einsum("ij,ij->i", w, v) / safe, 0.0, 1.0)
    t = np.where(denom > 0.0, t, 0.0)
    nearest = a + t[:, None] * v
    diff = p - nearest
    return np.hypot(diff[:, 0], diff[:, 1])


def _orientation_batch(a, b, c):
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


def segment_segment_distance_batch(a0: np.ndarray, a1: np.ndarray,
                                   b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Row-wise minimum distance between segments a0-a1 and b0-b1."""
    o1 = _orientation_batch(a0, a1, b0)
    o2 = _orientation_batch(a0, a1, b1)
    o3 = _orientation_batch(b0, b1, a0)
    o4 = _orientation_batch(b0, b1, a1)
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    dist = np.minimum.reduce([
        segment_point_distance_batch(a0, a1, b0),
        segment_point_distance_batch(a0, a1, b1),
        segment_point_distance_batch(b0, b1, a0),
        segment_point_distance_batch(b0, b1, a1),
    ])
    return np.where(crossing, 0.0, dist)


def segment_polygon_distance_batch(a: np.ndarray, b: np.ndarray, poly: ObstaclePolygon) -> np.ndarray:
    """Row-wise distance from segments a-b to a polygon (0 inside)."""
    out = np.empty(a.shape[0], dtype=float)
    point_rows = np.all(a == b, axis=1)
    if point_rows.any():
        pts = shapely.points(a[point_rows])
        out[point_rows] = shapely.distance(pts, poly.shape)
    line_rows = ~point_rows
    if line_rows.any():
        coords = np.stack([a[line_rows], b[line_rows]], axis=1)
        lines = shapely.linestrings(coords)
        out[line_rows] = shapely.distance(lines, poly.shape)
    return out
