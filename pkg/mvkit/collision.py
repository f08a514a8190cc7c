"""
Manipulator volume and collision tests.

The volume V_M of a configuration is six capsules: the base (a1-a2), the
proximal and distal link of each leg, and the platform disc at P. Internal
collisions test every pair of bodies; external
collisions test every body against every obstacle.

Bodies hinged at a common joint always touch there. Such joint-adjacent pairs
are tested with their axes trimmed by ``joint_clearance`` at the shared end, so
only a folded hinge reports a collision.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from mvkit.geometry import (
    Capsule2,
    ObstaclePolygon,
    Point2,
    Segment2,
    capsule_capsule_intersects,
    capsule_polygon_intersects,
    segment_polygon_distance_batch,
    segment_segment_distance_batch,
)
from mvkit.kinematics import MechanismConfiguration, MechanismGeometry

logger = logging.getLogger(__name__)


class BodyLabel(str, Enum):
    BASE = "base"
    LEG1_PROXIMAL = "leg1-proximal"
    LEG1_DISTAL = "leg1-distal"
    LEG2_PROXIMAL = "leg2-proximal"
    LEG2_DISTAL = "leg2-distal"
    PLATFORM = "platform"

    def __str__(self) -> str:
        return self.value


LINKS = (BodyLabel.LEG1_PROXIMAL, BodyLabel.LEG1_DISTAL, BodyLabel.LEG2_PROXIMAL, BodyLabel.LEG2_DISTAL)


@dataclass(frozen=True)
class BodyPair:
    """
    A pair of bodies tested for internal collision.

    ``shared`` says which axis end of each body sits on the common joint
    ("a" or "b"), or is None for bodies without a common joint.
    """

    first: BodyLabel
    second: BodyLabel
    shared: Optional[Tuple[str, str]] = None

    @property
    def labels(self) -> Tuple[BodyLabel, BodyLabel]:
        return (self.first, self.second)


# Axes: base a1->a2, proximal a_i->b_i, distal b_i->p, platform p->p.
INTERNAL_PAIRS: Tuple[BodyPair, ...] = (
    # links x base
    BodyPair(BodyLabel.LEG1_PROXIMAL, BodyLabel.BASE, ("a", "a")),
    BodyPair(BodyLabel.LEG1_DISTAL, BodyLabel.BASE),
    BodyPair(BodyLabel.LEG2_PROXIMAL, BodyLabel.BASE, ("a", "b")),
    BodyPair(BodyLabel.LEG2_DISTAL, BodyLabel.BASE),
    # links x platform
    BodyPair(BodyLabel.LEG1_PROXIMAL, BodyLabel.PLATFORM),
    BodyPair(BodyLabel.LEG1_DISTAL, BodyLabel.PLATFORM, ("b", "a")),
    BodyPair(BodyLabel.LEG2_PROXIMAL, BodyLabel.PLATFORM),
    BodyPair(BodyLabel.LEG2_DISTAL, BodyLabel.PLATFORM, ("b", "a")),
    # platform x base
    BodyPair(BodyLabel.PLATFORM, BodyLabel.BASE),
    # links x links
    BodyPair(BodyLabel.LEG1_PROXIMAL, BodyLabel.LEG1_DISTAL, ("b", "a")),
    BodyPair(BodyLabel.LEG1_PROXIMAL, BodyLabel.LEG2_PROXIMAL),
    BodyPair(BodyLabel.LEG1_PROXIMAL, BodyLabel.LEG2_DISTAL),
    BodyPair(BodyLabel.LEG1_DISTAL, BodyLabel.LEG2_PROXIMAL),
    BodyPair(BodyLabel.LEG1_DISTAL, BodyLabel.LEG2_DISTAL, ("b", "b")),
    BodyPair(BodyLabel.LEG2_PROXIMAL, BodyLabel.LEG2_DISTAL, ("b", "a")),
)


@dataclass(frozen=True)
class BodySet:
    """The six capsules of V_M at one configuration."""

    base: Capsule2
    links: Dict[BodyLabel, Capsule2]
    platform: Capsule2
    joint_clearance: float = 2.5

    def body(self, label: BodyLabel) -> Capsule2:
        if label is BodyLabel.BASE:
            return self.base
        if label is BodyLabel.PLATFORM:
            return self.platform
        return self.links[label]

    def bodies(self) -> List[Tuple[BodyLabel, Capsule2]]:
        return [(BodyLabel.BASE, self.base)] + [(k, self.links[k]) for k in LINKS] + [(BodyLabel.PLATFORM, self.platform)]


@dataclass(frozen=True)
class CollisionReport:
    """Offending pairs; empty on both sides iff the configuration is free."""

    internal_pairs: FrozenSet[Tuple[BodyLabel, BodyLabel]] = field(default_factory=frozenset)
    external_pairs: FrozenSet[Tuple[BodyLabel, str]] = field(default_factory=frozenset)

    @property
    def is_empty(self) -> bool:
        return not self.internal_pairs and not self.external_pairs


# =============================================================================
# SCALAR OPERATIONS
# =============================================================================

def body_set(g: MechanismGeometry, c: MechanismConfiguration) -> BodySet:
    """Position the base, links and platform for configuration ``c``."""
    p = c.x.p
    links = {
        BodyLabel.LEG1_PROXIMAL: Capsule2(Segment2(g.a1, c.b1), g.link_radius),
        BodyLabel.LEG1_DISTAL: Capsule2(Segment2(c.b1, p), g.link_radius),
        BodyLabel.LEG2_PROXIMAL: Capsule2(Segment2(g.a2, c.b2), g.link_radius),
        BodyLabel.LEG2_DISTAL: Capsule2(Segment2(c.b2, p), g.link_radius),
    }
    return BodySet(
        base=Capsule2(Segment2(g.a1, g.a2), g.base_radius),
        links=links,
        platform=Capsule2(Segment2(p, p), g.platform_radius),
        joint_clearance=g.joint_clearance,
    )


def _trim_scalar(capsule: Capsule2, end: str, clearance: float) -> Capsule2:
    a, b = capsule.axis.a, capsule.axis.b
    length = capsule.axis.length
    if length == 0.0:
        return capsule
    cut = min(clearance, 0.5 * length) / length
    if end == "a":
        a = Point2(a.x + (b.x - a.x) * cut, a.y + (b.y - a.y) * cut)
    else:
        b = Point2(b.x + (a.x - b.x) * cut, b.y + (a.y - b.y) * cut)
    return Capsule2(Segment2(a, b), capsule.radius)


def internal_collisions(bs: BodySet) -> FrozenSet[Tuple[BodyLabel, BodyLabel]]:
    """All colliding internal pairs, joint-adjacent pairs tested trimmed."""
    hits = set()
    for pair in INTERNAL_PAIRS:
        first, second = bs.body(pair.first), bs.body(pair.second)
        if pair.shared is not None:
            first = _trim_scalar(first, pair.shared[0], bs.joint_clearance)
            second = _trim_scalar(second, pair.shared[1], bs.joint_clearance)
        if capsule_capsule_intersects(first, second):
            hits.add(pair.labels)
    return frozenset(hits)


def external_collisions(bs: BodySet, obstacles: Sequence[ObstaclePolygon]) -> FrozenSet[Tuple[BodyLabel, str]]:
    """All (body, obstacle id) pairs whose volumes intersect."""
    hits = set()
    for label, capsule in bs.bodies():
        for obstacle in obstacles:
            if capsule_polygon_intersects(capsule, obstacle):
                hits.add((label, obstacle.id))
    return frozenset(hits)


def is_collision_free(g: MechanismGeometry, c: MechanismConfiguration,
                      obstacles: Sequence[ObstaclePolygon] = ()) -> Tuple[bool, CollisionReport]:
    """
    Membership of ``c`` in the collision-free space.

    Returns:
        tuple: (free, report) with the offending pairs in ``report``
    """
    bs = body_set(g, c)
    report = CollisionReport(internal_collisions(bs), external_collisions(bs, obstacles))
    if not report.is_empty:
        logger.debug("collision at p=(%g, %g): internal %s, external %s", c.x.p.x, c.x.p.y,
                     sorted((a.value, b.value) for a, b in report.internal_pairs),
                     sorted((a.value, name) for a, name in report.external_pairs))
    return report.is_empty, report


# =============================================================================
# BATCH TEST
# =============================================================================

def _axes_batch(g: MechanismGeometry, p: np.ndarray, b1: np.ndarray, b2: np.ndarray):
    n = p.shape[0]
    anchors = g.anchors_array()
    a1 = np.broadcast_to(anchors[0], (n, 2))
    a2 = np.broadcast_to(anchors[1], (n, 2))
    axes = {
        BodyLabel.BASE: (a1, a2, g.base_radius),
        BodyLabel.LEG1_PROXIMAL: (a1, b1, g.link_radius),
        BodyLabel.LEG1_DISTAL: (b1, p, g.link_radius),
        BodyLabel.LEG2_PROXIMAL: (a2, b2, g.link_radius),
        BodyLabel.LEG2_DISTAL: (b2, p, g.link_radius),
        BodyLabel.PLATFORM: (p, p, g.platform_radius),
    }
    return axes


def _trim_batch(start: np.ndarray, end: np.ndarray, which: str, clearance: float):
    v = end - start
    length = np.hypot(v[:, 0], v[:, 1])
    safe = np.where(length > 0.0, length, 1.0)
    cut = np.where(length > 0.0, np.minimum(clearance, 0.5 * length) / safe, 0.0)
    if which == "a":
        return start + cut[:, None] * v, end
    return start, end - cut[:, None] * v


def collision_free_batch(g: MechanismGeometry, p: np.ndarray, b1: np.ndarray, b2: np.ndarray,
                         obstacles: Iterable[ObstaclePolygon] = ()) -> np.ndarray:
    """
    Vectorized ``is_collision_free`` over N configurations.

    Rows containing NaN (no configuration) come back False.
    """
    p = np.asarray(p, dtype=float)
    finite = np.isfinite(p).all(axis=1) & np.isfinite(b1).all(axis=1) & np.isfinite(b2).all(axis=1)
    free = finite.copy()
    if not finite.any():
        return free
    rows = np.flatnonzero(finite)
    axes = _axes_batch(g, p[rows], np.asarray(b1)[rows], np.asarray(b2)[rows])
    ok = np.ones(rows.size, dtype=bool)
    for pair in INTERNAL_PAIRS:
        s0, s1, r_first = axes[pair.first]
        t0, t1, r_second = axes[pair.second]
        if pair.shared is not None:
            s0, s1 = _trim_batch(s0, s1, pair.shared[0], g.joint_clearance)
            t0, t1 = _trim_batch(t0, t1, pair.shared[1], g.joint_clearance)
        ok &= segment_segment_distance_batch(s0, s1, t0, t1) > r_first + r_second
    for obstacle in obstacles:
        for label, (s0, s1, radius) in axes.items():
            ok &= segment_polygon_distance_batch(np.ascontiguousarray(s0), np.ascontiguousarray(s1), obstacle) > radius
    free[rows] = ok
    return free
