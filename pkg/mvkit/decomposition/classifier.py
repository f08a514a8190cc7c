"""
Pointwise classification of workspace and joint-space samples.

Every cell decision in the quadtree is made from these labels, so the scalar
``classify_point_*`` helpers route through the same vectorized code the tree
builder uses.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from mvkit.collision import collision_free_batch
from mvkit.decomposition.labels import CellLabel, Space, TreeKind
from mvkit.geometry import ObstaclePolygon, Point2
from mvkit.kinematics import (
    JointVector,
    MechanismGeometry,
    WorkingMode,
    forward_branch_batch,
    inverse_branch_batch,
)

logger = logging.getLogger(__name__)


@dataclass
class ClassifiedPoints:
    """Labels (CellLabel values) and det(A) per point, NaN where no branch."""

    labels: np.ndarray
    det_a: np.ndarray


@dataclass(frozen=True)
class PointClassifier:
    """
    Picklable classifier for one tree.

    Attributes:
        geometry: Mechanism dimensions and body radii
        space: W (points are P positions) or Q (points are joint vectors)
        kind: What FREE means (see TreeKind)
        mode: Working mode, required for ASPECTS trees
        det_sign: Assembly branch sign(det A), required for ASPECTS trees
        obstacles: Obstacle polygons
    """

    geometry: MechanismGeometry
    space: Space
    kind: TreeKind = TreeKind.ASPECTS
    mode: Optional[WorkingMode] = None
    det_sign: Optional[int] = None
    obstacles: Tuple[ObstaclePolygon, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.kind is TreeKind.ASPECTS and (self.mode is None or self.det_sign not in (1, -1)):
            raise ValueError("aspect classification needs a working mode and a det sign of +1 or -1")

    def __call__(self, points: np.ndarray) -> ClassifiedPoints:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind is TreeKind.ASPECTS:
            if self.space is Space.W:
                return classify_points_w(self.geometry, points, self.mode, self.det_sign, self.obstacles)
            return classify_points_q(self.geometry, points, self.mode, self.det_sign, self.obstacles)
        if self.space is Space.W:
            return _classify_union_w(self.geometry, points, self.obstacles, self.kind)
        return _classify_union_q(self.geometry, points, self.obstacles, self.kind)

    def describe(self) -> dict:
        """JSON-friendly identity of this classifier, used in cache keys."""
        return {
            "geometry": asdict(self.geometry),
            "space": self.space.value,
            "kind": self.kind.value,
            "mode": self.mode.index if self.mode else None,
            "det_sign": self.det_sign,
            "obstacles": [
                {"id": o.id, "vertices": [[v.x, v.y] for v in o.vertices]} for o in self.obstacles
            ],
        }


def _label_branch(g: MechanismGeometry, batch, candidates: np.ndarray, labels: np.ndarray,
                  obstacles: Sequence[ObstaclePolygon]) -> None:
    if not candidates.any():
        return
    rows = np.flatnonzero(candidates)
    free = collision_free_batch(g, batch.p[rows], batch.b1[rows], batch.b2[rows], obstacles)
    labels[rows[free]] = CellLabel.FREE
    labels[rows[~free]] = CellLabel.COLLISION


def classify_points_w(g: MechanismGeometry, points: np.ndarray, mode: WorkingMode,
                      det_sign: Optional[int], obstacles: Sequence[ObstaclePolygon] = ()) -> ClassifiedPoints:
    """
    Label platform positions along the inverse branch of ``mode``.

    UNREACHABLE where a leg cannot reach P (or, with ``det_sign`` given, where
    det A has the other sign); SERIAL_SINGULAR / PARALLEL_SINGULAR where |B_ii|
    or |det A| is within threshold; COLLISION where V_ic or V_ec is nonempty;
    FREE otherwise.
    """
    batch = inverse_branch_batch(g, points, mode)
    labels = np.full(points.shape[0], CellLabel.UNREACHABLE, dtype=np.int8)
    reach = batch.valid
    with np.errstate(invalid="ignore"):
        serial = reach & ((np.abs(batch.b11) <= g.eps_b) | (np.abs(batch.b22) <= g.eps_b))
        parallel = reach & ~serial & (np.abs(batch.det_a) <= g.eps_a)
        other_sign = np.zeros_like(reach)
        if det_sign is not None:
            other_sign = reach & ~serial & ~parallel & (np.sign(batch.det_a) != det_sign)
    labels[serial] = CellLabel.SERIAL_SINGULAR
    labels[parallel] = CellLabel.PARALLEL_SINGULAR
    _label_branch(g, batch, reach & ~serial & ~parallel & ~other_sign, labels, obstacles)
    return ClassifiedPoints(labels=labels, det_a=batch.det_a)


def classify_points_q(g: MechanismGeometry, joints: np.ndarray, mode: WorkingMode, det_sign: int,
                      obstacles: Sequence[ObstaclePolygon] = ()) -> ClassifiedPoints:
    """
    Label joint vectors along the assembly branch with sign(det A) = ``det_sign``.

    Tangent and concentric assemblies are PARALLEL_SINGULAR; a branch whose
    working mode differs from ``mode`` is UNREACHABLE.
    """
    batch, count = forward_branch_batch(g, joints, det_sign)
    labels = np.full(joints.shape[0], CellLabel.UNREACHABLE, dtype=np.int8)
    labels[(count == 1) | (count == -1)] = CellLabel.PARALLEL_SINGULAR
    two = count == 2
    with np.errstate(invalid="ignore"):
        serial = two & ((np.abs(batch.b11) <= g.eps_b) | (np.abs(batch.b22) <= g.eps_b))
        in_mode = (np.sign(batch.b11) == mode.s1) & (np.sign(batch.b22) == mode.s2)
        parallel = two & ~serial & in_mode & (np.abs(batch.det_a) <= g.eps_a)
    labels[serial] = CellLabel.SERIAL_SINGULAR
    labels[parallel] = CellLabel.PARALLEL_SINGULAR
    _label_branch(g, batch, two & ~serial & in_mode & ~parallel, labels, obstacles)
    det = np.where(count == -1, 0.0, batch.det_a)
    return ClassifiedPoints(labels=labels, det_a=det)


def _classify_union_w(g: MechanismGeometry, points: np.ndarray, obstacles, kind: TreeKind) -> ClassifiedPoints:
    n = points.shape[0]
    reach = np.zeros(n, dtype=bool)
    free = np.zeros(n, dtype=bool)
    for mode in WorkingMode:
        batch = inverse_branch_batch(g, points, mode)
        reach |= batch.valid
        if kind is TreeKind.FREE:
            free |= collision_free_batch(g, batch.p, batch.b1, batch.b2, obstacles)
    return _union_labels(reach, free, kind)


def _classify_union_q(g: MechanismGeometry, joints: np.ndarray, obstacles, kind: TreeKind) -> ClassifiedPoints:
    n = joints.shape[0]
    reach = np.zeros(n, dtype=bool)
    free = np.zeros(n, dtype=bool)
    for det_sign in (1, -1):
        batch, count = forward_branch_batch(g, joints, det_sign)
        # a coincident pair of elbows is an assembly, and an internal collision
        reach |= count != 0
        if kind is TreeKind.FREE:
            free |= collision_free_batch(g, batch.p, batch.b1, batch.b2, obstacles)
    return _union_labels(reach, free, kind)


def _union_labels(reach: np.ndarray, free: np.ndarray, kind: TreeKind) -> ClassifiedPoints:
    labels = np.full(reach.shape[0], CellLabel.UNREACHABLE, dtype=np.int8)
    if kind is TreeKind.REACH:
        labels[reach] = CellLabel.FREE
    else:
        labels[reach] = CellLabel.COLLISION
        labels[free] = CellLabel.FREE
    return ClassifiedPoints(labels=labels, det_a=np.full(reach.shape[0], np.nan))


def classify_point_w(g: MechanismGeometry, p: Point2, mode: WorkingMode, det_sign: Optional[int] = None,
                     obstacles: Sequence[ObstaclePolygon] = ()) -> CellLabel:
    """Label one platform position (see ``classify_points_w``)."""
    result = classify_points_w(g, np.array([[p.x, p.y]]), mode, det_sign, obstacles)
    label = CellLabel(int(result.labels[0]))
    logger.debug("W (%g, %g) mode %d: %s", p.x, p.y, mode.index, label.name)
    return label


def classify_point_q(g: MechanismGeometry, q: JointVector, mode: WorkingMode, det_sign: int,
                     obstacles: Sequence[ObstaclePolygon] = ()) -> CellLabel:
    """Label one joint vector (see ``classify_points_q``)."""
    result = classify_points_q(g, np.array([[q.theta1, q.theta2]]), mode, det_sign, obstacles)
    return CellLabel(int(result.labels[0]))
