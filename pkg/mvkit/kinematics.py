"""
Kinematics of the planar five-bar RR-RRR manipulator.

Leg i (i = 1, 2) is a proximal link of length L_i hinged at the base anchor a_i
and actuated by theta_i, followed by a distal link of length L_{i+2} ending at
the platform revolute P. Closure: |P - b_i(q)| = L_{i+2}.

Velocity model: A t + B q_dot = 0 with
    A row i = (P - b_i)^T
    B_ii    = L_i * [(P - b_i)_x sin(theta_i) - (P - b_i)_y cos(theta_i)]

The sign pattern of (B11, B22) is the working mode; the sign of det(A) tells
the two assembly (forward) branches apart.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from mvkit.errors import ConfigError, ParallelSingularError
from mvkit.geometry import (
    DEFAULT_TOL,
    Degeneracy,
    Point2,
    circle_circle_intersection,
    circle_circle_intersection_batch,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
CLOSURE_TOL = 1e-7
ANCHOR_TOL = 1e-9
THRESHOLD_FACTOR = 1e-8


# =============================================================================
# DOMAIN TYPES
# =============================================================================

@dataclass(frozen=True)
class MechanismGeometry:
    """
    Dimensions and body thicknesses of the five-bar.

    Attributes:
        L0: Base length |a2 - a1|
        L1, L2: Proximal (actuated) link lengths of legs 1 and 2
        L3, L4: Distal link lengths of legs 1 and 2
        a1, a2: Base anchors; default frame puts a1 at the origin and a2 on +x
        link_radius, base_radius, platform_radius: Capsule radii of the bodies
        joint_clearance: Length trimmed off joint-adjacent bodies at their
            shared joint before testing them against each other
    """

    L0: float
    L1: float
    L2: float
    L3: float
    L4: float
    a1: Point2 = Point2(0.0, 0.0)
    a2: Optional[Point2] = None
    link_radius: float = 0.1
    base_radius: float = 0.1
    platform_radius: float = 0.1
    joint_clearance: float = 2.5

    def __post_init__(self):
        for name in ("L0", "L1", "L2", "L3", "L4"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError("BAD-LENGTH", f"{name} must be a positive length, got {value}", f"geometry.{name}")
        for name in ("link_radius", "base_radius", "platform_radius", "joint_clearance"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError("BAD-LENGTH", f"{name} must be >= 0, got {value}", f"geometry.{name}")
        if self.a2 is None:
            object.__setattr__(self, "a2", Point2(self.a1.x + self.L0, self.a1.y))
        if abs(self.a1.distance_to(self.a2) - self.L0) > ANCHOR_TOL:
            raise ConfigError(
                "GEOMETRY-INCONSISTENT",
                f"|a2 - a1| = {self.a1.distance_to(self.a2):.9g} does not match L0 = {self.L0}",
                "geometry.a2",
            )

    @classmethod
    def reference(cls, **overrides) -> "MechanismGeometry":
        """The reference dimensions L0=8, L1=L2=7, L3=L4=5."""
        params = dict(L0=8.0, L1=7.0, L2=7.0, L3=5.0, L4=5.0)
        params.update(overrides)
        return cls(**params)

    @property
    def scale(self) -> float:
        return max(self.L0, self.L1, self.L2, self.L3, self.L4)

    @property
    def eps_a(self) -> float:
        return THRESHOLD_FACTOR * self.scale ** 2

    @property
    def eps_b(self) -> float:
        return THRESHOLD_FACTOR * self.scale ** 2

    def anchor(self, leg: int) -> Point2:
        return self.a1 if leg == 1 else self.a2

    def proximal(self, leg: int) -> float:
        return self.L1 if leg == 1 else self.L2

    def distal(self, leg: int) -> float:
        return self.L3 if leg == 1 else self.L4

    def reach(self, leg: int) -> Tuple[float, float]:
        """Inner and outer radius of the annulus leg ``leg`` can place P in."""
        lp, ld = self.proximal(leg), self.distal(leg)
        return abs(lp - ld), lp + ld

    def anchors_array(self) -> np.ndarray:
        return np.array([[self.a1.x, self.a1.y], [self.a2.x, self.a2.y]], dtype=float)


@dataclass(frozen=True)
class JointVector:
    """Actuated joint angles, normalized to [0, 2*pi)."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", normalize_angle(self.theta1))
        object.__setattr__(self, "theta2", normalize_angle(self.theta2))

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2], dtype=float)

    def angle(self, leg: int) -> float:
        return self.theta1 if leg == 1 else self.theta2

    def distance_to(self, other: "JointVector") -> float:
        """Largest per-joint angular difference, measured around the circle."""
        return max(angular_distance(self.theta1, other.theta1), angular_distance(self.theta2, other.theta2))


@dataclass(frozen=True)
class PoseVector:
    """Platform pose: position of the revolute center P."""

    p: Point2


class WorkingMode(Enum):
    """Sign pattern (sign B11, sign B22), enumerated Mf_1..Mf_4."""

    MF1 = (1, 1)
    MF2 = (1, -1)
    MF3 = (-1, 1)
    MF4 = (-1, -1)

    @property
    def s1(self) -> int:
        return self.value[0]

    @property
    def s2(self) -> int:
        return self.value[1]

    @property
    def index(self) -> int:
        return list(WorkingMode).index(self) + 1

    def sign(self, leg: int) -> int:
        return self.s1 if leg == 1 else self.s2

    @property
    def mirrored(self) -> "WorkingMode":
        """Mode of the configuration reflected across the base axis."""
        return WorkingMode.from_signs(-self.s1, -self.s2)

    @classmethod
    def from_index(cls, index: int) -> "WorkingMode":
        modes = list(cls)
        if not 1 <= index <= len(modes):
            raise ValueError(f"working mode index must be 1..4, got {index}")
        return modes[index - 1]

    @classmethod
    def from_signs(cls, s1: int, s2: int) -> "WorkingMode":
        return cls((int(s1), int(s2)))

    def __str__(self) -> str:
        def sym(s):
            return "+" if s > 0 else "-"
        return f"Mf{self.index}({sym(self.s1)},{sym(self.s2)})"


class Singularity(Enum):
    SERIAL = "SERIAL-SINGULAR"
    PARALLEL = "PARALLEL-SINGULAR"


@dataclass(frozen=True)
class MechanismConfiguration:
    """
    A mechanism configuration (X, q) with its passive elbow points.

    Use ``MechanismConfiguration.build`` to derive the elbows and check closure.
    """

    x: PoseVector
    q: JointVector
    b1: Point2
    b2: Point2

    @classmethod
    def build(cls, g: MechanismGeometry, x: PoseVector, q: JointVector) -> "MechanismConfiguration":
        b1, b2 = elbow_points(g, q)
        residual = max(
            abs(b1.distance_to(g.a1) - g.L1),
            abs(b2.distance_to(g.a2) - g.L2),
            abs(x.p.distance_to(b1) - g.L3),
            abs(x.p.distance_to(b2) - g.L4),
        )
        if residual > CLOSURE_TOL:
            raise ValueError(f"(X, q) does not close the loop: residual {residual:.3e}")
        return cls(x=x, q=q, b1=b1, b2=b2)

    def elbow(self, leg: int) -> Point2:
        return self.b1 if leg == 1 else self.b2


@dataclass(frozen=True, eq=False)
class JacobianPair:
    """
    Jacobians of the velocity model A t + B q_dot = 0.

    ``eps_a``/``eps_b`` are the singularity thresholds of the geometry that
    produced the matrices.
    """

    A: np.ndarray
    B: np.ndarray
    eps_a: float = THRESHOLD_FACTOR * 64.0
    eps_b: float = THRESHOLD_FACTOR * 64.0

    @property
    def detA(self) -> float:
        return float(self.A[0, 0] * self.A[1, 1] - self.A[0, 1] * self.A[1, 0])

    @property
    def detB(self) -> float:
        return float(self.B[0, 0] * self.B[1, 1])


@dataclass(frozen=True)
class ForwardSolution:
    """One assembly branch: the pose and sign(det A) there (0 at tangency)."""

    pose: PoseVector
    det_sign: int


@dataclass(frozen=True)
class InverseSolution:
    """
    One inverse branch.

    ``mode`` is None when ``serial_singular`` is set: a leg is fully stretched
    or folded, and its B_ii vanishes.
    """

    q: JointVector
    mode: Optional[WorkingMode]
    serial_singular: bool = False


ForwardResult = Union[Tuple[ForwardSolution, ...], Degeneracy]


# =============================================================================
# ANGLE HELPERS
# =============================================================================

def normalize_angle(theta: float) -> float:
    value = math.fmod(theta, TWO_PI)
    if value < 0:
        value += TWO_PI
    # fmod can land exactly on 2*pi after the shift
    return 0.0 if value >= TWO_PI else value


def angular_distance(a: float, b: float) -> float:
    diff = abs(normalize_angle(a) - normalize_angle(b))
    return min(diff, TWO_PI - diff)


def _sign(value: float) -> int:
    return 1 if value > 0 else (-1 if value < 0 else 0)


# =============================================================================
# OPERATIONS
# =============================================================================

def elbow_points(g: MechanismGeometry, q: JointVector) -> Tuple[Point2, Point2]:
    """Passive elbows b_i = a_i + L_i (cos theta_i, sin theta_i)."""
    b1 = Point2(g.a1.x + g.L1 * math.cos(q.theta1), g.a1.y + g.L1 * math.sin(q.theta1))
    b2 = Point2(g.a2.x + g.L2 * math.cos(q.theta2), g.a2.y + g.L2 * math.sin(q.theta2))
    return b1, b2


def closure_residual(g: MechanismGeometry, x: PoseVector, q: JointVector) -> np.ndarray:
    """
    Evaluate F(X, q).

    Returns:
        np.ndarray: (|p - b1|^2 - L3^2, |p - b2|^2 - L4^2); zero iff (X, q)
        is a valid mechanism configuration
    """
    b1, b2 = elbow_points(g, q)
    p = x.p
    return np.array([
        (p.x - b1.x) ** 2 + (p.y - b1.y) ** 2 - g.L3 ** 2,
        (p.x - b2.x) ** 2 + (p.y - b2.y) ** 2 - g.L4 ** 2,
    ])


def _det_a(p: Point2, b1: Point2, b2: Point2) -> float:
    return (p.x - b1.x) * (p.y - b2.y) - (p.y - b1.y) * (p.x - b2.x)


def _b_entry(length: float, p: Point2, b: Point2, theta: float) -> float:
    return length * ((p.x - b.x) * math.sin(theta) - (p.y - b.y) * math.cos(theta))


def forward_kinematics(g: MechanismGeometry, q: JointVector, tol: float = DEFAULT_TOL) -> ForwardResult:
    """
    Solve the direct problem for the joint vector ``q``.

    Returns:
        Up to two poses tagged with sign(det A), the left-of-(b1 -> b2)
        branch first, or ``Degeneracy.CONCENTRIC`` when b1 = b2 and L3 = L4.
    """
    b1, b2 = elbow_points(g, q)
    hits = circle_circle_intersection(b1, g.L3, b2, g.L4, tol)
    if hits is Degeneracy.CONCENTRIC:
        return Degeneracy.CONCENTRIC
    if len(hits) == 1:
        return (ForwardSolution(PoseVector(hits[0]), 0),)
    return tuple(ForwardSolution(PoseVector(p), _sign(_det_a(p, b1, b2))) for p in hits)


def inverse_kinematics(g: MechanismGeometry, x: PoseVector, tol: float = DEFAULT_TOL) -> Tuple[InverseSolution, ...]:
    """
    Solve the inverse problem for the pose ``x``.

    Each leg contributes the elbows where circle (a_i, L_i) meets circle
    (p, L_{i+2}); the joint vectors are all leg combinations. A leg at its
    annulus boundary has a single elbow and marks its solutions serial
    singular. An unreachable leg empties the result.

    Returns:
        tuple[InverseSolution, ...]: Up to four solutions
    """
    p = x.p
    per_leg = []
    boundary = False
    for leg in (1, 2):
        anchor = g.anchor(leg)
        hits = circle_circle_intersection(anchor, g.proximal(leg), p, g.distal(leg), tol)
        if hits is Degeneracy.CONCENTRIC or not hits:
            if hits is Degeneracy.CONCENTRIC:
                logger.debug("leg %d degenerate at p=(%g, %g): P on its anchor", leg, p.x, p.y)
            return ()
        boundary = boundary or len(hits) == 1
        per_leg.append([math.atan2(b.y - anchor.y, b.x - anchor.x) for b in hits])

    solutions = []
    for theta1 in per_leg[0]:
        for theta2 in per_leg[1]:
            q = JointVector(theta1, theta2)
            config = MechanismConfiguration.build(g, x, q)
            mode = working_mode_of(config, jacobians(g, config))
            if boundary or mode is Singularity.SERIAL:
                solutions.append(InverseSolution(q, None, True))
            else:
                solutions.append(InverseSolution(q, mode, False))
    return tuple(solutions)


def jacobians(g: MechanismGeometry, c: MechanismConfiguration) -> JacobianPair:
    """Build A (rows (p - b_i)^T) and the diagonal B at configuration ``c``."""
    p = c.x.p
    A = np.array([[p.x - c.b1.x, p.y - c.b1.y],
                  [p.x - c.b2.x, p.y - c.b2.y]])
    B = np.zeros((2, 2))
    B[0, 0] = _b_entry(g.L1, p, c.b1, c.q.theta1)
    B[1, 1] = _b_entry(g.L2, p, c.b2, c.q.theta2)
    return JacobianPair(A=A, B=B, eps_a=g.eps_a, eps_b=g.eps_b)


def working_mode_of(c: Optional[MechanismConfiguration], jp: JacobianPair) -> Union[WorkingMode, Singularity]:
    """Read the working mode off sign(B11), sign(B22); SERIAL when either vanishes."""
    b11, b22 = jp.B[0, 0], jp.B[1, 1]
    if abs(b11) <= jp.eps_b or abs(b22) <= jp.eps_b:
        return Singularity.SERIAL
    return WorkingMode.from_signs(_sign(b11), _sign(b22))


def velocity_transfer(jp: JacobianPair, qdot: Sequence[float]) -> np.ndarray:
    """
    Cartesian velocity t = -A^-1 B q_dot.

    Raises:
        ParallelSingularError: If |det A| <= eps_a
    """
    if abs(jp.detA) <= jp.eps_a:
        raise ParallelSingularError(f"det(A) = {jp.detA:.3e} is below {jp.eps_a:.3e}")
    return -np.linalg.solve(jp.A, jp.B @ np.asarray(qdot, dtype=float))


# =============================================================================
# BATCH BRANCHES (used by the cell classifiers)
# =============================================================================

@dataclass
class BranchBatch:
    """
    Configurations of N points along one kinematic branch.

    ``valid`` marks rows where the branch exists; other rows hold NaN.
    """

    p: np.ndarray
    theta: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    valid: np.ndarray
    b11: np.ndarray = field(default=None)
    b22: np.ndarray = field(default=None)
    det_a: np.ndarray = field(default=None)


def _finish_branch(g: MechanismGeometry, batch: BranchBatch) -> BranchBatch:
    p, b1, b2, theta = batch.p, batch.b1, batch.b2, batch.theta
    d1 = p - b1
    d2 = p - b2
    batch.b11 = g.L1 * (d1[:, 0] * np.sin(theta[:, 0]) - d1[:, 1] * np.cos(theta[:, 0]))
    batch.b22 = g.L2 * (d2[:, 0] * np.sin(theta[:, 1]) - d2[:, 1] * np.cos(theta[:, 1]))
    batch.det_a = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return batch


def inverse_branch_batch(g: MechanismGeometry, points: np.ndarray, mode: WorkingMode,
                         tol: float = DEFAULT_TOL) -> BranchBatch:
    """
    Follow the inverse branch of ``mode`` at every point.

    theta_i = phi_i + s_i * alpha_i where phi_i is the direction from a_i to P
    and alpha_i the elbow angle; this choice makes sign(B_ii) = s_i.
    """
    points = np.asarray(points, dtype=float)
    anchors = g.anchors_array()
    thetas, elbows = [], []
    valid = np.ones(points.shape[0], dtype=bool)
    for leg in (1, 2):
        anchor = anchors[leg - 1]
        lp, ld = g.proximal(leg), g.distal(leg)
        delta = points - anchor
        d = np.hypot(delta[:, 0], delta[:, 1])
        inner, outer = g.reach(leg)
        reachable = (d > tol) & (d >= inner - tol) & (d <= outer + tol)
        safe_d = np.where(d > tol, d, 1.0)
        cos_alpha = np.clip((safe_d ** 2 + lp ** 2 - ld ** 2) / (2.0 * safe_d * lp), -1.0, 1.0)
        alpha = np.arccos(cos_alpha)
        phi = np.arctan2(delta[:, 1], delta[:, 0])
        theta = np.mod(phi + mode.sign(leg) * alpha, 2.0 * np.pi)
        elbow = anchor + lp * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        valid &= reachable
        thetas.append(theta)
        elbows.append(elbow)
    theta = np.stack(thetas, axis=1)
    batch = BranchBatch(p=points.copy(), theta=theta, b1=elbows[0], b2=elbows[1], valid=valid)
    _finish_branch(g, batch)
    for arr in (batch.theta, batch.b1, batch.b2):
        arr[~valid] = np.nan
    for arr in (batch.b11, batch.b22, batch.det_a):
        arr[~valid] = np.nan
    return batch


def forward_branch_batch(g: MechanismGeometry, joints: np.ndarray, det_sign: int,
                         tol: float = DEFAULT_TOL) -> Tuple[BranchBatch, np.ndarray]:
    """
    Follow the assembly branch with sign(det A) = ``det_sign`` at every q.

    Returns:
        tuple: (branch, count) where ``count`` is the number of assembly
        solutions per row (-1 for the concentric continuum). Tangent rows
        (count 1) are kept valid with det A ~ 0.
    """
    joints = np.asarray(joints, dtype=float)
    anchors = g.anchors_array()
    b1 = anchors[0] + g.L1 * np.stack([np.cos(joints[:, 0]), np.sin(joints[:, 0])], axis=1)
    b2 = anchors[1] + g.L2 * np.stack([np.cos(joints[:, 1]), np.sin(joints[:, 1])], axis=1)
    left, right, count = circle_circle_intersection_batch(b1, g.L3, b2, g.L4, tol)
    # left of b1 -> b2 has det A > 0
    p = left if det_sign > 0 else right
    valid = count > 0
    batch = BranchBatch(p=p, theta=np.mod(joints, 2.0 * np.pi), b1=b1, b2=b2, valid=valid)
    _finish_branch(g, batch)
    for arr in (batch.b11, batch.b22, batch.det_a):
        arr[~valid] = np.nan
    return batch, count
