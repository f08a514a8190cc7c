"""
Trajectory feasibility and point-to-point moveability.

A Cartesian path is feasible for a (working mode, det sign) pair when every
sample along it is FREE and all samples fall in one free W-aspect. Changing
working mode mid-path is never allowed.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from mvkit.decomposition.aspects import DEFAULT_MIN_ASPECT_CELLS, AspectId, AspectMap, aspect_floor
from mvkit.decomposition.classifier import classify_points_w
from mvkit.decomposition.labels import CellLabel, Space
from mvkit.decomposition.quadtree import (
    DEFAULT_ENRICHMENT_FACTOR,
    DEFAULT_SAMPLES_PER_CELL,
    Bounds,
    Quadtree,
    build_quadtree,
)
from mvkit.errors import ConfigError
from mvkit.geometry import ObstaclePolygon, Point2
from mvkit.kinematics import MechanismGeometry, WorkingMode

logger = logging.getLogger(__name__)

BLOCKER_REFINEMENT = 8
DET_SIGNS = (1, -1)

TreeSource = Callable[[WorkingMode, int], Quadtree]


@dataclass(frozen=True)
class NotFree:
    """A point outside every free aspect, with the label of its leaf."""

    label: CellLabel

    def __str__(self) -> str:
        return f"NOT-FREE ({self.label.name})"


Location = Union[AspectId, NotFree]


@dataclass(frozen=True)
class Trajectory:
    """
    Polyline in W.

    ``sampling_step`` None means half the min cell of the tree it is checked
    against.
    """

    waypoints: Tuple[Point2, ...]
    sampling_step: Optional[float] = None

    def __post_init__(self):
        points = tuple(self.waypoints)
        if len(points) < 2:
            raise ConfigError("BAD-TRAJECTORY", "a trajectory needs at least 2 waypoints", "waypoints")
        for k in range(1, len(points)):
            if points[k] == points[k - 1]:
                raise ConfigError("BAD-TRAJECTORY", f"waypoints {k - 1} and {k} coincide", f"waypoints.{k}")
        if self.sampling_step is not None and not (math.isfinite(self.sampling_step) and self.sampling_step > 0):
            raise ConfigError("BAD-TRAJECTORY", f"step must be > 0, got {self.sampling_step}", "step")
        object.__setattr__(self, "waypoints", points)

    @classmethod
    def of(cls, waypoints: Iterable[Sequence[float]], step: Optional[float] = None) -> "Trajectory":
        return cls(tuple(Point2.of(w) for w in waypoints), step)

    @property
    def length(self) -> float:
        return sum(a.distance_to(b) for a, b in zip(self.waypoints, self.waypoints[1:]))

    def reversed(self) -> "Trajectory":
        return Trajectory(tuple(reversed(self.waypoints)), self.sampling_step)

    def samples(self, step: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Sample the polyline at spacing <= ``step``.

        Each segment gets a power-of-two number of intervals, so halving the
        step only adds samples.

        Returns:
            tuple: (arc-length positions (N,), points (N, 2))
        """
        positions, points = [np.zeros(1)], [self.waypoints[0].as_array()[None, :]]
        travelled = 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            length = a.distance_to(b)
            intervals = 2 ** max(0, math.ceil(math.log2(length / step))) if length > step else 1
            t = np.arange(1, intervals + 1) / intervals
            points.append(a.as_array()[None, :] + t[:, None] * (b.as_array() - a.as_array())[None, :])
            positions.append(travelled + t * length)
            travelled += length
        return np.concatenate(positions), np.concatenate(points)


@dataclass(frozen=True)
class Blocker:
    """First point where the path leaves its aspect."""

    position: float
    reason: CellLabel
    point: Point2

    def to_dict(self) -> dict:
        return {"position": self.position, "reason": self.reason.name, "point": [self.point.x, self.point.y]}


@dataclass(frozen=True)
class FeasibilityVerdict:
    """
    Outcome of ``check_path``.

    ``aspect_id`` is set iff the path is feasible; ``start_aspect`` and
    ``goal_aspect`` locate the two ends either way.
    """

    feasible: bool
    mode: Optional[WorkingMode]
    det_sign: Optional[int]
    aspect_id: Optional[AspectId] = None
    first_blocker: Optional[Blocker] = None
    start_aspect: Optional[Location] = None
    goal_aspect: Optional[Location] = None
    samples: int = 0

    def __post_init__(self):
        if self.feasible and (self.first_blocker is not None or self.aspect_id is None):
            raise ValueError("a feasible verdict has an aspect and no blocker")

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "mode": self.mode.index if self.mode else None,
            "det_sign": self.det_sign,
            "aspect": str(self.aspect_id) if self.aspect_id else None,
            "first_blocker": self.first_blocker.to_dict() if self.first_blocker else None,
            "start_aspect": str(self.start_aspect) if self.start_aspect is not None else None,
            "goal_aspect": str(self.goal_aspect) if self.goal_aspect is not None else None,
            "samples": self.samples,
        }


class MoveabilityAnalyzer:
    """
    Answers aspect queries for one geometry and obstacle set.

    W-trees are built on first use per (mode, det sign) and kept; pass
    ``tree_source`` to supply them another way (the CLI reads them from its
    cache). Components under ``min_aspect_cells`` min cells are not aspects.
    """

    def __init__(self, g: MechanismGeometry, obstacles: Iterable[ObstaclePolygon] = (),
                 min_cell: Optional[float] = None, bounds: Optional[Bounds] = None,
                 samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
                 enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR,
                 tree_source: Optional[TreeSource] = None,
                 min_aspect_cells: int = DEFAULT_MIN_ASPECT_CELLS):
        self.geometry = g
        self.obstacles = tuple(obstacles)
        self.min_cell = min_cell
        self.bounds = bounds
        self.samples_per_cell = samples_per_cell
        self.enrichment_factor = enrichment_factor
        self.tree_source = tree_source
        self.min_aspect_cells = min_aspect_cells
        self._maps: Dict[Tuple[WorkingMode, int], AspectMap] = {}

    def _build(self, mode: WorkingMode, det_sign: int) -> Quadtree:
        return build_quadtree(self.geometry, Space.W, self.bounds, mode, det_sign, self.obstacles,
                              self.min_cell, self.samples_per_cell, self.enrichment_factor)

    def aspect_map(self, mode: WorkingMode, det_sign: int) -> AspectMap:
        key = (mode, det_sign)
        if key not in self._maps:
            tree = (self.tree_source or self._build)(mode, det_sign)
            self._maps[key] = AspectMap.from_tree(tree, aspect_floor(tree, self.min_aspect_cells))
        return self._maps[key]

    def locate(self, p: Point2, mode: WorkingMode, det_sign: int) -> Location:
        """Aspect containing the leaf of ``p``, else NotFree with the leaf label."""
        amap = self.aspect_map(mode, det_sign)
        aspect = amap.aspect_at(p.x, p.y)
        if aspect is not None:
            return aspect.id
        return NotFree(amap.label_at(p.x, p.y))

    def _aspect_change_blocker(self, amap: AspectMap, start: np.ndarray, end: np.ndarray,
                               s0: float, s1: float) -> Blocker:
        step = amap.tree.min_cell / BLOCKER_REFINEMENT
        length = float(np.hypot(*(end - start)))
        count = max(1, math.ceil(length / step))
        for k in range(1, count + 1):
            t = k / count
            x, y = start + t * (end - start)
            label = amap.label_at(x, y)
            if label is not CellLabel.FREE:
                return Blocker(s0 + t * (s1 - s0), label, Point2(float(x), float(y)))
        # aspects meeting only at a corner
        return Blocker(s1, CellLabel.MIXED, Point2(float(end[0]), float(end[1])))

    def check_path(self, t: Trajectory, mode: WorkingMode, det_sign: int) -> FeasibilityVerdict:
        """
        Decide whether ``t`` stays inside one free aspect of (mode, det_sign).

        Samples that are FREE pointwise but sit in a non-FREE (conservative)
        leaf block with that leaf's label.
        """
        amap = self.aspect_map(mode, det_sign)
        step = t.sampling_step or amap.tree.min_cell / 2.0
        positions, points = t.samples(step)
        labels = classify_points_w(self.geometry, points, mode, det_sign, self.obstacles).labels
        start = self.locate(t.waypoints[0], mode, det_sign)
        goal = self.locate(t.waypoints[-1], mode, det_sign)

        def verdict(blocker: Optional[Blocker], aspect: Optional[AspectId] = None) -> FeasibilityVerdict:
            return FeasibilityVerdict(feasible=blocker is None, mode=mode, det_sign=det_sign,
                                      aspect_id=aspect if blocker is None else None, first_blocker=blocker,
                                      start_aspect=start, goal_aspect=goal, samples=len(positions))

        current: Optional[AspectId] = None
        for k, (s, (x, y)) in enumerate(zip(positions, points)):
            point = Point2(float(x), float(y))
            if labels[k] != CellLabel.FREE:
                return verdict(Blocker(float(s), CellLabel(int(labels[k])), point))
            aspect = amap.aspect_at(x, y)
            if aspect is None:
                return verdict(Blocker(float(s), amap.label_at(x, y), point))
            if current is None:
                current = aspect.id
            elif aspect.id != current:
                blocker = self._aspect_change_blocker(amap, points[k - 1], points[k],
                                                      float(positions[k - 1]), float(s))
                return verdict(blocker)
        logger.debug("path of %d samples feasible in %s", len(positions), current)
        return verdict(None, current)

    def moveability(self, start: Point2, goal: Point2) -> List[Tuple[WorkingMode, int, AspectId]]:
        """Every (mode, det sign, aspect) whose aspect holds both ``start`` and ``goal``."""
        shared = []
        for mode in WorkingMode:
            for det_sign in DET_SIGNS:
                here = self.locate(start, mode, det_sign)
                there = self.locate(goal, mode, det_sign)
                if isinstance(here, AspectId) and here == there:
                    shared.append((mode, det_sign, here))
        return shared


@lru_cache(maxsize=8)
def _default_analyzer(g: MechanismGeometry, obstacles: Tuple[ObstaclePolygon, ...],
                      min_cell: Optional[float]) -> MoveabilityAnalyzer:
    return MoveabilityAnalyzer(g, obstacles, min_cell)


def locate(g: MechanismGeometry, p: Point2, mode: WorkingMode, det_sign: int,
           obstacles: Iterable[ObstaclePolygon] = (), min_cell: Optional[float] = None) -> Location:
    return _default_analyzer(g, tuple(obstacles), min_cell).locate(p, mode, det_sign)


def check_path(g: MechanismGeometry, t: Trajectory, mode: WorkingMode, det_sign: int,
               obstacles: Iterable[ObstaclePolygon] = (), min_cell: Optional[float] = None) -> FeasibilityVerdict:
    return _default_analyzer(g, tuple(obstacles), min_cell).check_path(t, mode, det_sign)


def moveability(g: MechanismGeometry, start: Point2, goal: Point2, obstacles: Iterable[ObstaclePolygon] = (),
                min_cell: Optional[float] = None) -> List[Tuple[WorkingMode, int, AspectId]]:
    return _default_analyzer(g, tuple(obstacles), min_cell).moveability(start, goal)
