"""Whole-space maps: W, Q and their collision-free parts W_F, Q_F."""

import logging
from typing import Iterable, Optional

from mvkit.decomposition.labels import CellLabel, Space, TreeKind
from mvkit.decomposition.quadtree import (
    DEFAULT_ENRICHMENT_FACTOR,
    DEFAULT_SAMPLES_PER_CELL,
    Bounds,
    Quadtree,
    build_quadtree,
)
from mvkit.geometry import ObstaclePolygon
from mvkit.kinematics import MechanismGeometry

logger = logging.getLogger(__name__)


def _space_tree(g: MechanismGeometry, space: Space, kind: TreeKind, obstacles: Iterable[ObstaclePolygon],
                min_cell: Optional[float], bounds: Optional[Bounds], **build_options) -> Quadtree:
    return build_quadtree(g, space, bounds, None, None, obstacles, min_cell, kind=kind, **build_options)


def workspace(g: MechanismGeometry, min_cell: Optional[float] = None, bounds: Optional[Bounds] = None,
              samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
              enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR, workers: int = 1) -> Quadtree:
    """Reachable workspace W: poses where both legs reach P (FREE cells)."""
    return _space_tree(g, Space.W, TreeKind.REACH, (), min_cell, bounds, samples_per_cell=samples_per_cell,
                       enrichment_factor=enrichment_factor, workers=workers)


def jointspace(g: MechanismGeometry, min_cell: Optional[float] = None,
               samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
               enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR, workers: int = 1) -> Quadtree:
    """Joint vectors that admit at least one assembly (FREE cells)."""
    return _space_tree(g, Space.Q, TreeKind.REACH, (), min_cell, None, samples_per_cell=samples_per_cell,
                       enrichment_factor=enrichment_factor, workers=workers)


def free_workspace(g: MechanismGeometry, obstacles: Iterable[ObstaclePolygon] = (),
                   min_cell: Optional[float] = None, bounds: Optional[Bounds] = None,
                   samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
                   enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR, workers: int = 1) -> Quadtree:
    """
    Collision-free workspace W_F.

    A pose is FREE when at least one of the four inverse branches is free of
    internal and external collisions; singularities are ignored.
    """
    return _space_tree(g, Space.W, TreeKind.FREE, obstacles, min_cell, bounds, samples_per_cell=samples_per_cell,
                       enrichment_factor=enrichment_factor, workers=workers)


def free_jointspace(g: MechanismGeometry, obstacles: Iterable[ObstaclePolygon] = (),
                    min_cell: Optional[float] = None,
                    samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
                    enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR, workers: int = 1) -> Quadtree:
    """Collision-free joint space Q_F: some assembly branch is collision-free."""
    return _space_tree(g, Space.Q, TreeKind.FREE, obstacles, min_cell, None, samples_per_cell=samples_per_cell,
                       enrichment_factor=enrichment_factor, workers=workers)


def coverage_ratio(free: Quadtree, full: Quadtree) -> float:
    """
    Area of FREE cells in ``free`` over the area of FREE cells in ``full``.

    Both trees must share bounds and min_cell.
    """
    if free.bounds != full.bounds or free.min_cell != full.min_cell:
        raise ValueError("coverage_ratio needs trees over the same grid")
    full_mask = full.label_raster() == CellLabel.FREE
    total = int(full_mask.sum())
    if total == 0:
        return 0.0
    covered = int(((free.label_raster() == CellLabel.FREE) & full_mask).sum())
    ratio = covered / total
    logger.debug("coverage %.4f (%d / %d cells)", ratio, covered, total)
    return ratio
