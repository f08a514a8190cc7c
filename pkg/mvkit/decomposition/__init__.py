"""Quadtree decomposition of W and Q into free aspects."""

from mvkit.decomposition.aspects import (
    AspectId,
    AspectMap,
    FreeAspect,
    ProjectionGrid,
    extract_aspects,
    project_aspect,
    project_grid,
)
from mvkit.decomposition.classifier import PointClassifier, classify_point_q, classify_point_w
from mvkit.decomposition.labels import CellLabel, Space, TreeKind
from mvkit.decomposition.quadtree import Bounds, Q_BOUNDS, Quadtree, build_quadtree, default_w_bounds
from mvkit.decomposition.spaces import coverage_ratio, free_jointspace, free_workspace, jointspace, workspace

__all__ = [
    "AspectId",
    "AspectMap",
    "Bounds",
    "CellLabel",
    "FreeAspect",
    "PointClassifier",
    "ProjectionGrid",
    "Q_BOUNDS",
    "Quadtree",
    "Space",
    "TreeKind",
    "build_quadtree",
    "classify_point_q",
    "classify_point_w",
    "coverage_ratio",
    "default_w_bounds",
    "extract_aspects",
    "free_jointspace",
    "free_workspace",
    "jointspace",
    "project_aspect",
    "project_grid",
    "workspace",
]
