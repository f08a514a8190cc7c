"""
Free aspects: connected components of FREE leaves, and their projections.

Components are found on the min-cell raster of a finished tree with
``scipy.ndimage.label`` (4-connectivity). Q trees live on a torus, so labels
that meet across the 0 / 2*pi seams are merged afterwards.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from mvkit.decomposition.labels import CellLabel, Space
from mvkit.decomposition.quadtree import Bounds, Q_BOUNDS, Quadtree, default_q_min_cell, default_w_bounds
from mvkit.kinematics import MechanismGeometry, WorkingMode, forward_branch_batch, inverse_branch_batch

logger = logging.getLogger(__name__)

DEFAULT_OVERSAMPLE = 3
# components smaller than this many min cells are below the grid resolution
DEFAULT_MIN_ASPECT_CELLS = 8

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, order=True)
class AspectId:
    """(working mode i, det sign j, serial index) of a free aspect; index starts at 1."""

    mode_index: int
    det_sign: int
    index: int

    @property
    def mode(self) -> Optional[WorkingMode]:
        return WorkingMode.from_index(self.mode_index) if self.mode_index else None

    def __str__(self) -> str:
        if not self.mode_index:
            return f"C{self.index}"
        sign = "+" if self.det_sign > 0 else "-"
        return f"A{self.mode_index}{sign}{self.index}"


@dataclass(eq=False)
class ProjectionGrid:
    """A cell set on a min-cell raster of W or Q, indexed [iy, ix]."""

    space: Space
    bounds: Bounds
    min_cell: float
    mask: np.ndarray

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    @property
    def area(self) -> float:
        return self.cell_count * self.min_cell ** 2

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def component_count(self) -> int:
        return _components(self.mask, self.space is Space.Q)[1]

    def centers(self) -> np.ndarray:
        """Centers of the cells in the set, shape (N, 2)."""
        iy, ix = np.nonzero(self.mask)
        return np.stack([self.bounds.x0 + (ix + 0.5) * self.min_cell,
                         self.bounds.y0 + (iy + 0.5) * self.min_cell], axis=1)


@dataclass(eq=False)
class FreeAspect:
    """
    One free aspect of a (mode, det sign) tree.

    Attributes:
        id: Aspect identity; serial indices follow descending area
        space: Space of the tree the aspect was extracted from
        cells: FREE leaf paths of the component
        area: Sum of the leaf areas
        mask: Component cells on the tree's min-cell raster
        w_projection, q_projection: Filled by ``project_aspect``; the
            projection into the tree's own space is the aspect itself
    """

    id: AspectId
    space: Space
    cells: FrozenSet[str]
    area: float
    mask: np.ndarray = field(repr=False)
    w_projection: Optional[ProjectionGrid] = None
    q_projection: Optional[ProjectionGrid] = None

    @property
    def grid(self) -> "ProjectionGrid":
        return self.w_projection if self.space is Space.W else self.q_projection

    def to_dict(self) -> dict:
        doc = {"id": str(self.id), "mode": self.id.mode_index or None, "det_sign": self.id.det_sign or None,
               "index": self.id.index, "space": self.space.value, "leaves": len(self.cells), "area": self.area}
        if self.q_projection is not None and self.space is Space.W:
            doc["q_projection_area"] = self.q_projection.area
        if self.w_projection is not None and self.space is Space.Q:
            doc["w_projection_area"] = self.w_projection.area
        return doc


def _components(mask: np.ndarray, periodic: bool) -> Tuple[np.ndarray, int]:
    labels, count = ndimage.label(mask, structure=_CROSS)
    if not periodic or count == 0:
        return labels, count
    # labels touching across the torus seams are one component
    seams = ((labels[:, 0], labels[:, -1]), (labels[0, :], labels[-1, :]))
    rows, cols = [], []
    for first, last in seams:
        both = (first > 0) & (last > 0)
        rows.append(first[both] - 1)
        cols.append(last[both] - 1)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(count, count))
    merged_count, merged = connected_components(graph, directed=False)
    lookup = np.concatenate([[0], merged + 1])
    return lookup[labels], merged_count


def component_raster(tree: Quadtree, min_area: float = 0.0) -> Tuple[np.ndarray, List[float]]:
    """
    FREE components of ``tree`` renumbered 1..K by descending area.

    Ties are broken by the first raster position (row-major) of each
    component. Components smaller than ``min_area`` are dropped (set to 0).

    Returns:
        tuple: (raster, areas) where ``areas[k - 1]`` is the area of component k
    """
    free = tree.label_raster() == CellLabel.FREE
    labels, count = _components(free, tree.periodic)
    if count == 0:
        return labels, []
    cell_area = tree.min_cell ** 2
    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:] * cell_area
    present, first = np.unique(labels.ravel(), return_index=True)
    first_seen = dict(zip(present.tolist(), first.tolist()))
    order = sorted(range(1, count + 1), key=lambda k: (-areas[k - 1], first_seen[k]))
    lookup = np.zeros(count + 1, dtype=np.int32)
    kept = []
    for rank, k in enumerate((k for k in order if areas[k - 1] >= min_area and areas[k - 1] > 0), start=1):
        lookup[k] = rank
        kept.append(float(areas[k - 1]))
    return lookup[labels], kept


def aspect_floor(tree: Quadtree, min_cells: int = DEFAULT_MIN_ASPECT_CELLS) -> float:
    """Smallest aspect area kept for ``tree``: ``min_cells`` min cells."""
    return min_cells * tree.min_cell ** 2


def extract_aspects(tree: Quadtree, min_area: float = 0.0) -> List[FreeAspect]:
    """
    Free aspects of a finished tree, largest first.

    Args:
        tree: A finished quadtree
        min_area: Components with a smaller area are discarded

    Returns:
        list[FreeAspect]: Edge-connected FREE components; toroidal in Q
    """
    raster, areas = component_raster(tree, min_area)
    if not areas:
        return []
    cells: Dict[int, set] = {k: set() for k in range(1, len(areas) + 1)}
    for path, label in tree.leaves.items():
        if label is not CellLabel.FREE:
            continue
        ix, iy, _ = tree.cell(path)
        component = int(raster[iy, ix])
        if component:
            cells[component].add(path)

    mode_index = tree.mode.index if tree.mode else 0
    det_sign = tree.det_sign or 0
    aspects = []
    for k, area in enumerate(areas, start=1):
        mask = raster == k
        aspect = FreeAspect(
            id=AspectId(mode_index, det_sign, k),
            space=tree.space,
            cells=frozenset(cells[k]),
            area=area,
            mask=mask,
        )
        own = ProjectionGrid(tree.space, tree.bounds, tree.min_cell, mask)
        if tree.space is Space.W:
            aspect.w_projection = own
        else:
            aspect.q_projection = own
        aspects.append(aspect)
    logger.debug("%d aspects in %s tree mode=%s sign=%s", len(aspects), tree.space.value, tree.mode, tree.det_sign)
    return aspects


# =============================================================================
# PROJECTION
# =============================================================================

def _oversampled_centers(grid: ProjectionGrid, oversample: int) -> np.ndarray:
    iy, ix = np.nonzero(grid.mask)
    if ix.size == 0:
        return np.empty((0, 2))
    offsets = (np.arange(oversample) + 0.5) / oversample
    ox, oy = np.meshgrid(offsets, offsets)
    fx = ix[:, None] + ox.ravel()[None, :]
    fy = iy[:, None] + oy.ravel()[None, :]
    return np.stack([grid.bounds.x0 + fx.ravel() * grid.min_cell,
                     grid.bounds.y0 + fy.ravel() * grid.min_cell], axis=1)


def _rasterize(points: np.ndarray, space: Space, bounds: Bounds, min_cell: float) -> np.ndarray:
    n = int(round(bounds.side / min_cell))
    mask = np.zeros((n, n), dtype=bool)
    if points.shape[0] == 0:
        return mask
    ix = np.floor((points[:, 0] - bounds.x0) / min_cell).astype(np.int64)
    iy = np.floor((points[:, 1] - bounds.y0) / min_cell).astype(np.int64)
    if space is Space.Q:
        ix %= n
        iy %= n
    else:
        inside = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
        ix, iy = ix[inside], iy[inside]
    mask[iy, ix] = True
    return mask


def project_grid(grid: ProjectionGrid, g: MechanismGeometry, mode: WorkingMode, det_sign: int,
                 target_bounds: Optional[Bounds] = None, target_min_cell: Optional[float] = None,
                 oversample: int = DEFAULT_OVERSAMPLE) -> ProjectionGrid:
    """
    Map a cell set into the partner space along one kinematic branch.

    W -> Q follows the inverse branch of ``mode``; Q -> W follows the assembly
    branch with sign(det A) = ``det_sign``. Every cell is sampled on an
    ``oversample`` x ``oversample`` grid and the images are rasterized.
    """
    if grid.space is Space.W:
        target_space = Space.Q
        target_bounds = target_bounds or Q_BOUNDS
        target_min_cell = target_min_cell or default_q_min_cell()
    else:
        target_space = Space.W
        if target_bounds is None:
            target_bounds, target_min_cell = default_w_bounds(g, target_min_cell)
        target_min_cell = target_min_cell or target_bounds.side / 256
    samples = _oversampled_centers(grid, oversample)
    if samples.shape[0] == 0:
        images = samples
    elif grid.space is Space.W:
        batch = inverse_branch_batch(g, samples, mode)
        images = batch.theta[batch.valid]
    else:
        batch, count = forward_branch_batch(g, samples, det_sign)
        images = batch.p[count == 2]
    mask = _rasterize(images, target_space, target_bounds, target_min_cell)
    return ProjectionGrid(target_space, target_bounds, target_min_cell, mask)


def project_aspect(aspect: FreeAspect, g: MechanismGeometry, target_bounds: Optional[Bounds] = None,
                   target_min_cell: Optional[float] = None, oversample: int = DEFAULT_OVERSAMPLE) -> FreeAspect:
    """
    Fill the partner-space projection of ``aspect``.

    Args:
        aspect: Aspect of a (mode, det sign) tree
        g: Geometry the tree was built for
        target_bounds, target_min_cell: Partner grid; defaults are [0, 2*pi)^2
            at 2*pi/256 for Q and the default reach square for W
        oversample: Samples per cell side

    Returns:
        FreeAspect: A copy with ``q_projection`` (W aspects) or
        ``w_projection`` (Q aspects) set
    """
    mode = aspect.id.mode
    if mode is None:
        raise ValueError(f"aspect {aspect.id} has no working mode to project along")
    own = aspect.grid
    projected = project_grid(own, g, mode, aspect.id.det_sign, target_bounds, target_min_cell, oversample)
    logger.debug("projected %s: %d -> %d cells", aspect.id, own.cell_count, projected.cell_count)
    if aspect.space is Space.W:
        return replace(aspect, q_projection=projected)
    return replace(aspect, w_projection=projected)


# =============================================================================
# LOOKUP
# =============================================================================

@dataclass(eq=False)
class AspectMap:
    """A finished tree with its aspects and component raster, for point queries."""

    tree: Quadtree
    aspects: List[FreeAspect]
    raster: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @classmethod
    def from_tree(cls, tree: Quadtree, min_area: float = 0.0) -> "AspectMap":
        """
        Aspects of ``tree`` plus lookup rasters.

        FREE cells of components dropped by ``min_area`` read as MIXED.
        """
        aspects = extract_aspects(tree, min_area)
        raster = np.zeros((tree.divisions, tree.divisions), dtype=np.int32)
        for aspect in aspects:
            raster[aspect.mask] = aspect.id.index
        labels = tree.label_raster()
        labels[(labels == CellLabel.FREE) & (raster == 0)] = CellLabel.MIXED
        return cls(tree=tree, aspects=aspects, raster=raster, labels=labels)

    def label_at(self, x: float, y: float) -> CellLabel:
        """Leaf label at (x, y); UNREACHABLE outside W bounds."""
        index = self.tree.grid_index(x, y)
        if index is None:
            return CellLabel.UNREACHABLE
        ix, iy = index
        return CellLabel(int(self.labels[iy, ix]))

    def aspect_at(self, x: float, y: float) -> Optional[FreeAspect]:
        index = self.tree.grid_index(x, y)
        if index is None:
            return None
        ix, iy = index
        k = int(self.raster[iy, ix])
        return self.aspects[k - 1] if k else None

    def count(self) -> int:
        return len(self.aspects)
