"""
Adaptive quadtree decomposition of the workspace W or the joint space Q.

Cells are addressed by paths of quadrant digits (0 lower-left, 1 lower-right,
2 upper-left, 3 upper-right); the root is the empty path. A finished tree only
stores its leaves; internal nodes are the proper prefixes of leaf paths.

Cells are classified a whole level at a time: every pending cell contributes
its samples to one vectorized classifier call. Cells whose samples agree
become leaves once they are at most UNIFORM_LEAF_LEVELS levels above
``min_cell``; coarser cells and disagreeing cells split. At ``min_cell`` a
disagreeing cell becomes a conservative (never FREE) leaf. An enrichment pass
then re-samples FREE leaves that touch non-FREE ones more densely.
"""

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from mvkit.decomposition.classifier import PointClassifier
from mvkit.decomposition.labels import CellLabel, Space, TreeKind
from mvkit.errors import BoundsError, ConfigError
from mvkit.geometry import ObstaclePolygon
from mvkit.kinematics import TWO_PI, MechanismGeometry, WorkingMode

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES_PER_CELL = 9
DEFAULT_ENRICHMENT_FACTOR = 4
DEFAULT_DIVISIONS = 256
PARALLEL_MIN_POINTS = 20000
# uniform cells above this many levels over min_cell keep splitting
UNIFORM_LEAF_LEVELS = 3

# 4-neighborhood
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned square [x0, x0 + side) x [y0, y0 + side)."""

    x0: float
    y0: float
    side: float

    @classmethod
    def from_extent(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "Bounds":
        width, height = xmax - xmin, ymax - ymin
        if width <= 0 or not math.isclose(width, height, rel_tol=1e-12, abs_tol=1e-12):
            raise BoundsError(f"bounds must be a square, got {width:g} x {height:g}")
        return cls(xmin, ymin, width)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x0 + self.side and self.y0 <= y <= self.y0 + self.side

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "side": self.side}


Q_BOUNDS = Bounds(0.0, 0.0, TWO_PI)


def default_w_bounds(g: MechanismGeometry, min_cell: Optional[float] = None) -> Tuple[Bounds, float]:
    """
    Square covering both reach annuli with one unit of margin.

    Centered on the base midpoint; the side is rounded up to a power-of-two
    multiple of ``min_cell`` (which defaults to side / 256).

    Returns:
        tuple: (bounds, min_cell)
    """
    half = max(g.L1 + g.L3, g.L2 + g.L4) + 1.0
    side = 2.0 * half
    if min_cell is None:
        min_cell = side / DEFAULT_DIVISIONS
    divisions = 2 ** max(0, math.ceil(math.log2(side / min_cell - 1e-9)))
    side = divisions * min_cell
    cx, cy = 0.5 * (g.a1.x + g.a2.x), 0.5 * (g.a1.y + g.a2.y)
    return Bounds(cx - 0.5 * side, cy - 0.5 * side, side), min_cell


def default_q_min_cell(divisions: int = DEFAULT_DIVISIONS) -> float:
    return TWO_PI / divisions


def tiling_depth(bounds: Bounds, min_cell: float) -> int:
    """Depth at which cells reach ``min_cell``; rejects non power-of-two tilings."""
    if min_cell <= 0:
        raise BoundsError(f"min_cell must be positive, got {min_cell}")
    ratio = bounds.side / min_cell
    depth = int(round(math.log2(ratio))) if ratio >= 1 else -1
    if depth < 0 or not math.isclose(2 ** depth, ratio, rel_tol=1e-9):
        raise BoundsError(f"bounds side {bounds.side:g} is not a power-of-two multiple of min_cell {min_cell:g}")
    return depth


def path_to_cell(path: str, depth: int) -> Tuple[int, int, int]:
    """Grid origin (ix, iy) and size, in min cells, of the cell at ``path``."""
    size = 2 ** depth
    ix = iy = 0
    for digit in path:
        size //= 2
        d = int(digit)
        ix += size * (d & 1)
        iy += size * (d >> 1)
    return ix, iy, size


@dataclass
class Quadtree:
    """
    A finished decomposition.

    Attributes:
        space: W or Q
        bounds: Square domain
        min_cell: Smallest cell side
        mode, det_sign: Working mode and det(A) sign of an ASPECTS tree
        kind: What FREE means for this tree
        leaves: Leaf path -> label
        conservative: Leaves labeled by min-size relabeling or enrichment
    """

    space: Space
    bounds: Bounds
    min_cell: float
    mode: Optional[WorkingMode] = None
    det_sign: Optional[int] = None
    kind: TreeKind = TreeKind.ASPECTS
    leaves: Dict[str, CellLabel] = field(default_factory=dict)
    conservative: FrozenSet[str] = frozenset()

    @property
    def depth(self) -> int:
        return tiling_depth(self.bounds, self.min_cell)

    @property
    def divisions(self) -> int:
        return 2 ** self.depth

    @property
    def periodic(self) -> bool:
        return self.space is Space.Q

    def cell(self, path: str) -> Tuple[int, int, int]:
        return path_to_cell(path, self.depth)

    def cell_center(self, path: str) -> Tuple[float, float]:
        ix, iy, size = self.cell(path)
        return (self.bounds.x0 + (ix + 0.5 * size) * self.min_cell,
                self.bounds.y0 + (iy + 0.5 * size) * self.min_cell)

    def cell_area(self, path: str) -> float:
        _, _, size = self.cell(path)
        return (size * self.min_cell) ** 2

    def grid_index(self, x: float, y: float) -> Optional[Tuple[int, int]]:
        """Min-cell grid index of a point, wrapping in Q; None outside W bounds."""
        if self.periodic:
            x, y = x % TWO_PI, y % TWO_PI
        elif not self.bounds.contains(x, y):
            return None
        n = self.divisions
        ix = min(int((x - self.bounds.x0) / self.min_cell), n - 1)
        iy = min(int((y - self.bounds.y0) / self.min_cell), n - 1)
        return ix, iy

    def leaf_at(self, x: float, y: float) -> Optional[str]:
        """Path of the leaf containing (x, y), or None outside the bounds."""
        index = self.grid_index(x, y)
        if index is None:
            return None
        ix, iy = index
        path = ""
        size = self.divisions
        while path not in self.leaves:
            size //= 2
            digit = (1 if ix >= size else 0) + (2 if iy >= size else 0)
            ix, iy = ix % size, iy % size
            path += str(digit)
        return path

    def label_raster(self) -> np.ndarray:
        """Labels on the min-cell grid, indexed [iy, ix]."""
        n = self.divisions
        raster = np.empty((n, n), dtype=np.int8)
        for path, label in self.leaves.items():
            ix, iy, size = self.cell(path)
            raster[iy:iy + size, ix:ix + size] = label
        return raster

    def leaf_index_raster(self) -> Tuple[np.ndarray, List[str]]:
        """Leaf ordinals on the min-cell grid plus the ordinal -> path list."""
        n = self.divisions
        raster = np.empty((n, n), dtype=np.int64)
        paths = sorted(self.leaves)
        for index, path in enumerate(paths):
            ix, iy, size = self.cell(path)
            raster[iy:iy + size, ix:ix + size] = index
        return raster, paths

    def label_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for label in self.leaves.values():
            counts[label.name] = counts.get(label.name, 0) + 1
        return counts

    def free_area(self) -> float:
        return sum(self.cell_area(p) for p, label in self.leaves.items() if label is CellLabel.FREE)

    # -------------------------------------------------------------------------
    # serialization
    # -------------------------------------------------------------------------

    def to_dict(self) -> dict:
        """
        Structured document: tree parameters plus a depth-first node list.

        Internal nodes are listed with label MIXED; leaves with their label and
        a ``conservative`` flag.
        """
        nodes = set(self.leaves)
        for path in self.leaves:
            nodes.update(path[:k] for k in range(len(path)))
        listing = []
        for path in sorted(nodes):
            if path in self.leaves:
                listing.append({"path": path, "label": self.leaves[path].name,
                                "conservative": path in self.conservative})
            else:
                listing.append({"path": path, "label": CellLabel.MIXED.name})
        return {
            "space": self.space.value,
            "kind": self.kind.value,
            "bounds": self.bounds.to_dict(),
            "mode": self.mode.index if self.mode else None,
            "det_sign": self.det_sign,
            "min_cell": self.min_cell,
            "nodes": listing,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Quadtree":
        try:
            leaves = {}
            conservative = set()
            internal = set()
            for node in doc["nodes"]:
                label = CellLabel[node["label"]]
                if label is CellLabel.MIXED:
                    internal.add(node["path"])
                    continue
                leaves[node["path"]] = label
                if node.get("conservative"):
                    conservative.add(node["path"])
            mode = doc.get("mode")
            return cls(
                space=Space(doc["space"]),
                bounds=Bounds(**doc["bounds"]),
                min_cell=float(doc["min_cell"]),
                mode=WorkingMode.from_index(mode) if mode else None,
                det_sign=doc.get("det_sign"),
                kind=TreeKind(doc.get("kind", TreeKind.ASPECTS.value)),
                leaves=leaves,
                conservative=frozenset(conservative),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("MALFORMED-DOCUMENT", f"not a quadtree document: {exc}") from exc

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Quadtree":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError("MALFORMED-DOCUMENT", exc.msg, f"line {exc.lineno} column {exc.colno}") from exc


# =============================================================================
# BUILDER
# =============================================================================

def sample_offsets(samples_per_cell: int) -> np.ndarray:
    """
    Unit-square sample layout: center, 4 corners, then stratified interior.

    Interior points are centers of a k x k grid, k = ceil(sqrt(n - 5)), taken
    row-major; the default n = 9 gives the symmetric (1/4, 3/4) pattern.
    """
    if samples_per_cell < 5:
        raise ConfigError("BAD-DECOMPOSITION", f"samples_per_cell must be >= 5, got {samples_per_cell}",
                          "decomposition.samples_per_cell")
    fixed = [(0.5, 0.5), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    extra = samples_per_cell - 5
    if extra:
        k = math.ceil(math.sqrt(extra))
        strata = [((i + 0.5) / k, (j + 0.5) / k) for j in range(k) for i in range(k)]
        fixed.extend(strata[:extra])
    return np.array(fixed, dtype=float)


def dense_offsets(count: int) -> np.ndarray:
    """Stratified grid of ceil(sqrt(count))^2 cell-interior points."""
    k = max(2, math.ceil(math.sqrt(count)))
    return np.array([((i + 0.5) / k, (j + 0.5) / k) for j in range(k) for i in range(k)], dtype=float)


def conservative_label(labels: np.ndarray, det_a: np.ndarray, space: Space = Space.W) -> CellLabel:
    """
    Not-FREE label for a cell whose samples disagree.

    Both det(A) signs among the samples means a parallel singularity crosses
    the cell. Samples with and without a configuration (det A NaN) mean the
    cell straddles the edge of the branch domain: a leg reach circle in W,
    where a leg is stretched or folded, or an assembly tangency in Q.
    Otherwise the most severe non-FREE sample label wins.
    """
    present = np.isfinite(det_a)
    finite = det_a[present]
    if finite.size and (finite > 0).any() and (finite < 0).any():
        return CellLabel.PARALLEL_SINGULAR
    if present.any() and not present.all():
        return CellLabel.SERIAL_SINGULAR if space is Space.W else CellLabel.PARALLEL_SINGULAR
    worst = CellLabel.UNREACHABLE
    for value in np.unique(labels):
        label = CellLabel(int(value))
        if label is not CellLabel.FREE and label.severity > worst.severity:
            worst = label
    return worst


class QuadtreeBuilder:
    """Builds one quadtree for a classifier over a square domain."""

    def __init__(self, classifier: PointClassifier, bounds: Bounds, min_cell: float,
                 samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
                 enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR, workers: int = 1,
                 uniform_leaf_levels: int = UNIFORM_LEAF_LEVELS):
        self.classifier = classifier
        self.workers = max(1, int(workers))
        self.executor: Optional[ProcessPoolExecutor] = None
        self.bounds = bounds
        self.min_cell = min_cell
        self.depth = tiling_depth(bounds, min_cell)
        self.min_depth = max(0, self.depth - int(uniform_leaf_levels))
        self.offsets = sample_offsets(samples_per_cell)
        self.enrichment_offsets = dense_offsets(enrichment_factor * samples_per_cell)
        self.leaves: Dict[str, CellLabel] = {}
        self.conservative: set = set()

    def _sample_points(self, cells: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        # cells: (M, 3) of ix, iy, size in min cells
        origin = cells[:, None, :2] + offsets[None, :, :] * cells[:, None, 2:3]
        points = np.empty(origin.shape, dtype=float)
        points[..., 0] = self.bounds.x0 + origin[..., 0] * self.min_cell
        points[..., 1] = self.bounds.y0 + origin[..., 1] * self.min_cell
        return points.reshape(-1, 2)

    def _classify(self, paths: Sequence[str], offsets: np.ndarray):
        cells = np.array([path_to_cell(p, self.depth) for p in paths], dtype=float)
        points = self._sample_points(cells, offsets)
        per_cell = offsets.shape[0]
        if self.executor is None or points.shape[0] < PARALLEL_MIN_POINTS:
            result = self.classifier(points)
            labels, det_a = result.labels, result.det_a
        else:
            # chunks come back in submission order
            chunks = np.array_split(points, self.workers)
            results = list(self.executor.map(self.classifier, chunks))
            labels = np.concatenate([r.labels for r in results])
            det_a = np.concatenate([r.det_a for r in results])
        return labels.reshape(-1, per_cell), det_a.reshape(-1, per_cell)

    def _subdivide(self, pending: List[str]) -> None:
        while pending:
            labels, det_a = self._classify(pending, self.offsets)
            uniform = (labels == labels[:, :1]).all(axis=1)
            next_level = []
            for row, path in enumerate(pending):
                if uniform[row] and len(path) >= self.min_depth:
                    self.leaves[path] = CellLabel(int(labels[row, 0]))
                elif len(path) >= self.depth:
                    self.leaves[path] = conservative_label(labels[row], det_a[row], self.classifier.space)
                    self.conservative.add(path)
                else:
                    next_level.extend(path + d for d in "0123")
            logger.debug("level %d: %d cells, %d split", len(pending[0]), len(pending), len(next_level) // 4)
            pending = next_level

    def _boundary_free_leaves(self, done: set) -> List[str]:
        tree = self.snapshot()
        raster = tree.label_raster()
        index, paths = tree.leaf_index_raster()
        blocked = (raster != CellLabel.FREE).astype(np.uint8)
        near_blocked = ndimage.maximum_filter(blocked, footprint=_CROSS,
                                              mode="wrap" if tree.periodic else "constant", cval=0)
        touching = np.unique(index[(near_blocked > 0) & (blocked == 0)])
        return [paths[i] for i in touching if paths[i] not in done]

    def _enrich(self) -> None:
        done: set = set()
        while True:
            candidates = self._boundary_free_leaves(done)
            if not candidates:
                return
            labels, det_a = self._classify(candidates, self.enrichment_offsets)
            split = []
            for row, path in enumerate(candidates):
                hit = labels[row] != CellLabel.FREE
                if not hit.any():
                    done.add(path)
                    continue
                if len(path) >= self.depth:
                    self.leaves[path] = conservative_label(labels[row], det_a[row], self.classifier.space)
                    self.conservative.add(path)
                else:
                    del self.leaves[path]
                    split.extend(path + d for d in "0123")
            logger.debug("enrichment: %d candidates, %d split", len(candidates), len(split) // 4)
            if split:
                self._subdivide(split)

    def snapshot(self) -> Quadtree:
        c = self.classifier
        return Quadtree(space=c.space, bounds=self.bounds, min_cell=self.min_cell, mode=c.mode,
                        det_sign=c.det_sign, kind=c.kind, leaves=dict(self.leaves),
                        conservative=frozenset(self.conservative))

    def build(self) -> Quadtree:
        started = time.perf_counter()
        if self.workers > 1:
            self.executor = ProcessPoolExecutor(max_workers=self.workers)
        try:
            self._subdivide([""])
            self._enrich()
        finally:
            if self.executor is not None:
                self.executor.shutdown()
                self.executor = None
        tree = self.snapshot()
        logger.info("built %s/%s tree mode=%s sign=%s: %d leaves %s in %.2fs",
                    tree.space.value, tree.kind.value, tree.mode, tree.det_sign,
                    len(tree.leaves), tree.label_counts(), time.perf_counter() - started)
        return tree


def build_quadtree(g: MechanismGeometry, space: Union[Space, str], bounds: Union[Bounds, Sequence[float], None],
                   mode: Optional[WorkingMode], det_sign: Optional[int],
                   obstacles: Iterable[ObstaclePolygon] = (), min_cell: Optional[float] = None,
                   samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL,
                   enrichment_factor: int = DEFAULT_ENRICHMENT_FACTOR,
                   kind: TreeKind = TreeKind.ASPECTS, workers: int = 1) -> Quadtree:
    """
    Decompose W or Q for one (mode, det sign).

    Args:
        g: Mechanism geometry
        space: ``Space.W`` or ``Space.Q``
        bounds: Square domain, an (xmin, ymin, xmax, ymax) extent, or None
            for the defaults (reach square in W, [0, 2*pi)^2 in Q)
        mode, det_sign: Working mode and det(A) sign (ASPECTS trees)
        obstacles: Obstacle polygons
        min_cell: Smallest cell side; bounds side must be a power-of-two multiple
        samples_per_cell: Samples per cell during subdivision (>= 5)
        enrichment_factor: Density multiplier of the enrichment pass
        kind: What FREE means for this tree
        workers: Process pool size for sample classification (1 = in process)

    Raises:
        BoundsError: If the bounds are not square or not a power-of-two tiling
    """
    space = Space(space)
    if bounds is None:
        if space is Space.W:
            bounds, min_cell = default_w_bounds(g, min_cell)
        else:
            bounds = Q_BOUNDS
            min_cell = min_cell or default_q_min_cell()
    elif not isinstance(bounds, Bounds):
        bounds = Bounds.from_extent(*bounds)
    if min_cell is None:
        min_cell = bounds.side / DEFAULT_DIVISIONS
    classifier = PointClassifier(g, space, kind, mode, det_sign, tuple(obstacles))
    builder = QuadtreeBuilder(classifier, bounds, min_cell, samples_per_cell, enrichment_factor, workers)
    return builder.build()
