"""
SVG maps of quadtrees, free aspects and their projections.

Rendering goes through a bare matplotlib ``Figure`` (Agg canvas, no pyplot
state). The SVG hash salt is fixed and the Date metadata dropped so identical
inputs give byte-identical files.
"""

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402
from matplotlib.colors import to_rgba  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from mvkit.decomposition.aspects import FreeAspect, ProjectionGrid  # noqa: E402
from mvkit.decomposition.labels import CellLabel, Space  # noqa: E402
from mvkit.decomposition.quadtree import Quadtree  # noqa: E402
from mvkit.kinematics import MechanismGeometry  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "mvkit"

DEFAULT_LABEL_COLORS = {
    CellLabel.FREE: "#d9f0d3",
    CellLabel.COLLISION: "#e08214",
    CellLabel.SERIAL_SINGULAR: "#5e3c99",
    CellLabel.PARALLEL_SINGULAR: "#c51b7d",
    CellLabel.UNREACHABLE: "#f7f7f7",
    CellLabel.MIXED: "#bababa",
}

DEFAULT_ASPECT_PALETTE = (
    "#1b9e77", "#377eb8", "#e6ab02", "#66a61e", "#a6761d", "#7570b3", "#e7298a", "#17becf",
)


@dataclass(frozen=True)
class RenderStyle:
    """
    Colors and sizes of a rendered map.

    Attributes:
        label_colors: Fill per cell label; must cover every CellLabel
        aspect_palette: Fills cycled over aspects 1, 2, ...
        cell_edge_width: Stroke of the leaf outlines (0 hides them)
        base_width: Stroke of the base segment in workspace maps
        figure_size: Figure size in inches
    """

    label_colors: Dict[CellLabel, str] = field(default_factory=lambda: dict(DEFAULT_LABEL_COLORS))
    aspect_palette: Tuple[str, ...] = DEFAULT_ASPECT_PALETTE
    cell_edge_width: float = 0.15
    base_width: float = 2.5
    figure_size: Tuple[float, float] = (7.0, 7.0)

    def __post_init__(self):
        missing = [label.name for label in CellLabel if label not in self.label_colors]
        if missing:
            raise ValueError(f"no color for labels {', '.join(missing)}")
        if not self.aspect_palette:
            raise ValueError("aspect palette is empty")

    def aspect_color(self, index: int) -> str:
        return self.aspect_palette[(index - 1) % len(self.aspect_palette)]


def _axis_scale(space: Space) -> float:
    """Q maps are drawn in degrees."""
    return 180.0 / math.pi if space is Space.Q else 1.0


class MapSVGGenerator:
    """Renders W and Q maps to SVG text."""

    def __init__(self, style: Optional[RenderStyle] = None):
        self.style = style or RenderStyle()

    def render_tree(self, tree: Quadtree, aspects: Sequence[FreeAspect] = (),
                    geometry: Optional[MechanismGeometry] = None, title: Optional[str] = None) -> str:
        """
        Draw every leaf of ``tree`` colored by label; FREE leaves belonging to
        an aspect take that aspect's palette color.
        """
        scale = _axis_scale(tree.space)
        owner = {}
        for aspect in aspects:
            for path in aspect.cells:
                owner[path] = aspect.id.index

        polygons, colors = [], []
        for path in sorted(tree.leaves):
            label = tree.leaves[path]
            ix, iy, size = tree.cell(path)
            x0 = (tree.bounds.x0 + ix * tree.min_cell) * scale
            y0 = (tree.bounds.y0 + iy * tree.min_cell) * scale
            side = size * tree.min_cell * scale
            polygons.append([(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)])
            if path in owner:
                colors.append(to_rgba(self.style.aspect_color(owner[path])))
            else:
                colors.append(to_rgba(self.style.label_colors[label]))

        fig, ax = self._figure(tree.space, tree.bounds.x0, tree.bounds.y0, tree.bounds.side)
        cells = PolyCollection(polygons, facecolors=colors, edgecolors="#ffffff",
                               linewidths=self.style.cell_edge_width)
        ax.add_collection(cells)
        if geometry is not None and tree.space is Space.W:
            self._draw_base(ax, geometry)

        present = sorted({label for label in tree.leaves.values()}, key=int)
        handles = [Patch(facecolor=self.style.aspect_color(a.id.index), label=str(a.id)) for a in aspects]
        handles += [Patch(facecolor=self.style.label_colors[label], edgecolor="#999999", label=label.name)
                    for label in present if label is not CellLabel.FREE or not aspects]
        self._finish(ax, handles, title or self._default_title(tree))
        return self._to_svg(fig)

    def render_grids(self, grids: Sequence[Tuple[str, ProjectionGrid]], title: Optional[str] = None) -> str:
        """Draw one or more cell sets over the same raster, one palette color each."""
        if not grids:
            raise ValueError("nothing to render")
        first = grids[0][1]
        n = first.mask.shape[0]
        image = np.ones((n, n, 4))
        image[...] = to_rgba(self.style.label_colors[CellLabel.UNREACHABLE])
        handles = []
        for k, (name, grid) in enumerate(grids, start=1):
            if grid.mask.shape != first.mask.shape or grid.bounds != first.bounds:
                raise ValueError("grids must share bounds and resolution")
            color = to_rgba(self.style.aspect_color(k))
            image[grid.mask] = color
            handles.append(Patch(facecolor=color, label=name))

        scale = _axis_scale(first.space)
        fig, ax = self._figure(first.space, first.bounds.x0, first.bounds.y0, first.bounds.side)
        extent = (first.bounds.x0 * scale, (first.bounds.x0 + first.bounds.side) * scale,
                  first.bounds.y0 * scale, (first.bounds.y0 + first.bounds.side) * scale)
        ax.imshow(image, origin="lower", extent=extent, interpolation="nearest")
        self._finish(ax, handles, title or f"{first.space.value.upper()} projection")
        return self._to_svg(fig)

    def save(self, svg: str, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg, encoding="utf-8")
        logger.info("wrote %s", path)
        return path

    def _figure(self, space: Space, x0: float, y0: float, side: float):
        scale = _axis_scale(space)
        fig = Figure(figsize=self.style.figure_size)
        ax = fig.add_subplot(1, 1, 1)
        ax.set_xlim(x0 * scale, (x0 + side) * scale)
        ax.set_ylim(y0 * scale, (y0 + side) * scale)
        ax.set_aspect("equal")
        if space is Space.Q:
            ax.set_xlabel("theta1 (deg)")
            ax.set_ylabel("theta2 (deg)")
            ticks = np.arange(0, 361, 90)
            ax.set_xticks(ticks)
            ax.set_yticks(ticks)
        else:
            ax.set_xlabel("x")
            ax.set_ylabel("y")
        return fig, ax

    def _draw_base(self, ax, g: MechanismGeometry):
        ax.plot([g.a1.x, g.a2.x], [g.a1.y, g.a2.y], color="#252525", linewidth=self.style.base_width,
                solid_capstyle="round")
        ax.plot([g.a1.x, g.a2.x], [g.a1.y, g.a2.y], "o", color="#252525", markersize=4)

    def _finish(self, ax, handles, title: str):
        ax.set_title(title)
        if handles:
            ax.legend(handles=handles, loc="upper right", fontsize="small", framealpha=0.9)

    def _default_title(self, tree: Quadtree) -> str:
        name = tree.space.value.upper()
        if tree.mode is None:
            return f"{name} ({tree.kind.value})"
        sign = "+" if tree.det_sign > 0 else "-"
        return f"{name} aspects, working mode {tree.mode.index}, det A {sign}"

    def _to_svg(self, fig: Figure) -> str:
        buffer = io.StringIO()
        with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        return buffer.getvalue()
