#!/usr/bin/env python3
"""
mvkit - command-line front end.

    mvkit validate [CONFIG]
    mvkit map (w|q) --mode N --sign (+|-) [--min-cell F] [--kind aspects|free|reach] [--project] --out FILE
    mvkit aspects [--format json|table] [--filter F] [--sort KEY [--order asc|desc]] [--export FILE.pdf|FILE.xlsx]
    mvkit check-path FILE --mode N --sign (+|-)
    mvkit moveability --from X,Y --to X,Y
    mvkit prune-cache [--days N]

Every command except ``validate`` reads the project given with ``-c`` (default
``mvkit.json``). Quadtrees are cached in ``$MVKIT_CACHE``.

Exit status: 0 success or feasible, 1 failure or infeasible, 2 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from mvkit import __version__
from mvkit.decomposition.aspects import AspectMap, FreeAspect, aspect_floor, extract_aspects, project_aspect
from mvkit.decomposition.classifier import PointClassifier
from mvkit.decomposition.labels import Space, TreeKind
from mvkit.decomposition.quadtree import (
    Bounds,
    Q_BOUNDS,
    Quadtree,
    build_quadtree,
    default_q_min_cell,
    default_w_bounds,
)
from mvkit.errors import ConfigError, MvkitError
from mvkit.geometry import Point2
from mvkit.kinematics import WorkingMode
from mvkit.moveability import DET_SIGNS, MoveabilityAnalyzer
from mvkit.reports.excel_generator import ExcelReportGenerator
from mvkit.reports.pdf_generator import PDFReportGenerator
from mvkit.reports.svg_generator import MapSVGGenerator
from mvkit.utils.cache import QuadtreeCache, cache_key
from mvkit.utils.config import ProjectConfig, Settings, load_project, load_settings, load_trajectory
from mvkit.utils.data_processor import AspectInventoryProcessor, sign_symbol
from mvkit.utils.logging_setup import configure_logging

logger = logging.getLogger("mvkit.cli")

DEFAULT_CONFIG = "mvkit.json"
EXPORT_SUFFIXES = {".pdf", ".xlsx"}
CACHE_FORMAT = 2
SORT_COLUMNS = {"area": "Area", "share": "Area %", "leaves": "Leaves", "q-area": "Q Area", "mode": "Mode"}

# Initialize components
data_processor = AspectInventoryProcessor()
svg_generator = MapSVGGenerator()
pdf_generator = PDFReportGenerator()
excel_generator = ExcelReportGenerator()


def parse_sign(value: str) -> int:
    if value in ("+", "+1", "1"):
        return 1
    if value in ("-", "-1"):
        return -1
    raise argparse.ArgumentTypeError(f"sign must be + or -, got {value!r}")


def parse_filter(value: str) -> str:
    if value in ("sign+", "sign-", "small") or value in {f"mode{m.index}" for m in WorkingMode}:
        return value
    raise argparse.ArgumentTypeError(f"filter must be sign+, sign-, small or mode1..mode4, got {value!r}")


def parse_point(value: str) -> Point2:
    try:
        x, y = (float(part) for part in value.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {value!r}") from exc
    return Point2(x, y)


# =============================================================================
# TREES
# =============================================================================

class TreeStore:
    """Builds quadtrees for one project, through the on-disk cache."""

    def __init__(self, config: ProjectConfig, settings: Settings, cache: Optional[QuadtreeCache] = None):
        self.config = config
        self.settings = settings
        self.geometry = config.to_geometry()
        self.obstacles = config.to_obstacles()
        self.cache = cache or QuadtreeCache(settings.cache_dir)

    def grid(self, space: Space, min_cell: Optional[float] = None) -> Tuple[Bounds, float]:
        """Bounds and min cell of a ``space`` tree for this project."""
        decomposition = self.config.decomposition
        if space is Space.Q:
            return Q_BOUNDS, min_cell or decomposition.q_min_cell or default_q_min_cell()
        min_cell = min_cell or decomposition.min_cell
        bounds = decomposition.w_bounds()
        if bounds is None:
            return default_w_bounds(self.geometry, min_cell)
        return bounds, min_cell or bounds.side / 256

    def tree(self, space: Space, mode: Optional[WorkingMode], det_sign: Optional[int],
             kind: TreeKind = TreeKind.ASPECTS, min_cell: Optional[float] = None) -> Quadtree:
        decomposition = self.config.decomposition
        bounds, min_cell = self.grid(space, min_cell)
        classifier = PointClassifier(self.geometry, space, kind, mode, det_sign, self.obstacles)
        key = cache_key({
            "format": CACHE_FORMAT,
            "classifier": classifier.describe(),
            "bounds": bounds.to_dict(),
            "min_cell": min_cell,
            "samples_per_cell": decomposition.samples_per_cell,
            "enrichment_factor": decomposition.enrichment_factor,
        })

        def build() -> Quadtree:
            return build_quadtree(self.geometry, space, bounds, mode, det_sign, self.obstacles, min_cell,
                                  decomposition.samples_per_cell, decomposition.enrichment_factor,
                                  kind=kind, workers=self.settings.workers)

        return self.cache.get_or_build(key, build)

    def aspect_maps(self, project: bool = False) -> Dict[Tuple[WorkingMode, int], AspectMap]:
        """W aspect maps of every (mode, det sign), optionally with Q projections."""
        maps = {}
        oversample = self.config.decomposition.projection_oversample
        q_bounds, q_min_cell = self.grid(Space.Q)
        for mode in WorkingMode:
            for det_sign in DET_SIGNS:
                tree = self.tree(Space.W, mode, det_sign)
                amap = AspectMap.from_tree(tree, aspect_floor(tree, self.config.decomposition.min_aspect_cells))
                if project:
                    amap.aspects = [project_aspect(a, self.geometry, q_bounds, q_min_cell, oversample)
                                    for a in amap.aspects]
                maps[(mode, det_sign)] = amap
        return maps

    def analyzer(self) -> MoveabilityAnalyzer:
        decomposition = self.config.decomposition
        bounds, min_cell = self.grid(Space.W)
        return MoveabilityAnalyzer(
            self.geometry, self.obstacles, min_cell, bounds,
            decomposition.samples_per_cell, decomposition.enrichment_factor,
            tree_source=lambda mode, det_sign: self.tree(Space.W, mode, det_sign),
            min_aspect_cells=decomposition.min_aspect_cells,
        )


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_validate(args, settings: Settings) -> int:
    path = args.path or args.config
    config = load_project(path)
    g = config.to_geometry()
    print(f"{path}: ok ({config.name}, L0={g.L0:g} L1={g.L1:g} L2={g.L2:g} L3={g.L3:g} L4={g.L4:g}, "
          f"{len(config.obstacles)} obstacles)")
    return 0


def cmd_map(args, settings: Settings) -> int:
    config = load_project(args.config)
    store = TreeStore(config, settings)
    space = Space(args.space)
    kind = TreeKind(args.kind)
    mode = WorkingMode.from_index(args.mode) if kind is TreeKind.ASPECTS else None
    det_sign = args.sign if kind is TreeKind.ASPECTS else None

    tree = store.tree(space, mode, det_sign, kind, args.min_cell)
    floor = aspect_floor(tree, config.decomposition.min_aspect_cells)
    aspects = extract_aspects(tree, floor) if kind is TreeKind.ASPECTS else []
    out = Path(args.out)
    svg_generator.save(svg_generator.render_tree(tree, aspects, store.geometry), out)
    tree_path = out.with_suffix(".json")
    tree.save(tree_path)
    logger.info("wrote %s", tree_path)

    for aspect in aspects:
        print(f"{aspect.id}\tleaves={len(aspect.cells)}\tarea={aspect.area:.4f}")
    if kind is TreeKind.ASPECTS:
        print(f"{len(aspects)} free aspects in {space.value.upper()} for working mode {mode.index}, "
              f"det A {sign_symbol(det_sign)}")

    if args.project and aspects:
        partner = Space.Q if space is Space.W else Space.W
        bounds, min_cell = store.grid(partner)
        oversample = config.decomposition.projection_oversample
        projected: List[FreeAspect] = [project_aspect(a, store.geometry, bounds, min_cell, oversample)
                                       for a in aspects]
        grids = [(str(a.id), a.q_projection if partner is Space.Q else a.w_projection) for a in projected]
        projection_path = out.with_name(f"{out.stem}_{partner.value}{out.suffix}")
        svg_generator.save(svg_generator.render_grids(grids, f"{partner.value.upper()} projection of the aspects"),
                           projection_path)
    return 0


def cmd_aspects(args, settings: Settings) -> int:
    export = Path(args.export) if args.export else None
    if export is not None and export.suffix.lower() not in EXPORT_SUFFIXES:
        raise ConfigError("INVALID-FIELD", f"export format must be .pdf or .xlsx, got {export.suffix or 'none'}",
                          "--export")
    config = load_project(args.config)
    store = TreeStore(config, settings)
    maps = store.aspect_maps(project=not args.no_projection)

    data = data_processor.process_maps(maps)
    counts = data_processor.counts_table(data)
    shown = data
    if args.filter:
        shown = data_processor.apply_filters(shown, args.filter)
    if args.sort:
        shown = data_processor.sort_results(shown, SORT_COLUMNS[args.sort], args.order)
    if args.format == "json":
        document = {
            "maps": [
                {"mode": mode.index, "det_sign": det_sign, "count": amap.count(),
                 "aspects": [a.to_dict() for a in amap.aspects]}
                for (mode, det_sign), amap in maps.items()
            ],
            "counts": {"+": counts["+"].tolist(), "-": counts["-"].tolist()},
        }
        print(json.dumps(document, indent=2))
    else:
        print(counts.to_string())
        print()
        print(shown.to_string(index=False) if not shown.empty else "no free aspects")

    for alert in data_processor.get_alerts(data):
        logger.warning(alert["message"])

    if export is not None:
        stats = data_processor.calculate_summary_stats(data)
        insights = data_processor.get_insights(data)
        if export.suffix.lower() == ".pdf":
            buffer = pdf_generator.generate_report(shown, counts, stats, insights, config.name)
        else:
            labels = data_processor.label_table(maps)
            buffer = excel_generator.generate_report(shown, counts, labels, stats, insights, config.name)
        export.parent.mkdir(parents=True, exist_ok=True)
        export.write_bytes(buffer.getvalue())
        logger.info("wrote %s", export)
    return 0


def cmd_check_path(args, settings: Settings) -> int:
    trajectory = load_trajectory(args.path)
    config = load_project(args.config)
    mode = WorkingMode.from_index(args.mode)
    verdict = TreeStore(config, settings).analyzer().check_path(trajectory, mode, args.sign)

    label = f"working mode {mode.index}, det A {sign_symbol(args.sign)}"
    if verdict.feasible:
        print(f"feasible: path stays in {verdict.aspect_id} ({label})")
    else:
        blocker = verdict.first_blocker
        print(f"infeasible ({label}): {blocker.reason.name} at s={blocker.position:.4f} "
              f"({blocker.point.x:.4f}, {blocker.point.y:.4f})")
        print(f"start: {verdict.start_aspect}  goal: {verdict.goal_aspect}")
    print(json.dumps(verdict.to_dict(), indent=2))
    return 0 if verdict.feasible else 1


def cmd_moveability(args, settings: Settings) -> int:
    config = load_project(args.config)
    shared = TreeStore(config, settings).analyzer().moveability(args.start, args.goal)
    if not shared:
        print(f"no free aspect holds both ({args.start.x:g}, {args.start.y:g}) and ({args.goal.x:g}, {args.goal.y:g})")
        return 1
    for mode, det_sign, aspect in shared:
        print(f"working mode {mode.index}, det A {sign_symbol(det_sign)}: {aspect}")
    return 0


def cmd_prune_cache(args, settings: Settings) -> int:
    cache = QuadtreeCache(settings.cache_dir)
    removed = cache.cleanup(args.days * 86400)
    print(f"removed {removed} cached trees older than {args.days:g} days from {cache.directory}")
    return 0


# =============================================================================
# ENTRY POINT
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvkit", description="Moveability analysis of five-bar mechanisms")
    parser.add_argument("--config", "-c", dest="config", default=DEFAULT_CONFIG,
                        help=f"project document (default {DEFAULT_CONFIG})")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="load and validate a project document")
    validate.add_argument("path", nargs="?", help="project document (default: --config)")
    validate.set_defaults(handler=cmd_validate)

    map_ = commands.add_parser("map", help="decompose W or Q and render it as SVG")
    map_.add_argument("space", choices=[s.value for s in Space])
    map_.add_argument("--mode", type=int, choices=range(1, 5))
    map_.add_argument("--sign", type=parse_sign, help="det A sign, + or -")
    map_.add_argument("--min-cell", type=float, dest="min_cell")
    map_.add_argument("--kind", choices=[k.value for k in TreeKind], default=TreeKind.ASPECTS.value)
    map_.add_argument("--project", action="store_true", help="also render aspect projections in the other space")
    map_.add_argument("--out", required=True, help="SVG file; the tree is written beside it as JSON")
    map_.set_defaults(handler=cmd_map)

    aspects = commands.add_parser("aspects", help="free aspect inventory of every working mode")
    aspects.add_argument("--format", choices=["json", "table"], default="table")
    aspects.add_argument("--filter", type=parse_filter, help="sign+, sign-, small or mode1..mode4")
    aspects.add_argument("--sort", choices=sorted(SORT_COLUMNS), help="order the aspect table by this column")
    aspects.add_argument("--order", choices=["asc", "desc"], default="desc")
    aspects.add_argument("--export", help="write a .pdf or .xlsx report")
    aspects.add_argument("--no-projection", action="store_true", dest="no_projection",
                         help="skip the joint-space projection of each aspect")
    aspects.set_defaults(handler=cmd_aspects)

    check = commands.add_parser("check-path", help="check a trajectory document against one aspect map")
    check.add_argument("path")
    check.add_argument("--mode", type=int, choices=range(1, 5), required=True)
    check.add_argument("--sign", type=parse_sign, required=True, help="det A sign, + or -")
    check.set_defaults(handler=cmd_check_path)

    move = commands.add_parser("moveability", help="aspects shared by two poses (use --from=-X,Y for negatives)")
    move.add_argument("--from", type=parse_point, dest="start", required=True)
    move.add_argument("--to", type=parse_point, dest="goal", required=True)
    move.set_defaults(handler=cmd_moveability)

    prune = commands.add_parser("prune-cache", help="delete cached quadtrees older than --days")
    prune.add_argument("--days", type=float, default=30.0)
    prune.set_defaults(handler=cmd_prune_cache)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "map" and args.kind == TreeKind.ASPECTS.value and (args.mode is None or args.sign is None):
        parser.error("map --kind aspects needs --mode and --sign")

    try:
        settings = load_settings()
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    configure_logging("DEBUG" if args.verbose else settings.log_level)

    try:
        return args.handler(args, settings)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    except MvkitError as exc:
        print(f"error[{type(exc).__name__}] {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IO] {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
