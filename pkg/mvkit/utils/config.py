"""
Project configuration and process settings.

Project documents are JSON, validated with pydantic and turned into the
domain objects (MechanismGeometry, ObstaclePolygon, Trajectory). Every failure
surfaces as ``ConfigError`` with a stable code and a location: the dotted
field path, or ``line N column M`` for JSON syntax errors.

Process settings come from the environment, after ``.env`` is loaded with
python-dotenv:
    MVKIT_CACHE       quadtree cache directory (default ``.mvkit-cache``)
    MVKIT_LOG_LEVEL   logging level name (default INFO)
    MVKIT_WORKERS     process pool size for quadtree builds (default 1)
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Tuple, Type, TypeVar, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from mvkit.decomposition.quadtree import Bounds, tiling_depth
from mvkit.errors import BoundsError, ConfigError
from mvkit.geometry import ObstaclePolygon, Point2
from mvkit.kinematics import MechanismGeometry
from mvkit.moveability import Trajectory

logger = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = ".mvkit-cache"

_LENGTH_FIELDS = {"L0", "L1", "L2", "L3", "L4", "link_radius", "base_radius", "platform_radius", "joint_clearance"}

ModelT = TypeVar("ModelT", bound=BaseModel)


class GeometryConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    L0: float = Field(gt=0)
    L1: float = Field(gt=0)
    L2: float = Field(gt=0)
    L3: float = Field(gt=0)
    L4: float = Field(gt=0)
    a1: Tuple[float, float] = (0.0, 0.0)
    a2: Optional[Tuple[float, float]] = None
    link_radius: float = Field(0.1, ge=0)
    base_radius: float = Field(0.1, ge=0)
    platform_radius: float = Field(0.1, ge=0)
    joint_clearance: float = Field(2.5, ge=0)

    def to_geometry(self) -> MechanismGeometry:
        return MechanismGeometry(
            L0=self.L0, L1=self.L1, L2=self.L2, L3=self.L3, L4=self.L4,
            a1=Point2.of(self.a1),
            a2=Point2.of(self.a2) if self.a2 is not None else None,
            link_radius=self.link_radius,
            base_radius=self.base_radius,
            platform_radius=self.platform_radius,
            joint_clearance=self.joint_clearance,
        )


class ObstacleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    vertices: List[Tuple[float, float]]

    def to_polygon(self) -> ObstaclePolygon:
        return ObstaclePolygon(tuple(Point2.of(v) for v in self.vertices), self.id)


class BoundsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x0: float
    y0: float
    side: float = Field(gt=0)


class DecompositionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_cell: Optional[float] = Field(None, gt=0)
    q_min_cell: Optional[float] = Field(None, gt=0)
    samples_per_cell: int = Field(9, ge=5)
    enrichment_factor: int = Field(4, ge=1)
    bounds: Optional[BoundsConfig] = None
    projection_oversample: int = Field(3, ge=1)
    min_aspect_cells: int = Field(8, ge=0)

    def w_bounds(self) -> Optional[Bounds]:
        return Bounds(self.bounds.x0, self.bounds.y0, self.bounds.side) if self.bounds else None


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "output"


class ProjectConfig(BaseModel):
    """Root of a project document."""

    model_config = ConfigDict(extra="forbid")

    name: str = "five-bar"
    geometry: GeometryConfig
    obstacles: List[ObstacleConfig] = Field(default_factory=list)
    decomposition: DecompositionConfig = Field(default_factory=DecompositionConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def to_geometry(self) -> MechanismGeometry:
        return self.geometry.to_geometry()

    def to_obstacles(self) -> Tuple[ObstaclePolygon, ...]:
        polygons = []
        for k, obstacle in enumerate(self.obstacles):
            try:
                polygons.append(obstacle.to_polygon())
            except ConfigError as exc:
                raise ConfigError(exc.code, exc.message, f"obstacles.{k}") from exc
        ids = [p.id for p in polygons]
        if len(set(ids)) != len(ids):
            raise ConfigError("BAD-POLYGON", "obstacle ids must be unique", "obstacles")
        return tuple(polygons)

    def validate_domain(self) -> None:
        """Build every domain object once so module-level invariants are checked."""
        self.to_geometry()
        self.to_obstacles()
        if self.decomposition.bounds is not None and self.decomposition.min_cell is not None:
            try:
                tiling_depth(self.decomposition.w_bounds(), self.decomposition.min_cell)
            except BoundsError as exc:
                raise ConfigError("BAD-DECOMPOSITION", str(exc), "decomposition.bounds") from exc


class TrajectoryDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    waypoints: List[Tuple[float, float]]
    step: Optional[float] = None

    def to_trajectory(self) -> Trajectory:
        return Trajectory.of(self.waypoints, self.step)


# =============================================================================
# LOADING
# =============================================================================

def _error_code(model: Type[BaseModel], loc: Tuple[Any, ...]) -> str:
    if model is TrajectoryDocument:
        return "BAD-TRAJECTORY"
    head = loc[0] if loc else None
    if head == "geometry" and len(loc) > 1 and loc[1] in _LENGTH_FIELDS:
        return "BAD-LENGTH"
    if head == "obstacles":
        return "BAD-POLYGON"
    if head == "decomposition":
        return "BAD-DECOMPOSITION"
    return "INVALID-FIELD"


def parse_document(text: str, model: Type[ModelT]) -> ModelT:
    """
    Parse and validate a JSON document.

    Raises:
        ConfigError: MALFORMED-DOCUMENT for JSON syntax errors or a non-object
            root; a field-specific code for validation failures
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("MALFORMED-DOCUMENT", exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise ConfigError("MALFORMED-DOCUMENT", "the document root must be a JSON object")
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = tuple(first["loc"])
        location = ".".join(str(part) for part in loc) or None
        raise ConfigError(_error_code(model, loc), first["msg"], location) from exc


def _read(path: Union[str, Path]) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError("MISSING-FILE", f"no such file: {path}") from exc
    except OSError as exc:
        raise ConfigError("MISSING-FILE", f"cannot read {path}: {exc.strerror}") from exc


def load_project(path: Union[str, Path]) -> ProjectConfig:
    """Load and fully validate a project document."""
    config = parse_document(_read(path), ProjectConfig)
    config.validate_domain()
    logger.debug("loaded project %s from %s", config.name, path)
    return config


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    """Load a trajectory document ``{waypoints: [[x, y], ...], step: number}``."""
    return parse_document(_read(path), TrajectoryDocument).to_trajectory()


# =============================================================================
# PROCESS SETTINGS
# =============================================================================

@dataclass(frozen=True)
class Settings:
    cache_dir: Path
    log_level: str
    workers: int


def load_settings(dotenv_path: Optional[Union[str, Path]] = None) -> Settings:
    """Read process settings from the environment (and ``.env`` if present)."""
    load_dotenv(dotenv_path=dotenv_path, override=False)
    try:
        workers = int(os.environ.get("MVKIT_WORKERS", "1"))
    except ValueError as exc:
        raise ConfigError("INVALID-FIELD", "MVKIT_WORKERS must be an integer", "MVKIT_WORKERS") from exc
    return Settings(
        cache_dir=Path(os.environ.get("MVKIT_CACHE", DEFAULT_CACHE_DIR)),
        log_level=os.environ.get("MVKIT_LOG_LEVEL", "INFO").upper(),
        workers=max(1, workers),
    )
