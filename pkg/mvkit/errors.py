"""
Exception hierarchy for mvkit.

Degenerate geometric outcomes (concentric circles, serial-singular legs, points
outside every aspect) are returned as enum values, never raised. Exceptions are
reserved for invalid inputs and guarded operations.
"""

from typing import Optional


class MvkitError(Exception):
    """Base class for every error raised by mvkit."""


class ConfigError(MvkitError):
    """
    A project or data document failed to load or validate.

    Attributes:
        code: Stable diagnostic code (e.g. ``GEOMETRY-INCONSISTENT``)
        location: Dotted field path or ``line N column M``; None when the
            whole document is at fault (missing file)
    """

    def __init__(self, code: str, message: str, location: Optional[str] = None):
        self.code = code
        self.message = message
        self.location = location
        where = f" {location}:" if location else ""
        super().__init__(f"error[{code}]{where} {message}")


class ParallelSingularError(MvkitError):
    """The direct kinematic matrix A is (numerically) singular."""


class BoundsError(MvkitError):
    """Quadtree bounds are not a square power-of-two tiling of min_cell."""


class CacheLockError(MvkitError):
    """Another process holds the quadtree cache lock."""
