"""Cell labels, spaces and tree kinds shared by the decomposition modules."""

from enum import Enum, IntEnum


class CellLabel(IntEnum):
    """
    Classification of a point or a quadtree cell.

    Integer values let label arrays live in numpy; ``severity`` orders the
    non-FREE labels for conservative relabeling (higher wins).
    """

    FREE = 0
    COLLISION = 1
    SERIAL_SINGULAR = 2
    PARALLEL_SINGULAR = 3
    UNREACHABLE = 4
    MIXED = 5

    @property
    def severity(self) -> int:
        return _SEVERITY[self]


_SEVERITY = {
    CellLabel.FREE: 0,
    CellLabel.UNREACHABLE: 1,
    CellLabel.COLLISION: 2,
    CellLabel.SERIAL_SINGULAR: 3,
    CellLabel.PARALLEL_SINGULAR: 4,
    CellLabel.MIXED: 5,
}


class Space(str, Enum):
    W = "w"
    Q = "q"


class TreeKind(str, Enum):
    """
    What a tree's FREE label means.

    ASPECTS: singularity- and collision-free within one (mode, det sign).
    FREE: collision-free for at least one branch (W_F / Q_F).
    REACH: reachable / assemblable at all (W / Q).
    """

    ASPECTS = "aspects"
    FREE = "free"
    REACH = "reach"
