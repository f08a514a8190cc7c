import sys
from pathlib import Path

import pytest

# Ensure the package can be imported when tests run from any path
sys.path.append(str(Path(__file__).resolve().parents[1]))

from mvkit.kinematics import MechanismGeometry
from mvkit.moveability import MoveabilityAnalyzer

SAMPLE_DATA = Path(__file__).resolve().parents[1] / "sample_data"

# 128 x 128 cells over the default 26 x 26 workspace square
COARSE_CELL = 13 / 64


@pytest.fixture(scope="session")
def five_bar():
    return MechanismGeometry.reference()


@pytest.fixture(scope="session")
def sample_data():
    return SAMPLE_DATA


@pytest.fixture(scope="session")
def analyzer(five_bar):
    """Shared coarse analyzer; aspect maps are built once per (mode, sign)."""
    return MoveabilityAnalyzer(five_bar, min_cell=COARSE_CELL)


@pytest.fixture(scope="session")
def coarse_tree(analyzer):
    def make(mode, det_sign):
        return analyzer.aspect_map(mode, det_sign).tree
    return make
