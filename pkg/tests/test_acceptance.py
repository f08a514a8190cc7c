"""Full-resolution checks on the reference five-bar; run with ``pytest -m slow``."""

import pytest

from mvkit.decomposition.aspects import AspectId
from mvkit.kinematics import MechanismGeometry, WorkingMode
from mvkit.moveability import DET_SIGNS, MoveabilityAnalyzer, Trajectory

pytestmark = pytest.mark.slow

FINE_CELL = 13 / 256


@pytest.fixture(scope="module")
def fine_analyzer():
    return MoveabilityAnalyzer(MechanismGeometry.reference(), min_cell=FINE_CELL)


@pytest.fixture(scope="module")
def counts(fine_analyzer):
    return {(mode, sign): fine_analyzer.aspect_map(mode, sign).count() for mode in WorkingMode for sign in DET_SIGNS}


def test_one_mode_splits_into_two_aspects(counts):
    for sign in DET_SIGNS:
        assert sorted(counts[(mode, sign)] for mode in WorkingMode) == [1, 1, 1, 2]


def test_mirrored_maps_have_equal_counts(counts):
    for mode in WorkingMode:
        assert counts[(mode, 1)] == counts[(mode.mirrored, -1)]


def test_the_split_mode_has_no_path_between_its_aspects(fine_analyzer, counts):
    mode, sign = next(key for key, count in counts.items() if count == 2)
    amap = fine_analyzer.aspect_map(mode, sign)
    first, second = (aspect.w_projection.centers() for aspect in amap.aspects)
    start = first[len(first) // 2]
    goal = second[len(second) // 2]
    verdict = fine_analyzer.check_path(Trajectory.of([start, goal]), mode, sign)
    assert not verdict.feasible
    assert isinstance(verdict.start_aspect, AspectId) and isinstance(verdict.goal_aspect, AspectId)
    assert verdict.start_aspect != verdict.goal_aspect
