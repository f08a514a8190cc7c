import json

import numpy as np
import pytest
from scipy import ndimage

from mvkit.decomposition.aspects import AspectId
from mvkit.decomposition.labels import CellLabel
from mvkit.errors import ConfigError
from mvkit.geometry import Point2
from mvkit.kinematics import WorkingMode
from mvkit.moveability import (
    FeasibilityVerdict,
    MoveabilityAnalyzer,
    NotFree,
    Trajectory,
    check_path,
    locate,
    moveability,
)
from mvkit.utils.config import load_trajectory

from conftest import COARSE_CELL


def test_trajectory_validation():
    with pytest.raises(ConfigError) as exc:
        Trajectory.of([[4, 4]])
    assert exc.value.code == "BAD-TRAJECTORY"
    with pytest.raises(ConfigError) as exc:
        Trajectory.of([[4, 4], [4, 4], [5, 5]])
    assert exc.value.location == "waypoints.1"
    with pytest.raises(ConfigError):
        Trajectory.of([[4, 4], [5, 5]], step=0.0)


def test_trajectory_geometry():
    t = Trajectory.of([[0, 0], [3, 4], [3, 0]])
    assert t.length == 9.0
    assert t.reversed().waypoints[0] == Point2(3.0, 0.0)


def test_halving_the_step_only_adds_samples():
    t = Trajectory.of([[4, 4], [4, 5], [5.3, 5.1]])
    coarse_s, coarse = t.samples(0.1)
    fine_s, fine = t.samples(0.05)
    assert coarse_s[0] == 0.0 and coarse_s[-1] == pytest.approx(t.length)
    assert np.diff(coarse_s).max() <= 0.1 + 1e-12
    fine_rows = {tuple(np.round(p, 12)) for p in fine}
    assert all(tuple(np.round(p, 12)) in fine_rows for p in coarse)
    assert len(fine) > len(coarse)


def test_path_through_the_base_is_blocked(analyzer, sample_data):
    t = load_trajectory(sample_data / "base_crossing.json")
    verdict = analyzer.check_path(t, WorkingMode.MF2, -1)
    assert not verdict.feasible
    assert verdict.aspect_id is None
    assert verdict.first_blocker.reason is CellLabel.COLLISION
    assert 0.0 < verdict.first_blocker.position < 8.0
    assert isinstance(verdict.start_aspect, AspectId)


def test_short_path_stays_in_one_aspect(analyzer, sample_data):
    t = load_trajectory(sample_data / "single_aspect.json")
    verdict = analyzer.check_path(t, WorkingMode.MF2, -1)
    assert verdict.feasible
    assert verdict.first_blocker is None
    assert verdict.aspect_id == verdict.start_aspect == verdict.goal_aspect
    back = analyzer.check_path(t.reversed(), WorkingMode.MF2, -1)
    assert back.feasible and back.aspect_id == verdict.aspect_id
    doc = verdict.to_dict()
    assert json.loads(json.dumps(doc)) == doc
    assert doc["mode"] == 2 and doc["det_sign"] == -1


def test_wrong_branch_is_blocked(analyzer, sample_data):
    t = load_trajectory(sample_data / "single_aspect.json")
    verdict = analyzer.check_path(t, WorkingMode.MF2, 1)
    assert not verdict.feasible
    assert verdict.first_blocker.position == 0.0
    assert verdict.start_aspect == NotFree(CellLabel.UNREACHABLE)


def test_stretched_leg_locates_as_serial_singular(analyzer):
    where = analyzer.locate(Point2(12.0, 0.0), WorkingMode.MF1, -1)
    assert where == NotFree(CellLabel.SERIAL_SINGULAR)
    assert str(where) == "NOT-FREE (SERIAL_SINGULAR)"


def test_moveability_between_nearby_points(analyzer):
    shared = analyzer.moveability(Point2(4.0, 4.0), Point2(5.0, 5.0))
    assert (WorkingMode.MF2, -1) in {(mode, sign) for mode, sign, _ in shared}
    for mode, sign, aspect in shared:
        assert aspect.mode_index == mode.index and aspect.det_sign == sign


def _interior_point(amap, index):
    # cell of the aspect farthest from its edge
    mask = amap.aspects[index - 1].mask
    depth = ndimage.distance_transform_edt(mask)
    iy, ix = np.unravel_index(np.argmax(depth), depth.shape)
    tree = amap.tree
    return Point2(tree.bounds.x0 + (ix + 0.5) * tree.min_cell, tree.bounds.y0 + (iy + 0.5) * tree.min_cell)


@pytest.fixture(scope="module")
def medium_analyzer(five_bar):
    return MoveabilityAnalyzer(five_bar, min_cell=COARSE_CELL / 2)


def test_path_between_two_aspects_is_infeasible(medium_analyzer):
    # mode 3, det A positive: the region below the base plus a cap near the top of the workspace
    mode, sign = WorkingMode.MF3, 1
    amap = medium_analyzer.aspect_map(mode, sign)
    assert amap.count() == 2
    start, goal = _interior_point(amap, 1), _interior_point(amap, 2)
    assert start.y < 0.0 < 10.0 < goal.y
    verdict = medium_analyzer.check_path(Trajectory((start, goal)), mode, sign)
    assert not verdict.feasible
    assert verdict.start_aspect == amap.aspects[0].id
    assert verdict.goal_aspect == amap.aspects[1].id
    assert verdict.first_blocker.reason is not CellLabel.FREE
    assert 0.0 < verdict.first_blocker.position < Trajectory((start, goal)).length
    assert (mode, sign) not in {(m, s) for m, s, _ in medium_analyzer.moveability(start, goal)}


def test_feasible_verdict_needs_an_aspect():
    with pytest.raises(ValueError):
        FeasibilityVerdict(feasible=True, mode=WorkingMode.MF2, det_sign=-1)


def test_module_level_helpers(five_bar, analyzer):
    p = Point2(4.0, 4.0)
    assert locate(five_bar, p, WorkingMode.MF2, -1, min_cell=COARSE_CELL) == analyzer.locate(p, WorkingMode.MF2, -1)
    t = Trajectory.of([[4, 4], [4, 5]])
    assert check_path(five_bar, t, WorkingMode.MF2, -1, min_cell=COARSE_CELL).feasible
    assert moveability(five_bar, p, Point2(4.0, 5.0), min_cell=COARSE_CELL)
