import json
import math

import numpy as np
import pytest

from mvkit.decomposition.classifier import (
    PointClassifier,
    classify_point_q,
    classify_point_w,
    classify_points_w,
)
from mvkit.decomposition.labels import CellLabel, Space, TreeKind
from mvkit.geometry import ObstaclePolygon, Point2, circle_circle_intersection
from mvkit.kinematics import JointVector, WorkingMode


def test_raised_elbows_are_free_on_negative_branch(five_bar):
    p = Point2(4.0, 4.0)
    assert classify_point_w(five_bar, p, WorkingMode.MF2, det_sign=-1) is CellLabel.FREE
    assert classify_point_w(five_bar, p, WorkingMode.MF2, det_sign=1) is CellLabel.UNREACHABLE
    assert classify_point_w(five_bar, p, WorkingMode.MF2) is CellLabel.FREE


def test_other_modes_collide_at_the_same_point(five_bar):
    p = Point2(4.0, 4.0)
    for mode in (WorkingMode.MF1, WorkingMode.MF3, WorkingMode.MF4):
        assert classify_point_w(five_bar, p, mode) is CellLabel.COLLISION


def test_stretched_leg_is_serial_singular(five_bar):
    assert classify_point_w(five_bar, Point2(12.0, 0.0), WorkingMode.MF1) is CellLabel.SERIAL_SINGULAR


def test_out_of_reach(five_bar):
    assert classify_point_w(five_bar, Point2(20.0, 0.0), WorkingMode.MF1) is CellLabel.UNREACHABLE


def test_obstacle_turns_free_into_collision(five_bar):
    box = ObstaclePolygon((Point2(3.5, 3.5), Point2(4.5, 3.5), Point2(4.5, 4.5), Point2(3.5, 4.5)), "box")
    assert classify_point_w(five_bar, Point2(4.0, 4.0), WorkingMode.MF2, -1, [box]) is CellLabel.COLLISION
    assert classify_point_w(five_bar, Point2(4.0, 4.0), WorkingMode.MF2, -1) is CellLabel.FREE


def test_point_classifiers_share_argument_order(five_bar):
    box = ObstaclePolygon((Point2(3.5, 3.5), Point2(4.5, 3.5), Point2(4.5, 4.5), Point2(3.5, 4.5)), "box")
    in_w = classify_point_w(five_bar, Point2(4.0, 4.0), WorkingMode.MF2, -1, [box])
    in_q = classify_point_q(five_bar, JointVector(math.pi / 2, math.pi / 2), WorkingMode.MF2, -1, [box])
    assert in_w is in_q is CellLabel.COLLISION


def test_joint_space_labels(five_bar):
    q = JointVector(math.pi / 2, math.pi / 2)
    assert classify_point_q(five_bar, q, WorkingMode.MF2, -1) is CellLabel.FREE
    assert classify_point_q(five_bar, q, WorkingMode.MF1, -1) is CellLabel.UNREACHABLE


def test_joint_space_tangent_assembly_is_parallel_singular(five_bar):
    # elbows exactly L3 + L4 = 10 apart
    b1 = Point2(0.0, 7.0)
    b2 = circle_circle_intersection(five_bar.a2, 7.0, b1, 10.0)[0]
    q = JointVector(math.pi / 2, math.atan2(b2.y - five_bar.a2.y, b2.x - five_bar.a2.x))
    for det_sign in (1, -1):
        labels = {classify_point_q(five_bar, q, mode, det_sign) for mode in WorkingMode}
        assert labels == {CellLabel.PARALLEL_SINGULAR}


def test_vectorized_matches_pointwise(five_bar):
    rng = np.random.default_rng(5)
    points = rng.uniform(-9, 17, (200, 2))
    result = classify_points_w(five_bar, points, WorkingMode.MF3, 1)
    for xy, label in zip(points, result.labels):
        assert classify_point_w(five_bar, Point2(*xy), WorkingMode.MF3, det_sign=1) == CellLabel(int(label))


def test_det_is_nan_outside_reach(five_bar):
    result = classify_points_w(five_bar, np.array([[20.0, 0.0], [4.0, 4.0]]), WorkingMode.MF2, -1)
    assert np.isnan(result.det_a[0])
    assert result.det_a[1] == pytest.approx(-24.0)


def test_classifier_dispatch_and_description(five_bar):
    classifier = PointClassifier(five_bar, Space.W, TreeKind.ASPECTS, WorkingMode.MF2, -1)
    out = classifier(np.array([4.0, 4.0]))
    assert out.labels.tolist() == [int(CellLabel.FREE)]
    description = classifier.describe()
    assert json.loads(json.dumps(description)) == description
    assert description["mode"] == 2 and description["det_sign"] == -1


def test_union_kinds(five_bar):
    points = np.array([[4.0, 4.0], [20.0, 0.0]])
    reach = PointClassifier(five_bar, Space.W, TreeKind.REACH)(points)
    assert reach.labels.tolist() == [int(CellLabel.FREE), int(CellLabel.UNREACHABLE)]
    free = PointClassifier(five_bar, Space.W, TreeKind.FREE)(points)
    assert free.labels.tolist() == [int(CellLabel.FREE), int(CellLabel.UNREACHABLE)]
    joints = np.array([[math.pi / 2, math.pi / 2]])
    assert PointClassifier(five_bar, Space.Q, TreeKind.FREE)(joints).labels.tolist() == [int(CellLabel.FREE)]


def test_aspect_classifier_requires_mode(five_bar):
    with pytest.raises(ValueError):
        PointClassifier(five_bar, Space.W, TreeKind.ASPECTS)
    with pytest.raises(ValueError):
        PointClassifier(five_bar, Space.Q, TreeKind.ASPECTS, WorkingMode.MF1, 0)
