import math

import numpy as np
import pytest

from mvkit.errors import ConfigError
from mvkit.geometry import (
    Capsule2,
    Degeneracy,
    ObstaclePolygon,
    Point2,
    Segment2,
    capsule_capsule_intersects,
    capsule_polygon_intersects,
    circle_circle_intersection,
    circle_circle_intersection_batch,
    segment_point_distance,
    segment_segment_distance,
)

SQUARE = ObstaclePolygon((Point2(10, 10), Point2(11, 10), Point2(11, 11), Point2(10, 11)), "square")


def capsule(a, b, r):
    return Capsule2(Segment2(Point2(*a), Point2(*b)), r)


def test_two_circle_points_left_first():
    hits = circle_circle_intersection(Point2(0, 7), 5, Point2(8, 7), 5)
    assert len(hits) == 2
    assert (hits[0].x, hits[0].y) == pytest.approx((4, 10))
    assert (hits[1].x, hits[1].y) == pytest.approx((4, 4))


def test_circles_too_far_apart():
    assert circle_circle_intersection(Point2(0, 0), 2, Point2(10, 0), 3) == ()


def test_external_tangency_single_point():
    hits = circle_circle_intersection(Point2(0, 0), 5, Point2(10, 0), 5)
    assert len(hits) == 1
    assert (hits[0].x, hits[0].y) == pytest.approx((5, 0))


def test_internal_tangency_single_point():
    hits = circle_circle_intersection(Point2(0, 0), 7, Point2(2, 0), 5)
    assert len(hits) == 1
    assert (hits[0].x, hits[0].y) == pytest.approx((7, 0))


def test_concentric_circles():
    assert circle_circle_intersection(Point2(1, 1), 3, Point2(1, 1), 3) is Degeneracy.CONCENTRIC
    assert circle_circle_intersection(Point2(1, 1), 3, Point2(1, 1), 4) == ()


def test_intersections_satisfy_both_circles():
    rng = np.random.default_rng(7)
    for _ in range(200):
        c1, c2 = Point2(*rng.uniform(-5, 5, 2)), Point2(*rng.uniform(-5, 5, 2))
        r1, r2 = rng.uniform(0.5, 6, 2)
        hits = circle_circle_intersection(c1, r1, c2, r2)
        if hits is Degeneracy.CONCENTRIC:
            continue
        for p in hits:
            assert abs(p.distance_to(c1) - r1) <= 1e-8
            assert abs(p.distance_to(c2) - r2) <= 1e-8


def test_batch_matches_scalar():
    rng = np.random.default_rng(11)
    c1 = rng.uniform(-5, 5, (300, 2))
    c2 = rng.uniform(-5, 5, (300, 2))
    r1 = rng.uniform(0.5, 6, 300)
    r2 = rng.uniform(0.5, 6, 300)
    left, right, count = circle_circle_intersection_batch(c1, r1, c2, r2)
    for k in range(300):
        hits = circle_circle_intersection(Point2(*c1[k]), r1[k], Point2(*c2[k]), r2[k])
        assert count[k] == len(hits)
        if len(hits) == 2:
            np.testing.assert_allclose(left[k], hits[0].as_array(), atol=1e-9)
            np.testing.assert_allclose(right[k], hits[1].as_array(), atol=1e-9)


def test_capsule_examples():
    assert not capsule_capsule_intersects(capsule((0, 0), (0, 7), 0), capsule((8, 0), (8, 7), 0))
    assert capsule_capsule_intersects(capsule((0, 0), (8, 0), 0.1), capsule((4, -1), (4, 1), 0.1))
    # gap equals the sum of radii: boundary contact counts
    assert capsule_capsule_intersects(capsule((0, 0), (4, 0), 0.5), capsule((5, 0), (9, 0), 0.5))


def test_capsule_intersection_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(300):
        p = capsule(rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2), rng.uniform(0, 1))
        q = capsule(rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2), rng.uniform(0, 1))
        assert capsule_capsule_intersects(p, q) == capsule_capsule_intersects(q, p)


def test_segment_distance_against_sampling():
    rng = np.random.default_rng(5)
    n = 400
    t = np.linspace(0.0, 1.0, n)
    for _ in range(50):
        a0, a1, b0, b1 = (rng.uniform(-3, 3, 2) for _ in range(4))
        exact = segment_segment_distance(Segment2(Point2(*a0), Point2(*a1)), Segment2(Point2(*b0), Point2(*b1)))
        s = a0 + t[:, None] * (a1 - a0)
        u = b0 + t[:, None] * (b1 - b0)
        brute = np.min(np.hypot(*(s[:, None, :] - u[None, :, :]).transpose(2, 0, 1)))
        spacing = (np.linalg.norm(a1 - a0) + np.linalg.norm(b1 - b0)) / (n - 1)
        assert exact <= brute + 1e-12
        assert brute - exact <= spacing


def test_rigid_motion_invariance():
    rng = np.random.default_rng(9)
    angle = 0.7
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    shift = np.array([3.0, -2.0])

    def moved(v):
        return Point2(*(rot @ v + shift))

    for _ in range(200):
        pts = [rng.uniform(-3, 3, 2) for _ in range(4)]
        before = segment_segment_distance(Segment2(Point2(*pts[0]), Point2(*pts[1])),
                                          Segment2(Point2(*pts[2]), Point2(*pts[3])))
        after = segment_segment_distance(Segment2(moved(pts[0]), moved(pts[1])),
                                         Segment2(moved(pts[2]), moved(pts[3])))
        assert after == pytest.approx(before, rel=1e-9, abs=1e-12)


def test_capsule_polygon_examples():
    assert not capsule_polygon_intersects(capsule((0, 0), (1, 0), 0.1), SQUARE)
    assert capsule_polygon_intersects(capsule((10.5, 10.5), (10.6, 10.5), 0.01), SQUARE)
    assert capsule_polygon_intersects(capsule((9, 10.5), (12, 10.5), 0), SQUARE)


def test_segment_point_distance_examples():
    base = Segment2(Point2(0, 0), Point2(8, 0))
    assert segment_point_distance(base, Point2(4, 3)) == pytest.approx(3)
    assert segment_point_distance(base, Point2(10, 0)) == pytest.approx(2)
    assert segment_point_distance(Segment2(Point2(0, 0), Point2(0, 0)), Point2(3, 4)) == pytest.approx(5)


def test_polygon_orientation_normalized():
    clockwise = ObstaclePolygon((Point2(0, 0), Point2(0, 1), Point2(1, 1), Point2(1, 0)), "cw")
    assert clockwise.vertices[0] == Point2(1, 0)
    assert clockwise.shape.exterior.is_ccw


def test_bad_polygons_rejected():
    with pytest.raises(ConfigError) as exc:
        ObstaclePolygon((Point2(0, 0), Point2(1, 1), Point2(1, 0), Point2(0, 1)), "bowtie")
    assert exc.value.code == "BAD-POLYGON"
    with pytest.raises(ConfigError):
        ObstaclePolygon((Point2(0, 0), Point2(1, 1)), "short")


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Point2(0.0, float("inf"))
