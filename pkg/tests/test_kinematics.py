import math

import numpy as np
import pytest

from mvkit.errors import ConfigError, ParallelSingularError
from mvkit.geometry import Point2, circle_circle_intersection
from mvkit.kinematics import (
    JacobianPair,
    JointVector,
    MechanismConfiguration,
    MechanismGeometry,
    PoseVector,
    Singularity,
    WorkingMode,
    angular_distance,
    closure_residual,
    forward_branch_batch,
    forward_kinematics,
    inverse_branch_batch,
    inverse_kinematics,
    jacobians,
    normalize_angle,
    velocity_transfer,
    working_mode_of,
)


def test_reference_geometry_defaults(five_bar):
    assert five_bar.a2 == Point2(8.0, 0.0)
    assert five_bar.reach(1) == (2.0, 12.0)


def test_inconsistent_anchor_rejected():
    with pytest.raises(ConfigError) as exc:
        MechanismGeometry(L0=8, L1=7, L2=7, L3=5, L4=5, a2=Point2(9, 0))
    assert exc.value.code == "GEOMETRY-INCONSISTENT"


def test_negative_length_rejected():
    with pytest.raises(ConfigError) as exc:
        MechanismGeometry.reference(L3=-5.0)
    assert exc.value.code == "BAD-LENGTH"
    assert exc.value.location == "geometry.L3"


def test_normalize_angle():
    assert normalize_angle(-math.pi / 2) == pytest.approx(1.5 * math.pi)
    assert normalize_angle(2 * math.pi) == 0.0
    assert angular_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)


def test_working_modes_enumerated():
    assert [m.index for m in WorkingMode] == [1, 2, 3, 4]
    assert WorkingMode.from_signs(1, -1) is WorkingMode.MF2
    assert WorkingMode.MF1.mirrored is WorkingMode.MF4
    assert WorkingMode.MF2.mirrored is WorkingMode.MF3
    with pytest.raises(ValueError):
        WorkingMode.from_index(5)


def test_inverse_kinematics_four_modes(five_bar):
    x = PoseVector(Point2(4.0, 4.0))
    solutions = inverse_kinematics(five_bar, x)
    assert len(solutions) == 4
    assert {s.mode for s in solutions} == set(WorkingMode)
    for s in solutions:
        assert not s.serial_singular
        np.testing.assert_allclose(closure_residual(five_bar, x, s.q), 0.0, atol=1e-9)


def test_inverse_solution_of_mode_two(five_bar):
    x = PoseVector(Point2(4.0, 4.0))
    by_mode = {s.mode: s.q for s in inverse_kinematics(five_bar, x)}
    q = by_mode[WorkingMode.MF2]
    assert q.theta1 == pytest.approx(math.pi / 2)
    assert q.theta2 == pytest.approx(math.pi / 2)
    c = MechanismConfiguration.build(five_bar, x, q)
    jp = jacobians(five_bar, c)
    assert jp.detA == pytest.approx(-24.0)
    assert working_mode_of(c, jp) is WorkingMode.MF2


def test_forward_kinematics_branches(five_bar):
    result = forward_kinematics(five_bar, JointVector(math.pi / 2, math.pi / 2))
    assert len(result) == 2
    upper, lower = result
    assert (upper.pose.p.x, upper.pose.p.y) == pytest.approx((4.0, 10.0))
    assert upper.det_sign == 1
    assert (lower.pose.p.x, lower.pose.p.y) == pytest.approx((4.0, 4.0))
    assert lower.det_sign == -1


def test_unreachable_pose_has_no_solution(five_bar):
    assert inverse_kinematics(five_bar, PoseVector(Point2(20.0, 0.0))) == ()


def test_ik_solutions_invert_through_fk(five_bar):
    rng = np.random.default_rng(1)
    for xy in rng.uniform(-10, 10, (100, 2)):
        x = PoseVector(Point2(*xy))
        for s in inverse_kinematics(five_bar, x):
            poses = forward_kinematics(five_bar, s.q)
            assert min(f.pose.p.distance_to(x.p) for f in poses) <= 1e-7


def test_every_nonsingular_branch_has_its_mode(five_bar):
    # 200 x 200 pose grid over the reach square
    axis = np.linspace(-9.0, 17.0, 200)
    gx, gy = np.meshgrid(axis, axis)
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    for mode in WorkingMode:
        batch = inverse_branch_batch(five_bar, points, mode)
        with np.errstate(invalid="ignore"):
            nonsingular = batch.valid & (np.abs(batch.b11) > five_bar.eps_b) & (np.abs(batch.b22) > five_bar.eps_b)
        assert nonsingular.sum() > 0
        assert (np.sign(batch.b11[nonsingular]) == mode.s1).all()
        assert (np.sign(batch.b22[nonsingular]) == mode.s2).all()


def test_fk_ik_roundtrip_on_joint_grid(five_bar):
    # 360 x 360 joint grid, both assembly branches
    axis = np.arange(360) * (2 * math.pi / 360)
    g1, g2 = np.meshgrid(axis, axis)
    joints = np.stack([g1.ravel(), g2.ravel()], axis=1)
    for det_sign in (1, -1):
        batch, count = forward_branch_batch(five_bar, joints, det_sign)
        with np.errstate(invalid="ignore"):
            usable = ((count == 2) & (np.abs(batch.b11) > 1e-2) & (np.abs(batch.b22) > 1e-2)
                      & (np.abs(batch.det_a) > 1e-2))
        for mode in WorkingMode:
            rows = usable & (np.sign(batch.b11) == mode.s1) & (np.sign(batch.b22) == mode.s2)
            if not rows.any():
                continue
            back = inverse_branch_batch(five_bar, batch.p[rows], mode)
            assert back.valid.all()
            diff = np.abs(np.mod(back.theta - joints[rows] + math.pi, 2 * math.pi) - math.pi)
            assert diff.max() <= 1e-9


def test_velocity_model_against_finite_differences(five_bar):
    rng = np.random.default_rng(2)
    h = 1e-6
    checked = 0
    while checked < 1000:
        q = JointVector(*rng.uniform(0, 2 * math.pi, 2))
        result = forward_kinematics(five_bar, q)
        if not isinstance(result, tuple) or len(result) != 2:
            continue
        branch = result[rng.integers(2)]
        c = MechanismConfiguration.build(five_bar, branch.pose, q)
        jp = jacobians(five_bar, c)
        if abs(jp.detA) < 1.0 or abs(jp.B[0, 0]) < 1.0 or abs(jp.B[1, 1]) < 1.0:
            continue
        assert jp.B[0, 1] == 0.0 and jp.B[1, 0] == 0.0
        qdot = rng.uniform(-1, 1, 2)

        def pose_at(step):
            moved = JointVector(q.theta1 + step * qdot[0], q.theta2 + step * qdot[1])
            same = [f for f in forward_kinematics(five_bar, moved) if f.det_sign == branch.det_sign]
            return same[0].pose.p.as_array()

        t = (pose_at(h) - pose_at(-h)) / (2 * h)
        residual = jp.A @ t + jp.B @ qdot
        scale = np.linalg.norm(jp.B @ qdot)
        assert np.linalg.norm(residual) <= 1e-4 * max(scale, 1.0)
        np.testing.assert_allclose(velocity_transfer(jp, qdot), t, rtol=1e-4, atol=1e-6)
        checked += 1


def test_velocity_transfer_guards_parallel_singularity():
    jp = JacobianPair(A=np.array([[1.0, 2.0], [2.0, 4.0]]), B=np.eye(2))
    with pytest.raises(ParallelSingularError):
        velocity_transfer(jp, [1.0, 0.0])


def test_serial_singularities_on_stretched_and_folded_legs(five_bar):
    # P on the circles |p - a1| = 12 (stretched) and |p - a1| = 2 (folded)
    checked = 0
    for radius in (12.0, 2.0):
        for phi in np.linspace(0, 2 * math.pi, 500, endpoint=False):
            p = Point2(radius * math.cos(phi), radius * math.sin(phi))
            d2 = p.distance_to(five_bar.a2)
            if not 2.01 < d2 < 11.99:
                continue
            solutions = inverse_kinematics(five_bar, PoseVector(p))
            assert solutions
            for s in solutions:
                assert s.serial_singular and s.mode is None
                assert np.abs(closure_residual(five_bar, PoseVector(p), s.q)).max() <= 1e-6
            checked += 1
    assert checked > 100


def test_parallel_singularities_at_collinear_elbows(five_bar):
    # elbows 10 = L3 + L4 apart put P on the segment b1-b2
    checked = 0
    for theta1 in np.linspace(0, 2 * math.pi, 1000, endpoint=False):
        b1 = Point2(7 * math.cos(theta1), 7 * math.sin(theta1))
        hits = circle_circle_intersection(five_bar.a2, 7.0, b1, 10.0)
        if not isinstance(hits, tuple) or len(hits) != 2:
            continue
        b2 = hits[0]
        q = JointVector(theta1, math.atan2(b2.y - five_bar.a2.y, b2.x - five_bar.a2.x))
        result = forward_kinematics(five_bar, q)
        assert len(result) == 1
        assert result[0].det_sign == 0
        c = MechanismConfiguration.build(five_bar, result[0].pose, q)
        assert abs(jacobians(five_bar, c).detA) <= 1e-6
        checked += 1
    assert checked > 100


def test_working_mode_serial_when_b_vanishes(five_bar):
    jp = JacobianPair(A=np.eye(2), B=np.diag([0.0, 3.0]), eps_a=five_bar.eps_a, eps_b=five_bar.eps_b)
    assert working_mode_of(None, jp) is Singularity.SERIAL
