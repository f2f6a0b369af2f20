import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cold.exceptions import DegenerateSegmentError, GeometryError, ParallelLinesError, TooFewPointsError
from cold.geometry import (
    Pose2,
    angle_distance,
    head_heading,
    line_intersection,
    orthogonal_foot,
    relative_pose,
    tail_heading,
    to_local,
    to_world,
    wrap_angle,
)

coord = st.floats(-1e4, 1e4, allow_nan=False)
angle = st.floats(-20, 20, allow_nan=False)


def rotation_oracle(heading):
    # forward axis (cos h, -sin h), right axis (-sin h, -cos h) in a y-up world
    fwd = np.array([math.cos(heading), -math.sin(heading)])
    right = np.array([-math.sin(heading), -math.cos(heading)])
    return fwd, right


class TestTransforms:
    def test_zero_pose_keeps_forward_and_flips_right(self):
        # vehicle y points right, which is world -y at heading 0
        assert np.allclose(to_world(Pose2(0, 0, 0), [3, 1]), [3, -1])

    def test_pure_translation(self):
        assert np.allclose(to_world(Pose2(10, 0, 0), [0, 0]), [10, 0])

    def test_quarter_turn_clockwise(self):
        pose = Pose2.from_degrees(0, 0, 90)
        fwd, _ = rotation_oracle(pose.heading)
        assert np.allclose(to_world(pose, [1, 0]), fwd, atol=1e-12)
        assert np.allclose(fwd, [0, -1], atol=1e-12)

    @given(coord, coord, angle, coord, coord)
    def test_matches_oracle(self, x, y, h, lx, ly):
        pose = Pose2(x, y, h)
        fwd, right = rotation_oracle(pose.heading)
        expected = np.array([x, y]) + lx * fwd + ly * right
        assert np.allclose(to_world(pose, [lx, ly]), expected, atol=1e-8)

    @given(coord, coord, angle, coord, coord)
    def test_roundtrip(self, x, y, h, px, py):
        pose = Pose2(x, y, h)
        p = np.array([px, py])
        back = to_local(pose, to_world(pose, p))
        assert np.allclose(back, p, rtol=0, atol=1e-10)

    def test_batch_shape(self):
        pts = np.random.default_rng(0).normal(size=(7, 2))
        assert to_world(Pose2(1, 2, 0.3), pts).shape == (7, 2)


class TestPose:
    def test_heading_normalised(self):
        assert Pose2(0, 0, -math.pi / 2).heading == pytest.approx(3 * math.pi / 2)
        assert 0 <= Pose2(0, 0, 7 * math.pi).heading < 2 * math.pi

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Pose2(float("nan"), 0, 0)

    @given(angle)
    def test_wrap_range(self, a):
        w = wrap_angle(a)
        assert 0 <= w < 2 * math.pi

    def test_angle_distance_wraps(self):
        assert angle_distance(math.radians(359), math.radians(1)) == pytest.approx(math.radians(2))


class TestRelativePose:
    def test_collinear(self):
        rel = relative_pose(Pose2(0, 0, 0), Pose2(20, 0, 0))
        assert (rel.x_rel, rel.y_rel, rel.psi_rel) == pytest.approx((20, 0, 0))

    def test_identity(self):
        rel = relative_pose(Pose2(0, 0, 0), Pose2(0, 0, 0))
        assert (rel.x_rel, rel.y_rel, rel.psi_rel) == (0, 0, 0)

    def test_ahead_right(self):
        ego = Pose2.from_degrees(5, 5, 45)
        fwd, right = rotation_oracle(ego.heading)
        coop_pos = ego.position + 10 * fwd + 3 * right
        rel = relative_pose(ego, Pose2(*coop_pos, ego.heading))
        assert rel.x_rel == pytest.approx(10) and rel.y_rel == pytest.approx(3)

    def test_right_turn_gives_ninety(self):
        rel = relative_pose(Pose2(0, 0, 0), Pose2.from_degrees(30, -10, 90))
        assert rel.psi_rel_deg == pytest.approx(90)
        assert rel.y_rel > 0

    @given(coord, coord, angle)
    def test_self_is_zero(self, x, y, h):
        p = Pose2(x, y, h)
        rel = relative_pose(p, p)
        assert rel.x_rel == pytest.approx(0, abs=1e-9) and rel.y_rel == pytest.approx(0, abs=1e-9)
        assert rel.psi_rel == 0


class TestLineIntersection:
    def test_axis_aligned(self):
        assert np.allclose(line_intersection([0, 0], [1, 0], [5, -5], [0, 1]), [5, 0])

    def test_parallel(self):
        with pytest.raises(ParallelLinesError):
            line_intersection([0, 0], [1, 0], [0, 1], [1, 0])

    def test_sloped(self):
        # y = x and y = -(x - 10) meet at (5, 5)
        assert np.allclose(line_intersection([0, 0], [1, 1], [10, 0], [-1, 1]), [5, 5])

    def test_zero_direction(self):
        with pytest.raises(GeometryError):
            line_intersection([0, 0], [0, 0], [1, 1], [1, 0])

    @given(coord, coord, angle, coord, coord, angle)
    def test_on_both_lines(self, x1, y1, a1, x2, y2, a2):
        d1 = np.array([math.cos(a1), math.sin(a1)])
        d2 = np.array([math.cos(a2), math.sin(a2)])
        cross = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(cross) < 1e-3:
            return
        p = line_intersection([x1, y1], d1, [x2, y2], d2)
        for q, d in (([x1, y1], d1), ([x2, y2], d2)):
            v = p - np.array(q)
            assert abs(v[0] * d[1] - v[1] * d[0]) < 1e-9 * max(1.0, np.abs(p).max()) * 1e3


class TestOrthogonalFoot:
    def test_symmetric(self):
        assert np.allclose(orthogonal_foot([5, 5], [0, 0], [10, 0]), [5, 0])

    def test_on_line(self):
        assert np.allclose(orthogonal_foot([4, 8], [0, 0], [3, 6]), [4, 8])

    def test_dot_product_oracle(self):
        p, a, b = np.array([3.0, 4.0]), np.array([0.0, 0.0]), np.array([6.0, 8.0])
        expected = a + (p - a) @ (b - a) / ((b - a) @ (b - a)) * (b - a)
        assert np.allclose(orthogonal_foot(p, a, b), expected)
        assert np.allclose(expected, [3, 4])

    def test_degenerate(self):
        with pytest.raises(DegenerateSegmentError):
            orthogonal_foot([1, 1], [2, 2], [2, 2 + 1e-10])

    @given(coord, coord, coord, coord, coord, coord)
    def test_perpendicular(self, px, py, ax, ay, bx, by):
        a, b, p = np.array([ax, ay]), np.array([bx, by]), np.array([px, py])
        if np.hypot(*(b - a)) < 1e-3:
            return
        f = orthogonal_foot(p, a, b)
        ab = (b - a) / np.linalg.norm(b - a)
        assert abs((p - f) @ ab) < 1e-9 * max(1.0, np.abs(p).max(), np.abs(a).max()) * 10


class TestHeading:
    def test_along_x(self):
        pts = np.column_stack([np.arange(10.0), np.zeros(10)])
        assert tail_heading(pts) == pytest.approx(0)

    def test_along_negative_y_is_right_turn(self):
        pts = np.column_stack([np.zeros(10), -np.arange(10.0)])
        assert math.degrees(tail_heading(pts)) == pytest.approx(90)

    def test_orientation_follows_point_order(self):
        pts = np.column_stack([np.arange(10.0), np.zeros(10)])[::-1]
        assert math.degrees(tail_heading(pts)) == pytest.approx(180)

    def test_head_uses_first_points(self):
        pts = np.vstack([np.column_stack([np.arange(5.0), np.zeros(5)]),
                         np.column_stack([np.full(5, 4.0), -np.arange(1.0, 6.0)])])
        assert head_heading(pts) == pytest.approx(0, abs=1e-9)
        assert math.degrees(tail_heading(pts)) == pytest.approx(90)

    def test_noisy_statistics(self):
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = np.arange(0.0, 10.0, 1.0)
            pts = np.column_stack([x, rng.normal(0, 0.01, len(x))])
            h = tail_heading(pts)
            worst = max(worst, angle_distance(h, 0.0))
        assert math.degrees(worst) < 1.0

    def test_too_few(self):
        with pytest.raises(TooFewPointsError):
            tail_heading(np.array([[0, 0], [1, 0], [2, 0]]), k=5)
