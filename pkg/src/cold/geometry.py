"""Planar frames, line intersection, projection and heading estimation.

Conventions
-----------
World coordinates are plain east/north metres (``x`` east, ``y`` north) so
results plot the usual way.  Headings are measured *clockwise* from the world
``+x`` axis, which makes a right turn a positive heading change.  Vehicle
frames are left-handed: ``x`` points forward and ``y`` to the vehicle's right.

Under these rules the unit forward vector of heading ``h`` is
``(cos h, -sin h)`` and the unit right vector is ``(-sin h, -cos h)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_point, check_points
from .exceptions import (
    DegenerateSegmentError,
    GeometryError,
    ParallelLinesError,
    TooFewPointsError,
)

TWO_PI = 2.0 * math.pi
PARALLEL_EPS = 1e-9
DEGENERATE_EPS = 1e-9


def wrap_angle(angle):
    """Normalise an angle (or array of angles) into ``[0, 2*pi)``."""
    wrapped = np.mod(angle, TWO_PI)
    if np.ndim(wrapped) == 0:
        wrapped = float(wrapped)
        # np.mod can return exactly 2*pi for tiny negative inputs
        return 0.0 if wrapped >= TWO_PI else wrapped
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def angle_distance(a, b):
    """Smallest absolute difference between two angles, in ``[0, pi]``."""
    d = wrap_angle(a - b)
    return min(d, TWO_PI - d)


def forward_vector(heading):
    return np.array([math.cos(heading), -math.sin(heading)])


def right_vector(heading):
    return np.array([-math.sin(heading), -math.cos(heading)])


def heading_of(direction):
    """Clockwise heading of a world-frame direction vector."""
    dx, dy = float(direction[0]), float(direction[1])
    return wrap_angle(math.atan2(-dy, dx))


@dataclass(frozen=True)
class Pose2:
    """Vehicle pose in the world frame; heading in radians, clockwise."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    @property
    def position(self):
        return np.array([self.x, self.y])

    @classmethod
    def from_degrees(cls, x, y, heading_deg):
        return cls(x, y, math.radians(heading_deg))


@dataclass(frozen=True)
class RelativePose:
    """Pose of one vehicle seen from another: forward, rightward, clockwise."""

    x_rel: float
    y_rel: float
    psi_rel: float

    def __post_init__(self):
        object.__setattr__(self, "psi_rel", wrap_angle(float(self.psi_rel)))

    @property
    def psi_rel_deg(self):
        return math.degrees(self.psi_rel)


def _rotation(heading):
    # columns: forward and right unit vectors in world coordinates
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -s], [-s, -c]])


def to_world(pose, local):
    """Map vehicle-frame point(s) of ``pose`` into the world frame.

    Accepts a single point of shape (2,) or an array of shape (n, 2).
    """
    local = np.asarray(local, dtype=float)
    rot = _rotation(pose.heading)
    return local @ rot.T + pose.position


def to_local(pose, world):
    """Inverse of :func:`to_world`."""
    world = np.asarray(world, dtype=float)
    rot = _rotation(pose.heading)
    # rot is symmetric and orthogonal, hence its own inverse
    return (world - pose.position) @ rot


def relative_pose(ego, coop):
    """Express ``coop`` in the left-handed frame of ``ego``."""
    x_rel, y_rel = to_local(ego, coop.position)
    return RelativePose(float(x_rel), float(y_rel), coop.heading - ego.heading)


def line_intersection(p1, dir1, p2, dir2):
    """Intersection of the infinite lines ``p1 + a*dir1`` and ``p2 + b*dir2``.

    Raises ``ParallelLinesError`` when the normalised directions are parallel
    (|cross| < 1e-9).
    """
    p1, p2 = check_point(p1, "p1"), check_point(p2, "p2")
    d1 = np.asarray(dir1, dtype=float)
    d2 = np.asarray(dir2, dtype=float)
    n1, n2 = np.linalg.norm(d1), np.linalg.norm(d2)
    if n1 == 0 or n2 == 0:
        raise GeometryError("direction vectors must be nonzero")
    d1, d2 = d1 / n1, d2 / n2
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < PARALLEL_EPS:
        raise ParallelLinesError("lines are parallel")
    diff = p2 - p1
    a = (diff[0] * d2[1] - diff[1] * d2[0]) / cross
    return p1 + a * d1


def orthogonal_foot(p, a, b):
    """Foot of the perpendicular from ``p`` onto the line through ``a`` and ``b``."""
    p, a, b = check_point(p), check_point(a, "a"), check_point(b, "b")
    ab = b - a
    denom = float(ab @ ab)
    if math.sqrt(denom) < DEGENERATE_EPS:
        raise DegenerateSegmentError("segment endpoints coincide")
    return a + ((p - a) @ ab) / denom * ab


def _principal_direction(pts):
    centred = pts - pts.mean(axis=0)
    # leading right-singular vector = total least-squares line direction
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    direction = vt[0]
    if direction @ (pts[-1] - pts[0]) < 0:
        direction = -direction
    return direction


def tail_direction(points, k=5):
    """Unit direction of the least-squares line through the last ``k`` points,
    oriented along point order."""
    pts = check_points(points, min_points=2)
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(pts) < k:
        raise TooFewPointsError(f"need {k} points, got {len(pts)}")
    return _principal_direction(pts[-k:])


def head_direction(points, k=5):
    """Like :func:`tail_direction` but for the first ``k`` points."""
    pts = check_points(points, min_points=2)
    if len(pts) < k:
        raise TooFewPointsError(f"need {k} points, got {len(pts)}")
    return _principal_direction(pts[:k])


def tail_heading(points, k=5):
    """Clockwise heading of the polyline's end, from the last ``k`` points."""
    return heading_of(tail_direction(points, k))


def head_heading(points, k=5):
    return heading_of(head_direction(points, k))

