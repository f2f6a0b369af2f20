"""Synthetic ground-truth roads and polyline services.

A road is a centreline made of straights and circular arcs joined with C1
continuity.  Lane boundaries are exact offset curves of the centreline, so
they stay available as continuous curves (see :class:`Curve`) and can be
sampled at any spacing.
"""

from dataclasses import dataclass, field
import math
from typing import Sequence, Union

import numpy as np

from ._validation import check_point, check_points, check_positive
from .exceptions import SelfIntersectingError
from .geometry import Pose2, forward_vector, right_vector, wrap_angle

WORLD = "world"
DEFAULT_LANE_WIDTH = 4.0
_LENGTH_SLACK = 1e-9


def vehicle_frame(vehicle_id):
    return f"vehicle:{vehicle_id}"


# --------------------------------------------------------------------------
# polylines


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered 2-D point sequence tagged with the frame it lives in."""

    points: np.ndarray
    frame: str = WORLD

    def __post_init__(self):
        pts = check_points(self.points, min_points=2, name="polyline")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ValueError("polyline has repeated consecutive points")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, Polyline):
            return NotImplemented
        return self.frame == other.frame and np.array_equal(self.points, other.points)

    @property
    def length(self):
        return float(cumulative_length(self.points)[-1])

    def reversed(self):
        return Polyline(self.points[::-1], self.frame)


@dataclass(frozen=True, eq=False)
class Lane:
    left: Polyline
    right: Polyline
    width: float = DEFAULT_LANE_WIDTH

    def __post_init__(self):
        if self.left.frame != self.right.frame:
            raise ValueError("lane boundaries must share a frame")
        check_positive(self.width, "lane width")

    @property
    def frame(self):
        return self.left.frame


def cumulative_length(points):
    points = np.asarray(points, dtype=float)
    seg = np.hypot(*np.diff(points, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def interpolate_along(points, stations, cum=None):
    """Points at arc-length ``stations`` along a polyline (linear, clamped)."""
    points = np.asarray(points, dtype=float)
    if cum is None:
        cum = cumulative_length(points)
    stations = np.clip(np.asarray(stations, dtype=float), 0.0, cum[-1])
    return np.column_stack([np.interp(stations, cum, points[:, 0]),
                            np.interp(stations, cum, points[:, 1])])


def uniform_stations(start, stop, spacing):
    """Stations ``start, start+spacing, ...`` plus ``stop`` itself.

    Every step has the nominal length except possibly the last, shorter one.
    """
    length = stop - start
    if length <= _LENGTH_SLACK:
        return np.array([start, stop])
    n = max(1, math.ceil(length / spacing - 1e-6))
    stations = start + spacing * np.arange(n)
    return np.append(stations, stop)


def resample_polyline(points, spacing, start=0.0):
    """Resample a polyline at ``spacing`` metres from arc length ``start``."""
    cum = cumulative_length(points)
    stations = uniform_stations(start, cum[-1], spacing)
    return interpolate_along(points, stations, cum)


def project_onto_polyline(points, p, cum=None):
    """Closest point on the polyline's segments to ``p``.

    Returns ``(station, point, distance)`` where ``station`` is the arc length
    of the foot point from the first vertex.
    """
    points = np.asarray(points, dtype=float)
    if cum is None:
        cum = cumulative_length(points)
    a, b = points[:-1], points[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    frac = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
    feet = a + frac[:, None] * ab
    dist = np.hypot(*(feet - p).T)
    i = int(np.argmin(dist))
    return float(cum[i] + frac[i] * (cum[i + 1] - cum[i])), feet[i], float(dist[i])


def closest_point(gt, p):
    """GT sample nearest to ``p`` and its distance; ties go to the lowest index."""
    pts = gt.points if isinstance(gt, Polyline) else check_points(gt)
    p = check_point(p)
    d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
    i = int(np.argmin(d))
    return pts[i].copy(), float(d[i])


# --------------------------------------------------------------------------
# road specification


@dataclass(frozen=True)
class Straight:
    length: float

    def __post_init__(self):
        check_positive(self.length, "straight length")


@dataclass(frozen=True)
class Arc:
    radius: float
    angle: float  # degrees
    direction: str = "right"

    def __post_init__(self):
        check_positive(self.radius, "arc radius")
        if not 0 < self.angle <= 180:
            raise ValueError(f"arc angle must be in (0, 180] degrees, got {self.angle}")
        if self.direction not in ("left", "right"):
            raise ValueError(f"arc direction must be 'left' or 'right', got {self.direction!r}")

    @property
    def length(self):
        return self.radius * math.radians(self.angle)

    @property
    def curvature(self):
        # right turns increase the clockwise heading
        sign = 1.0 if self.direction == "right" else -1.0
        return sign / self.radius


Segment = Union[Straight, Arc]


@dataclass(frozen=True)
class RoadSpec:
    segments: Sequence[Segment]
    lane_width: float = DEFAULT_LANE_WIDTH

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("road needs at least one segment")
        check_positive(self.lane_width, "lane width")

    @property
    def length(self):
        return sum(seg.length for seg in self.segments)


# --------------------------------------------------------------------------
# continuous curves


@dataclass(frozen=True)
class _Piece:
    start: np.ndarray
    heading: float
    length: float
    curvature: float


class Curve:
    """Piecewise straight/arc curve parameterised by its own arc length.

    ``center_breaks`` holds the centreline stations at the piece joints so an
    offset curve can translate centreline stations into its own.
    """

    def __init__(self, pieces, center_breaks=None):
        self.pieces = tuple(pieces)
        lengths = np.array([pc.length for pc in self.pieces])
        self.breaks = np.concatenate([[0.0], np.cumsum(lengths)])
        if center_breaks is None:
            center_breaks = self.breaks
        self.center_breaks = np.asarray(center_breaks, dtype=float)

    @property
    def length(self):
        return float(self.breaks[-1])

    def _locate(self, u):
        idx = np.searchsorted(self.breaks, u, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def point_at(self, u):
        """Point(s) at arc length ``u`` (scalar or array)."""
        scalar = np.ndim(u) == 0
        u = np.clip(np.atleast_1d(np.asarray(u, dtype=float)), 0.0, self.length)
        out = np.empty((len(u), 2))
        idx = self._locate(u)
        for k in np.unique(idx):
            mask = idx == k
            pc = self.pieces[k]
            local = u[mask] - self.breaks[k]
            h0, kap = pc.heading, pc.curvature
            if abs(kap) < 1e-12:
                out[mask] = pc.start + np.outer(local, forward_vector(h0))
            else:
                h = h0 + kap * local
                out[mask, 0] = pc.start[0] + (np.sin(h) - math.sin(h0)) / kap
                out[mask, 1] = pc.start[1] + (np.cos(h) - math.cos(h0)) / kap
        return out[0] if scalar else out

    def heading_at(self, u):
        scalar = np.ndim(u) == 0
        u = np.clip(np.atleast_1d(np.asarray(u, dtype=float)), 0.0, self.length)
        idx = self._locate(u)
        kap = np.array([self.pieces[k].curvature for k in idx])
        h0 = np.array([self.pieces[k].heading for k in idx])
        h = wrap_angle(h0 + kap * (u - self.breaks[idx]))
        return float(h[0]) if scalar else h

    def station_from_center(self, s):
        """Own arc length at centreline station ``s``."""
        return np.interp(s, self.center_breaks, self.breaks)

    def center_from_station(self, u):
        return np.interp(u, self.breaks, self.center_breaks)

    def project(self, p):
        """Closest point on the curve: returns ``(station, distance)``."""
        p = check_point(p)
        best = (0.0, math.inf)
        for k, pc in enumerate(self.pieces):
            if abs(pc.curvature) < 1e-12:
                local = float(np.clip((p - pc.start) @ forward_vector(pc.heading), 0.0, pc.length))
            else:
                centre = pc.start + right_vector(pc.heading) / pc.curvature
                v = p - centre
                if pc.curvature < 0:
                    v = -v
                h = math.atan2(v[0], v[1])
                mid = pc.heading + pc.curvature * pc.length / 2
                delta = (h - mid + math.pi) % (2 * math.pi) - math.pi
                local = float(np.clip(pc.length / 2 + delta / pc.curvature, 0.0, pc.length))
            u = self.breaks[k] + local
            d = float(np.hypot(*(self.point_at(u) - p)))
            if d < best[1]:
                best = (u, d)
        return best

    def offset(self, d):
        """Offset curve ``d`` metres to the left (negative: to the right)."""
        pieces = []
        for pc in self.pieces:
            scale = 1.0 + pc.curvature * d
            if scale <= 1e-9:
                raise SelfIntersectingError(
                    f"offset {abs(d)} m reaches the arc radius {1 / abs(pc.curvature)} m")
            left = -right_vector(pc.heading)
            pieces.append(_Piece(pc.start + d * left, pc.heading,
                                 pc.length * scale, pc.curvature / scale))
        return Curve(pieces, center_breaks=self.center_breaks)


@dataclass(frozen=True, eq=False)
class Road:
    """Ground truth: centreline plus left/right boundary curves (world frame)."""

    spec: RoadSpec
    centerline: Curve
    left: Curve
    right: Curve
    width: float = field(default=DEFAULT_LANE_WIDTH)

    @property
    def length(self):
        return self.centerline.length

    def boundary(self, side):
        if side not in ("left", "right"):
            raise ValueError(side)
        return self.left if side == "left" else self.right

    def pose_at(self, s):
        p = self.centerline.point_at(s)
        return Pose2(p[0], p[1], self.centerline.heading_at(s))

    def sample(self, spacing):
        return Lane(sample_polyline(self.left, spacing),
                    sample_polyline(self.right, spacing), self.width)


def build_road(spec, start=Pose2(0.0, 0.0, 0.0)):
    """Construct the ground-truth road described by ``spec``."""
    pieces = []
    point, heading = start.position, start.heading
    for seg in spec.segments:
        kap = 0.0 if isinstance(seg, Straight) else seg.curvature
        pc = _Piece(point.copy(), heading, seg.length, kap)
        pieces.append(pc)
        tmp = Curve([pc])
        point = tmp.point_at(seg.length)
        heading = wrap_angle(heading + kap * seg.length)
    centre = Curve(pieces)
    half = spec.lane_width / 2.0
    return Road(spec, centre, centre.offset(half), centre.offset(-half), spec.lane_width)


def sample_polyline(curve, spacing, start=0.0, stop=None, frame=WORLD):
    """Sample ``curve`` at uniform arc-length steps, both endpoints included."""
    spacing = check_positive(spacing, "spacing")
    stop = curve.length if stop is None else min(stop, curve.length)
    return Polyline(curve.point_at(uniform_stations(start, stop, spacing)), frame)
