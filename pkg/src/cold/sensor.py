"""Generic lane sensor: forward-looking boundary samples taken from ground truth."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .exceptions import EndOfRoadError, OffRoadError
from .geometry import Pose2, to_local, to_world
from .road import Lane, Polyline, WORLD, uniform_stations, vehicle_frame

SIDES = ("left", "right")


@dataclass(frozen=True)
class ErrorModel:
    """Sensor error: ``none``, ``offset`` (lateral metres, positive = to the
    right) or ``noise`` (lateral Gaussian sigma in metres)."""

    kind: str = "none"
    value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "offset", "noise"):
            raise ValueError(f"unknown error model {self.kind!r}")
        if self.kind == "noise" and self.value < 0:
            raise ValueError("sigma must be >= 0")

    @classmethod
    def offset(cls, lateral, seed=0):
        return cls("offset", lateral, seed)

    @classmethod
    def noise(cls, sigma, seed=0):
        return cls("noise", sigma, seed)


NO_ERROR = ErrorModel()


@dataclass(frozen=True, eq=False)
class DetectedLane:
    """A locally perceived lane section in the perceiver's vehicle frame."""

    left: Polyline
    right: Polyline
    perceiver: Pose2
    range: float = 30.0
    vehicle_id: int = 0

    def boundary(self, side):
        return self.left if side == "left" else self.right

    def to_world(self):
        """Both boundaries as world-frame point arrays ``(left, right)``."""
        return (to_world(self.perceiver, self.left.points),
                to_world(self.perceiver, self.right.points))

    def world_lane(self):
        left, right = self.to_world()
        return Lane(Polyline(left, WORLD), Polyline(right, WORLD))

    @property
    def point_count(self):
        return len(self.left) + len(self.right)


def lateral_noise(seed, frame, vehicle_id, side, n, sigma):
    """Deterministic N(0, sigma^2) draws keyed by (seed, frame, vehicle, side).

    Draw ``i`` always belongs to point ``i``, so the value for a point does not
    depend on how many other points are requested.
    """
    key = [int(seed) & 0xFFFFFFFF, int(frame), int(vehicle_id), SIDES.index(side)]
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
    return sigma * gen.standard_normal(n)


def sense(pose, road, range=30.0, spacing=0.10, err=NO_ERROR, frame=0, vehicle_id=0):
    """Detect the lane ahead of ``pose`` on ``road``.

    Each boundary is sampled from the point beside the vehicle forward for
    ``range`` metres of boundary arc length at ``spacing`` steps, perturbed
    by ``err`` (``None`` means exact) and returned in the vehicle frame.
    """
    err = NO_ERROR if err is None else err
    check_positive(range, "range")
    check_positive(spacing, "spacing")
    s, dist = road.centerline.project(pose.position)
    if dist > road.width:
        raise OffRoadError(f"vehicle is {dist:.2f} m from the centreline")

    frame_tag = vehicle_frame(vehicle_id)
    out = {}
    for side in SIDES:
        curve = road.boundary(side)
        u0 = float(curve.station_from_center(s))
        u1 = min(u0 + range, curve.length)
        if u1 - u0 < 1e-6:
            raise EndOfRoadError("no road left ahead of the vehicle")
        stations = uniform_stations(u0, u1, spacing)
        pts = curve.point_at(stations)
        if err.kind != "none":
            h = curve.heading_at(stations)
            right = np.column_stack([-np.sin(h), -np.cos(h)])
            if err.kind == "offset":
                shift = np.full(len(stations), float(err.value))
            else:
                shift = lateral_noise(err.seed, frame, vehicle_id, side, len(stations), err.value)
            pts = pts + shift[:, None] * right
        out[side] = Polyline(to_local(pose, pts), frame_tag)
    return DetectedLane(out["left"], out["right"], pose, float(range), vehicle_id)
