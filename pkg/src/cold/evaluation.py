"""Error metrics of perceived lanes against ground truth."""

from dataclasses import asdict, dataclass, fields
import math

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import EmptyInputError, FrameMismatchError
from .geometry import forward_vector
from .road import Polyline, cumulative_length


def nearest_rank(values, q=95.0):
    """Nearest-rank percentile: the ``ceil(q/100 * n)``-th smallest value."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise EmptyInputError("percentile of an empty sequence")
    rank = max(1, math.ceil(q / 100.0 * v.size))
    return float(v[rank - 1])


class GroundTruthIndex:
    """Nearest-sample lookup over a ground-truth polyline."""

    def __init__(self, gt):
        self.gt = gt
        self.frame = gt.frame if isinstance(gt, Polyline) else None
        pts = gt.points if isinstance(gt, Polyline) else np.asarray(gt, dtype=float)
        self._tree = cKDTree(pts)

    def distances(self, points):
        d, _ = self._tree.query(np.asarray(points, dtype=float))
        return d


@dataclass(frozen=True)
class LaneError:
    mean: float
    max: float
    p95: float
    per_point: np.ndarray


def lane_error(lane, gt):
    """Distance of every lane point to its closest GT sample.

    ``mean`` is the plain mean of these distances, ``max`` their maximum and
    ``p95`` their nearest-rank 95th percentile.  ``gt`` may be a
    :class:`Polyline` or a prebuilt :class:`GroundTruthIndex`.
    """
    index = gt if isinstance(gt, GroundTruthIndex) else GroundTruthIndex(gt)
    if isinstance(lane, Polyline):
        if index.frame is not None and lane.frame != index.frame:
            raise FrameMismatchError(f"lane in {lane.frame!r}, GT in {index.frame!r}")
        pts = lane.points
    else:
        pts = np.asarray(lane, dtype=float)
    if len(pts) == 0:
        raise EmptyInputError("lane has no points")
    d = index.distances(pts)
    return LaneError(float(d.mean()), float(d.max()), nearest_rank(d), d)


def perception_range(lane, ego_pose):
    """Along-track reach of ``lane`` measured from the ego position.

    The centreline length is taken as the mean of the two boundary lengths
    (exact for parallel offset curves), plus the forward offset of the lane
    start from the ego vehicle.
    """
    lane = getattr(lane, "lane", lane)
    left, right = lane.left.points, lane.right.points
    start = (left[0] + right[0]) / 2.0
    lead = float((start - ego_pose.position) @ forward_vector(ego_pose.heading))
    length = (cumulative_length(left)[-1] + cumulative_length(right)[-1]) / 2.0
    return lead + float(length)


@dataclass(frozen=True)
class EvalReport:
    frame_id: int
    mode: str
    mse_left: float
    mse_right: float
    max_left: float
    max_right: float
    p95: float
    perception_range: float
    runtime_us: float = 0.0

    def __post_init__(self):
        for name in ("mse_left", "mse_right", "max_left", "max_right", "p95",
                     "perception_range", "runtime_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def as_dict(self):
        return asdict(self)


NUMERIC_FIELDS = tuple(f.name for f in fields(EvalReport) if f.name not in ("frame_id", "mode"))


def evaluate_lane(lane, gt_left, gt_right, ego_pose, frame_id=0, mode="local", runtime_us=0.0):
    """Build an :class:`EvalReport` for a fused (or local) lane."""
    inner = getattr(lane, "lane", lane)
    el = lane_error(inner.left, gt_left)
    er = lane_error(inner.right, gt_right)
    p95 = nearest_rank(np.concatenate([el.per_point, er.per_point]))
    return EvalReport(frame_id, mode, el.mean, er.mean, el.max, er.max, p95,
                      perception_range(inner, ego_pose), runtime_us)


@dataclass(frozen=True)
class FieldStats:
    mean: float
    std: float
    max: float


def aggregate(reports):
    """Per-field mean, population std and max across frames."""
    reports = list(reports)
    if not reports:
        raise EmptyInputError("no reports to aggregate")
    out = {}
    for name in NUMERIC_FIELDS:
        v = np.array([getattr(r, name) for r in reports], dtype=float)
        out[name] = FieldStats(float(v.mean()), float(v.std()), float(v.max()))
    return out
