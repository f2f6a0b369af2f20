"""Collective lane fusion of an ego and a cooperative lane detection.

Two modes:

* **convoy fusion** -- the cooperative detection starts inside the ego
  detection.  Ego points before the overlap are kept, overlapping points are
  blended by weighted mean, and the rest of the cooperative detection is
  appended.
* **spline fusion** -- a gap separates the detections.  After a plausibility
  check on the relative pose, a natural cubic spline through a few known
  points (plus an estimated apex point in curves) bridges the gap.

All geometry happens in the world frame.
"""

from dataclasses import dataclass
import enum
import math
from typing import Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points, check_weights
from .evaluation import perception_range
from .exceptions import EmptyOverlapError, FusionError, GeometryError
from .geometry import (
    angle_distance,
    forward_vector,
    head_direction,
    line_intersection,
    orthogonal_foot,
    relative_pose,
    tail_direction,
)
from .road import (
    Lane,
    Polyline,
    WORLD,
    cumulative_length,
    interpolate_along,
    project_onto_polyline,
    resample_polyline,
)
from .spline import fit_spline, sample_spline

DEFAULT_WEIGHTS = (0.25, 0.75)
POSITION_THRESHOLD = 0.40
HEADING_THRESHOLD = math.radians(10.0)
CURVE_THRESHOLD = math.radians(10.0)
BLEND_THRESHOLD = 0.20
APEX_FACTOR = 0.4
SPACING = 0.10
TAIL_POINTS = 5


class Provenance(enum.IntEnum):
    EGO = 0
    FUSED = 1
    INTERPOLATED = 2
    COOP = 3


class ApexError(FusionError):
    """The tail lines do not meet between the two detections."""


@dataclass(frozen=True, eq=False)
class FusedLane:
    """Collective lane in the world frame with per-point provenance."""

    lane: Lane
    provenance: Tuple[np.ndarray, np.ndarray]
    perception_range: float
    mode: str = "local"

    @property
    def left(self):
        return self.lane.left

    @property
    def right(self):
        return self.lane.right

    def provenance_ordered(self):
        return all(np.all(np.diff(p) >= 0) for p in self.provenance)


@dataclass(frozen=True)
class OverlapRegion:
    """Overlap of the two detections, indexed on their centrelines."""

    ego_start_index: int
    ego_end_index: int
    coop_start_index: int
    coop_end_index: int
    length: float


@dataclass(frozen=True)
class FusibilityDecision:
    fusible: bool
    case: Optional[str] = None      # "ahead", "ahead_right" or "ahead_left"
    reason: Optional[str] = None    # first failed predicate when rejected
    d_s: float = 0.0

    def __bool__(self):
        return self.fusible


# --------------------------------------------------------------------------
# helpers


def oriented(points, heading):
    """Return ``points`` ordered along ``heading`` (reversed if necessary)."""
    pts = np.asarray(points, dtype=float)
    if (pts[-1] - pts[0]) @ forward_vector(heading) < 0:
        return pts[::-1].copy()
    return pts


def world_boundaries(det):
    """World-frame ``(left, right)`` arrays ordered along the driving direction."""
    left, right = det.to_world()
    h = det.perceiver.heading
    return oriented(left, h), oriented(right, h)


def centerline(left, right):
    """Midline of two boundaries, pairing points at equal relative arc length."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if len(left) != len(right):
        n = max(len(left), len(right))
        u = np.linspace(0.0, 1.0, n)
        cl, cr = cumulative_length(left), cumulative_length(right)
        left = interpolate_along(left, u * cl[-1], cl)
        right = interpolate_along(right, u * cr[-1], cr)
    return (left + right) / 2.0


def gap_distance(ego, coop):
    """Euclidean distance from the end of the ego centreline to the start of
    the cooperative one."""
    el, er = world_boundaries(ego)
    cl, cr = world_boundaries(coop)
    return float(np.hypot(*((cl[0] + cr[0]) / 2 - (el[-1] + er[-1]) / 2)))


def _make_fused(left, right, prov_left, prov_right, ego_pose, mode):
    lane = Lane(Polyline(left, WORLD), Polyline(right, WORLD))
    provenance = (np.asarray(prov_left, dtype=np.int8), np.asarray(prov_right, dtype=np.int8))
    return FusedLane(lane, provenance, perception_range(lane, ego_pose), mode)


def local_lane(ego):
    """The ego detection alone, as a world-frame :class:`FusedLane`."""
    left, right = world_boundaries(ego)
    return _make_fused(left, right, np.zeros(len(left)), np.zeros(len(right)),
                       ego.perceiver, "local")


# --------------------------------------------------------------------------
# convoy fusion


def detect_overlap(ego, coop, max_lateral=2.0):
    """Overlap of the cooperative detection with the ego detection, or None.

    The cooperative lane overlaps when its first centreline point projects
    onto the interior of the ego centreline, lies ahead of the ego start and
    is within ``max_lateral`` metres of it.
    """
    ego_c = centerline(*world_boundaries(ego))
    coop_c = centerline(*world_boundaries(coop))
    ego_cum = cumulative_length(ego_c)
    if (coop_c[0] - ego_c[0]) @ forward_vector(ego.perceiver.heading) <= 0:
        return None
    s_ov, _, dist = project_onto_polyline(ego_c, coop_c[0], ego_cum)
    if dist > max_lateral or s_ov >= ego_cum[-1] - 1e-9:
        return None
    length = float(ego_cum[-1] - s_ov)
    coop_cum = cumulative_length(coop_c)
    ego_start = int(np.searchsorted(ego_cum, s_ov, side="left"))
    coop_end = int(np.searchsorted(coop_cum, length, side="right") - 1)
    return OverlapRegion(ego_start, len(ego_c) - 1, 0, max(coop_end, 0), length)


def fuse_points(p_ego, p_coop, weights=DEFAULT_WEIGHTS):
    """Weighted mean of corresponding points."""
    w_ego, w_coop = check_weights(weights)
    return w_ego * np.asarray(p_ego, dtype=float) + w_coop * np.asarray(p_coop, dtype=float)


def _convoy_boundary(ego_pts, coop_pts, weights, blend_threshold, spacing):
    e = resample_polyline(ego_pts, spacing)
    c = resample_polyline(coop_pts, spacing)
    e_cum, c_cum = cumulative_length(e), cumulative_length(c)
    s0, _, offset = project_onto_polyline(e, c[0], e_cum)
    in_ov = e_cum >= s0
    if not np.any(in_ov) or s0 >= e_cum[-1]:
        raise EmptyOverlapError("boundaries do not overlap")

    ego_ov = e[in_ov]
    coop_ov = interpolate_along(c, e_cum[in_ov] - s0, c_cum)
    w_ego, w_coop = weights
    if offset > blend_threshold and len(ego_ov) > 1:
        ramp = np.linspace(0.0, 1.0, len(ego_ov))
        wc = ramp * w_coop
    else:
        wc = np.full(len(ego_ov), w_coop)
    fused = (1.0 - wc)[:, None] * ego_ov + wc[:, None] * coop_ov

    overlap_len = e_cum[-1] - s0
    rest = c[c_cum > overlap_len + 1e-6]
    pts = np.vstack([e[~in_ov], fused, rest])
    prov = np.concatenate([
        np.full((~in_ov).sum(), Provenance.EGO),
        np.full(len(fused), Provenance.FUSED),
        np.full(len(rest), Provenance.COOP),
    ])
    return pts, prov


def convoy_fuse(ego, coop, overlap, weights=DEFAULT_WEIGHTS,
                blend_threshold=BLEND_THRESHOLD, spacing=SPACING):
    """Merge overlapping detections into a collective lane.

    Points pair up at equal along-track distance from the overlap start.  When
    the detections disagree by more than ``blend_threshold`` metres where the
    overlap begins, the weights ramp from pure ego to ``weights`` across the
    overlap instead of jumping.
    """
    if overlap is None or overlap.length <= 0:
        raise EmptyOverlapError("no overlap to fuse")
    weights = check_weights(weights)
    el, er = world_boundaries(ego)
    cl, cr = world_boundaries(coop)
    left, pl = _convoy_boundary(el, cl, weights, blend_threshold, spacing)
    right, pr = _convoy_boundary(er, cr, weights, blend_threshold, spacing)
    return _make_fused(left, right, pl, pr, ego.perceiver, "convoy")


# --------------------------------------------------------------------------
# spline fusion


def check_fusibility(rel, d_s, max_interp_distance=20.0,
                     pos_threshold=POSITION_THRESHOLD, heading_threshold=HEADING_THRESHOLD):
    """Decide whether a cooperative vehicle at ``rel`` may be spline-fused.

    Accepted configurations: ahead in the same direction, ahead-right heading
    right, ahead-left heading left.  The gap ``d_s`` must not exceed
    ``max_interp_distance``.
    """
    if not rel.x_rel > 0:
        return FusibilityDecision(False, reason="behind", d_s=d_s)

    def facing(target_deg):
        return angle_distance(rel.psi_rel, math.radians(target_deg)) <= heading_threshold

    cases = (
        ("ahead", facing(0.0), abs(rel.y_rel) <= pos_threshold),
        ("ahead_right", facing(90.0), rel.y_rel > 0),
        ("ahead_left", facing(270.0), rel.y_rel < 0),
    )
    case = next((name for name, head_ok, pos_ok in cases if head_ok and pos_ok), None)
    if case is None:
        reason = "lateral" if any(head_ok for _, head_ok, _ in cases) else "heading"
        return FusibilityDecision(False, reason=reason, d_s=d_s)
    if d_s > max_interp_distance:
        return FusibilityDecision(False, reason="gap", d_s=d_s)
    return FusibilityDecision(True, case=case, d_s=d_s)


def is_curve(ego_boundary, coop_boundary, threshold=CURVE_THRESHOLD, k=TAIL_POINTS):
    """True when the end of the ego boundary and the start of the cooperative
    boundary differ in direction by strictly more than ``threshold``."""
    d_ego = tail_direction(ego_boundary, k)
    d_coop = head_direction(coop_boundary, k)
    angle = math.atan2(abs(d_ego[0] * d_coop[1] - d_ego[1] * d_coop[0]), d_ego @ d_coop)
    return angle > threshold


def estimate_apex(ego_boundary, coop_boundary, factor=APEX_FACTOR, k=TAIL_POINTS):
    """Estimate a point on the curve between two boundary sections.

    The ego tail line (extended forward) and the cooperative head line
    (extended backward) meet at ``P_i``; ``P_j`` is the foot of ``P_i`` on the
    chord from the last ego point to the first cooperative point.  The
    estimate is ``P_i + factor * (P_j - P_i)``.
    """
    e = check_points(ego_boundary, min_points=k, name="ego boundary")
    c = check_points(coop_boundary, min_points=k, name="coop boundary")
    d_ego, d_coop = tail_direction(e, k), head_direction(c, k)
    p_i = line_intersection(e[-1], d_ego, c[0], d_coop)
    if (p_i - e[-1]) @ d_ego <= 0 or (c[0] - p_i) @ d_coop <= 0:
        raise ApexError("tail lines intersect outside the gap")
    p_j = orthogonal_foot(p_i, e[-1], c[0])
    return p_i + factor * (p_j - p_i)


def select_known_points(ego_boundary, coop_boundary, apex=None):
    """Third-to-last and last ego points, optional apex, first and third
    cooperative points."""
    e = check_points(ego_boundary, min_points=3, name="ego boundary")
    c = check_points(coop_boundary, min_points=3, name="coop boundary")
    known = [e[-3], e[-1]]
    if apex is not None:
        known.append(np.asarray(apex, dtype=float))
    known += [c[0], c[2]]
    return np.array(known)


def bridge_boundary(ego_pts, coop_pts, use_apex=True, apex_factor=APEX_FACTOR,
                    curve_threshold=CURVE_THRESHOLD, spacing=SPACING, k=TAIL_POINTS):
    """Interpolated points strictly between two world-frame boundary sections.

    Returns ``(points, apex_or_None)``.
    """
    apex = None
    if use_apex and len(ego_pts) >= k and len(coop_pts) >= k \
            and is_curve(ego_pts, coop_pts, curve_threshold, k):
        try:
            apex = estimate_apex(ego_pts, coop_pts, apex_factor, k)
        except (GeometryError, ApexError):
            apex = None
    known = select_known_points(ego_pts, coop_pts, apex)
    spline = fit_spline(known)
    knots = spline.knots_
    samples = sample_spline(spline, spacing, knots[1], knots[-2])
    return samples[1:-1], apex


def spline_fuse(ego, coop, use_apex=True, apex_factor=APEX_FACTOR,
                curve_threshold=CURVE_THRESHOLD, spacing=SPACING, k=TAIL_POINTS):
    """Bridge the gap between two detections with a spline per boundary.

    Assumes fusibility was already checked.
    """
    ego_b = world_boundaries(ego)
    coop_b = world_boundaries(coop)
    out, prov = [], []
    for e, c in zip(ego_b, coop_b):
        mid, _ = bridge_boundary(e, c, use_apex, apex_factor, curve_threshold, spacing, k)
        out.append(np.vstack([e, mid, c]))
        prov.append(np.concatenate([
            np.full(len(e), Provenance.EGO),
            np.full(len(mid), Provenance.INTERPOLATED),
            np.full(len(c), Provenance.COOP),
        ]))
    return _make_fused(out[0], out[1], prov[0], prov[1], ego.perceiver, "spline")


# --------------------------------------------------------------------------
# estimator front end


@dataclass(frozen=True, eq=False)
class FusionResult:
    lane: FusedLane
    mode: str                                  # "convoy", "spline" or "local"
    overlap: Optional[OverlapRegion] = None
    decision: Optional[FusibilityDecision] = None


class LaneFusion(BaseEstimator):
    """Collective lane detection with tunable thresholds.

    Hyper-parameters follow scikit-learn conventions (``get_params`` /
    ``set_params``); :meth:`fuse` runs one fusion step on a pair of
    detections.

    Parameters
    ----------
    weights : (float, float)
        Ego and cooperative weights of the overlap blend; must sum to 1.
    max_interp_distance : float
        Largest gap, in metres, the spline may bridge.
    pos_threshold, heading_threshold_deg : float
        Tolerances for the relative-pose plausibility check.
    curve_threshold_deg : float
        Direction change above which the gap is treated as a curve.
    apex : bool
        Whether to add the estimated apex point in curves.
    apex_factor : float
        Fraction of the way from the tail-line intersection to the chord.
    blend_threshold : float
        Offset at the overlap start above which weights are ramped.
    spacing : float
        Sampling distance of fused and interpolated points.
    mode : {"auto", "convoy", "spline"}
        ``auto`` tries convoy fusion first, then spline fusion.
    """

    def __init__(self, weights=DEFAULT_WEIGHTS, max_interp_distance=20.0,
                 pos_threshold=POSITION_THRESHOLD, heading_threshold_deg=10.0,
                 curve_threshold_deg=10.0, apex=True, apex_factor=APEX_FACTOR,
                 blend_threshold=BLEND_THRESHOLD, spacing=SPACING, mode="auto"):
        self.weights = weights
        self.max_interp_distance = max_interp_distance
        self.pos_threshold = pos_threshold
        self.heading_threshold_deg = heading_threshold_deg
        self.curve_threshold_deg = curve_threshold_deg
        self.apex = apex
        self.apex_factor = apex_factor
        self.blend_threshold = blend_threshold
        self.spacing = spacing
        self.mode = mode

    def check_fusibility(self, ego, coop):
        rel = relative_pose(ego.perceiver, coop.perceiver)
        return check_fusibility(rel, gap_distance(ego, coop), self.max_interp_distance,
                                self.pos_threshold, math.radians(self.heading_threshold_deg))

    def fuse(self, ego, coop):
        if self.mode not in ("auto", "convoy", "spline"):
            raise ValueError(f"unknown mode {self.mode!r}")
        overlap = detect_overlap(ego, coop)
        if overlap is not None:
            if self.mode in ("auto", "convoy"):
                lane = convoy_fuse(ego, coop, overlap, self.weights,
                                   self.blend_threshold, self.spacing)
                return FusionResult(lane, "convoy", overlap=overlap)
            return FusionResult(local_lane(ego), "local", overlap=overlap)
        if self.mode == "convoy":
            return FusionResult(local_lane(ego), "local")
        decision = self.check_fusibility(ego, coop)
        if not decision:
            return FusionResult(local_lane(ego), "local", decision=decision)
        lane = spline_fuse(ego, coop, self.apex, self.apex_factor,
                           math.radians(self.curve_threshold_deg), self.spacing)
        return FusionResult(lane, "spline", decision=decision)
