"""Compact lane messages: cubic Bezier sections on a little-endian wire format.

Layout (all little-endian)::

    offset  size  field
    0       4     magic b"CLDM"
    4       1     version (1)
    5       4     vehicle_id  uint32
    9       4     frame_id    uint32
    13      1     section_count uint8
    14      132n  sections: float32 section_length, then 8 control points
                  (left p0..p3, right p0..p3) as float64 (x, y) pairs

A single-section message is 146 bytes.  Coordinates are in the sender's
vehicle frame.
"""

from dataclasses import dataclass
import struct
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points
from .exceptions import ColdError
from .road import Polyline, cumulative_length, interpolate_along, resample_polyline, vehicle_frame
from .sensor import DetectedLane

MAGIC = b"CLDM"
VERSION = 1
HEADER = struct.Struct("<4sBIIB")
SECTION = struct.Struct("<f16d")
MAX_SECTIONS = 255
RAW_BYTES_PER_POINT = 12  # x, y, z as float32


class CodecError(ColdError, ValueError):
    def __init__(self, message, offset=None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (offset {offset})")


class BadMagic(CodecError):
    pass


class BadVersion(CodecError):
    pass


class Truncated(CodecError):
    pass


class TrailingBytes(CodecError):
    pass


class TooManySections(CodecError):
    pass


class DegenerateCurve(CodecError):
    pass


# --------------------------------------------------------------------------
# Bezier curves


def bernstein(t):
    t = np.asarray(t, dtype=float)[:, None]
    s = 1.0 - t
    return np.hstack([s**3, 3 * s**2 * t, 3 * s * t**2, t**3])


def eval_bezier(ctrl, t):
    """De Casteljau evaluation of a cubic Bezier at scalar or array ``t``."""
    ctrl = np.asarray(ctrl, dtype=float)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t must lie in [0, 1]")
    pts = np.broadcast_to(ctrl, (len(t),) + ctrl.shape).copy()
    tt = t[:, None]
    for level in range(3, 0, -1):
        pts = (1 - tt)[:, None] * pts[:, :level] + tt[:, None] * pts[:, 1:level + 1]
    out = pts[:, 0]
    return out[0] if scalar else out


def _solve_inner(pts, t):
    B = bernstein(t)
    p0, p3 = pts[0], pts[-1]
    r = pts - np.outer(B[:, 0], p0) - np.outer(B[:, 3], p3)
    A = B[:, 1:3]
    ata = A.T @ A
    if abs(np.linalg.det(ata)) < 1e-14:
        raise DegenerateCurve("normal equations are singular")
    return np.vstack([p0, np.linalg.solve(ata, A.T @ r), p3])


def _derivatives(ctrl, t):
    d1 = 3 * np.diff(ctrl, axis=0)
    d2 = 2 * np.diff(d1, axis=0)
    t = t[:, None]
    s = 1 - t
    first = s**2 * d1[0] + 2 * s * t * d1[1] + t**2 * d1[2]
    second = s * d2[0] + t * d2[1]
    return first, second


def _reparameterize(ctrl, pts, t):
    """One Newton step moving each parameter toward its closest curve point."""
    diff = bernstein(t) @ ctrl - pts
    first, second = _derivatives(ctrl, t)
    num = np.einsum("ij,ij->i", diff, first)
    den = np.einsum("ij,ij->i", first, first) + np.einsum("ij,ij->i", diff, second)
    step = np.divide(num, den, out=np.zeros_like(num), where=np.abs(den) > 1e-12)
    t_new = np.clip(t - step, 0.0, 1.0)
    t_new[0], t_new[-1] = 0.0, 1.0
    return t_new


def fit_bezier(points, refine=3, return_params=False):
    """Least-squares cubic Bezier with clamped endpoints.

    Starts from chord-length parameters and solves the 2x2 normal equations
    (shared by both axes) for the inner control points.  ``refine`` Newton
    reparameterisation rounds then pull each parameter to the closest curve
    point and refit; ``refine=0`` is the plain chord-length fit.
    """
    pts = check_points(points, min_points=4, name="boundary")
    cum = cumulative_length(pts)
    if cum[-1] <= 0:
        raise DegenerateCurve("all boundary points coincide")
    t = cum / cum[-1]
    ctrl = _solve_inner(pts, t)
    for _ in range(refine):
        t = _reparameterize(ctrl, pts, t)
        if np.any(np.diff(t) < 0):
            t = np.maximum.accumulate(t)
        ctrl = _solve_inner(pts, t)
    return (ctrl, t) if return_params else ctrl


def bezier_residual(ctrl, points, params=None):
    """Max distance of ``points`` from the curve at the given parameters
    (chord-length parameters by default)."""
    pts = np.asarray(points, dtype=float)
    if params is None:
        cum = cumulative_length(pts)
        params = cum / cum[-1]
    return float(np.max(np.hypot(*(bernstein(params) @ ctrl - pts).T)))


class BezierFitter(BaseEstimator):
    """Estimator wrapper: ``fit(points)`` then ``predict(t)``."""

    def __init__(self, refine=3):
        self.refine = refine

    def fit(self, X, y=None):
        self.control_points_, self.params_ = fit_bezier(X, self.refine, return_params=True)
        self.residual_ = bezier_residual(self.control_points_, X, self.params_)
        return self

    def predict(self, t):
        return eval_bezier(self.control_points_, t)


def sample_bezier(ctrl, spacing=0.10, dense=400):
    """Points along a Bezier at ``spacing`` arc-length steps, ends included."""
    dense_pts = eval_bezier(ctrl, np.linspace(0.0, 1.0, dense + 1))
    return resample_polyline(dense_pts, spacing)


# --------------------------------------------------------------------------
# messages


@dataclass(frozen=True, eq=False)
class BezierSection:
    left: np.ndarray
    right: np.ndarray
    section_length: float

    def __post_init__(self):
        for name in ("left", "right"):
            ctrl = np.array(getattr(self, name), dtype=np.float64)
            if ctrl.shape != (4, 2) or not np.all(np.isfinite(ctrl)):
                raise ValueError(f"{name} must be 4 finite (x, y) control points")
            ctrl.flags.writeable = False
            object.__setattr__(self, name, ctrl)
        # the wire carries float32; keep the in-memory value identical
        object.__setattr__(self, "section_length", float(np.float32(self.section_length)))

    def __eq__(self, other):
        if not isinstance(other, BezierSection):
            return NotImplemented
        return (np.array_equal(self.left, other.left) and np.array_equal(self.right, other.right)
                and self.section_length == other.section_length)


@dataclass(frozen=True)
class LaneMessage:
    vehicle_id: int
    frame_id: int
    sections: Sequence[BezierSection]

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        for name in ("vehicle_id", "frame_id"):
            v = getattr(self, name)
            if not 0 <= v <= 0xFFFFFFFF:
                raise ValueError(f"{name} must fit in 32 unsigned bits")
        if not self.sections:
            raise ValueError("a message needs at least one section")


def encode(msg):
    n = len(msg.sections)
    if n > MAX_SECTIONS:
        raise TooManySections(f"{n} sections exceed the limit of {MAX_SECTIONS}")
    parts = [HEADER.pack(MAGIC, VERSION, msg.vehicle_id, msg.frame_id, n)]
    for sec in msg.sections:
        parts.append(SECTION.pack(sec.section_length, *sec.left.ravel(), *sec.right.ravel()))
    return b"".join(parts)


def decode(data):
    data = bytes(data)
    if len(data) < 4:
        raise Truncated("message shorter than the magic", len(data))
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}", 0)
    if len(data) < HEADER.size:
        raise Truncated("incomplete header", len(data))
    _, version, vehicle_id, frame_id, n = HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}", 4)
    if n == 0:
        raise CodecError("message has no sections", 13)
    expected = HEADER.size + n * SECTION.size
    if len(data) < expected:
        raise Truncated(f"expected {expected} bytes, got {len(data)}", len(data))
    if len(data) > expected:
        raise TrailingBytes(f"{len(data) - expected} unexpected trailing bytes", expected)
    sections = []
    for k in range(n):
        vals = SECTION.unpack_from(data, HEADER.size + k * SECTION.size)
        coords = np.array(vals[1:]).reshape(2, 4, 2)
        sections.append(BezierSection(coords[0], coords[1], vals[0]))
    return LaneMessage(vehicle_id, frame_id, sections)


def raw_size(lane):
    """Bytes needed to send ``lane`` as raw x/y/z float32 points."""
    return RAW_BYTES_PER_POINT * (len(lane.left) + len(lane.right))


# --------------------------------------------------------------------------
# detection <-> message


def _sub_polyline(points, cum, a, b):
    inside = points[(cum > a) & (cum < b)]
    ends = interpolate_along(points, [a, b], cum)
    return np.vstack([ends[:1], inside, ends[1:]])


def fit_sections(left, right, tol=0.02, min_length=5.0, max_sections=MAX_SECTIONS):
    """Cover both boundaries with paired Bezier sections.

    Sections share normalised arc-length breakpoints on the two boundaries and
    are bisected until every section fits within ``tol`` metres or would get
    shorter than ``min_length``.
    """
    left = check_points(left, min_points=4, name="left boundary")
    right = check_points(right, min_points=4, name="right boundary")
    cl, cr = cumulative_length(left), cumulative_length(right)
    mean_len = (cl[-1] + cr[-1]) / 2.0

    def build(f0, f1):
        pl = _sub_polyline(left, cl, f0 * cl[-1], f1 * cl[-1])
        pr = _sub_polyline(right, cr, f0 * cr[-1], f1 * cr[-1])
        if len(pl) < 4 or len(pr) < 4:
            return None, np.inf
        ctrl_l, t_l = fit_bezier(pl, return_params=True)
        ctrl_r, t_r = fit_bezier(pr, return_params=True)
        err = max(bezier_residual(ctrl_l, pl, t_l), bezier_residual(ctrl_r, pr, t_r))
        length = (cumulative_length(pl)[-1] + cumulative_length(pr)[-1]) / 2.0
        return BezierSection(ctrl_l, ctrl_r, length), err

    spans = [(0.0, 1.0)]
    done = []
    while spans:
        f0, f1 = spans.pop(0)
        sec, err = build(f0, f1)
        too_short = (f1 - f0) * mean_len / 2.0 < min_length
        if sec is not None and (err <= tol or too_short
                                or len(done) + len(spans) + 2 > max_sections):
            done.append((f0, sec))
            continue
        mid = (f0 + f1) / 2.0
        half_a, _ = build(f0, mid)
        half_b, _ = build(mid, f1)
        if half_a is None or half_b is None:
            if sec is None:
                raise DegenerateCurve("boundary too short to encode")
            done.append((f0, sec))
            continue
        spans[:0] = [(f0, mid), (mid, f1)]
    done.sort(key=lambda item: item[0])
    return [sec for _, sec in done]


def encode_detection(det, frame_id=0, tol=0.02):
    """Convert a detection to a :class:`LaneMessage`."""
    sections = fit_sections(det.left.points, det.right.points, tol)
    return LaneMessage(det.vehicle_id, frame_id, sections)


def _join(sections, side, spacing):
    dense = [eval_bezier(getattr(sec, side), np.linspace(0.0, 1.0, 401)) for sec in sections]
    pts = np.vstack([dense[0]] + [d[1:] for d in dense[1:]])
    return resample_polyline(pts, spacing)


def decode_detection(msg, perceiver, spacing=0.10, range=30.0):
    """Rebuild a vehicle-frame :class:`DetectedLane` from a message."""
    frame = vehicle_frame(msg.vehicle_id)
    left = Polyline(_join(msg.sections, "left", spacing), frame)
    right = Polyline(_join(msg.sections, "right", spacing), frame)
    return DetectedLane(left, right, perceiver, range, msg.vehicle_id)


def codec_roundtrip(det, frame_id=0, spacing=0.10, tol=0.02):
    """Send ``det`` through encode/decode and return the rebuilt detection."""
    msg = decode(encode(encode_detection(det, frame_id, tol)))
    return decode_detection(msg, det.perceiver, spacing, det.range)
