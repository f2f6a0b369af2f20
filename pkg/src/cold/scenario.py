"""Scenario files: a flat, line-oriented ``key = value`` format.

Example::

    # comment
    road.segments = straight 40 | arc right 12.73 90 | straight 40
    road.lane_width = 4.0
    sensor.range = 30.0
    sensor.spacing = 0.10
    sensor.error = noise 0.05        # none | offset <m> | noise <sigma m>
    gt.spacing = 0.02
    sim.gap = 20.0
    sim.frames = 300
    sim.seed = 42
    fusion.weights = 0.25 0.75
    fusion.max_interp = 20.0

Only ``road.segments`` is required.  Unknown or repeated keys are rejected.
"""

from dataclasses import dataclass, field
import math
from typing import Optional, Tuple

from .exceptions import ColdError
from .road import Arc, RoadSpec, Straight


class ScenarioError(ColdError, ValueError):
    def __init__(self, line, message, column=None):
        self.line = line
        self.column = column
        self.message = message
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


class ScenarioSyntaxError(ScenarioError):
    pass


class ScenarioSemanticError(ScenarioError):
    pass


@dataclass(frozen=True)
class ErrorSpec:
    """Sensor error model as written in a scenario: none, offset or noise."""

    kind: str = "none"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "offset", "noise"):
            raise ValueError(f"unknown error model {self.kind!r}")
        if self.kind == "noise" and self.value < 0:
            raise ValueError("noise sigma must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    road: RoadSpec
    sensor_range: float = 30.0
    detection_spacing: float = 0.10
    gt_spacing: float = 0.02
    error: ErrorSpec = field(default_factory=ErrorSpec)
    # along-track gap between the end of the ego detection and the coop vehicle;
    # ignored when ``distance`` (inter-vehicle distance) is set
    d_gap: float = 20.0
    distance: Optional[float] = None
    speeds: Tuple[float, float] = (10.0, 10.0)
    frames: int = 100
    seed: int = 0
    start: float = 0.0
    max_interp_distance: float = 20.0
    fusion_weights: Tuple[float, float] = (0.25, 0.75)
    apex: bool = True
    apex_factor: float = 0.4

    @property
    def vehicle_distance(self):
        """Target centreline distance between ego and cooperative vehicle."""
        if self.distance is not None:
            return self.distance
        return self.sensor_range + self.d_gap


_KEYS = (
    "road.segments", "road.lane_width", "sensor.range", "sensor.spacing",
    "sensor.error", "gt.spacing", "sim.gap", "sim.distance", "sim.speed",
    "sim.frames", "sim.seed", "sim.start", "fusion.weights",
    "fusion.max_interp", "fusion.apex", "fusion.apex_factor",
)


def _fmt(x):
    return repr(float(x))


def _parse_float(tok, line, col):
    try:
        value = float(tok)
    except ValueError:
        raise ScenarioSyntaxError(line, f"expected a number, got {tok!r}", col) from None
    if not math.isfinite(value):
        raise ScenarioSemanticError(line, f"value must be finite, got {tok!r}", col)
    return value


def _parse_int(tok, line, col):
    try:
        return int(tok)
    except ValueError:
        raise ScenarioSyntaxError(line, f"expected an integer, got {tok!r}", col) from None


def _tokens(value, col):
    """Split ``value`` on whitespace, keeping each token's 1-based column."""
    out, i = [], 0
    while i < len(value):
        if value[i].isspace():
            i += 1
            continue
        j = i
        while j < len(value) and not value[j].isspace():
            j += 1
        out.append((value[i:j], col + i))
        i = j
    return out


def _positive(value, line, col, what):
    if value <= 0:
        raise ScenarioSemanticError(line, f"{what} must be > 0, got {value}", col)
    return value


def _parse_segments(value, line, col):
    segments = []
    offset = 0
    for chunk in value.split("|"):
        toks = _tokens(chunk, col + offset)
        offset += len(chunk) + 1
        if not toks:
            raise ScenarioSyntaxError(line, "empty road segment", col + offset - 1)
        kind, kcol = toks[0]
        if kind == "straight":
            if len(toks) != 2:
                raise ScenarioSyntaxError(line, "expected 'straight <length>'", kcol)
            length = _parse_float(toks[1][0], line, toks[1][1])
            segments.append(Straight(_positive(length, line, toks[1][1], "straight length")))
        elif kind == "arc":
            if len(toks) != 4:
                raise ScenarioSyntaxError(
                    line, "expected 'arc <left|right> <radius> <angle>'", kcol)
            direction, dcol = toks[1]
            if direction not in ("left", "right"):
                raise ScenarioSyntaxError(
                    line, f"arc direction must be left or right, got {direction!r}", dcol)
            radius = _parse_float(toks[2][0], line, toks[2][1])
            angle = _parse_float(toks[3][0], line, toks[3][1])
            _positive(radius, line, toks[2][1], "arc radius")
            if not 0 < angle <= 180:
                raise ScenarioSemanticError(
                    line, f"arc angle must be in (0, 180] degrees, got {angle}", toks[3][1])
            segments.append(Arc(radius, angle, direction))
        else:
            raise ScenarioSyntaxError(line, f"unknown segment type {kind!r}", kcol)
    return segments


def parse_scenario(text):
    """Parse scenario text (``str`` or UTF-8 ``bytes``) into a config."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError(1, f"not valid UTF-8: {exc}") from None

    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ScenarioSyntaxError(lineno, "expected 'key = value'", col)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if not key:
            raise ScenarioSyntaxError(lineno, "missing key", key_col)
        if key not in _KEYS:
            raise ScenarioSemanticError(lineno, f"unknown key {key!r}", key_col)
        if key in values:
            raise ScenarioSemanticError(
                lineno, f"duplicate key {key!r} (first set on line {lines[key]})", key_col)
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        value = value_part.strip()
        if not value:
            raise ScenarioSyntaxError(lineno, f"missing value for {key!r}", value_col)
        values[key] = (value, value_col)
        lines[key] = lineno

    if "road.segments" not in values:
        raise ScenarioSemanticError(max(lines.values(), default=1), "road.segments is required")

    kw = {}

    def get(key):
        value, col = values[key]
        return value, lines[key], col

    def scalar(key, name, positive=True, convert=_parse_float):
        if key not in values:
            return
        value, line, col = get(key)
        toks = _tokens(value, col)
        if len(toks) != 1:
            raise ScenarioSyntaxError(line, f"{key} takes a single value", col)
        x = convert(toks[0][0], line, toks[0][1])
        if positive:
            _positive(x, line, toks[0][1], key)
        kw[name] = x

    value, line, col = get("road.segments")
    segments = _parse_segments(value, line, col)
    lane_width = 4.0
    if "road.lane_width" in values:
        v, ln, c = get("road.lane_width")
        lane_width = _positive(_parse_float(v, ln, c), ln, c, "road.lane_width")
    kw["road"] = RoadSpec(segments, lane_width)

    scalar("sensor.range", "sensor_range")
    scalar("sensor.spacing", "detection_spacing")
    scalar("gt.spacing", "gt_spacing")
    scalar("sim.gap", "d_gap")
    scalar("sim.distance", "distance")
    scalar("sim.frames", "frames", convert=_parse_int)
    scalar("sim.seed", "seed", positive=False, convert=_parse_int)
    scalar("sim.start", "start", positive=False)
    scalar("fusion.max_interp", "max_interp_distance")
    scalar("fusion.apex_factor", "apex_factor")
    if kw.get("start", 0.0) < 0:
        raise ScenarioSemanticError(lines["sim.start"], "sim.start must be >= 0")

    if "sensor.error" in values:
        v, ln, c = get("sensor.error")
        toks = _tokens(v, c)
        kind = toks[0][0]
        if kind == "none" and len(toks) == 1:
            kw["error"] = ErrorSpec()
        elif kind in ("offset", "noise") and len(toks) == 2:
            amount = _parse_float(toks[1][0], ln, toks[1][1])
            if kind == "noise" and amount < 0:
                raise ScenarioSemanticError(ln, "noise sigma must be >= 0", toks[1][1])
            kw["error"] = ErrorSpec(kind, amount)
        else:
            raise ScenarioSyntaxError(
                ln, "expected 'none', 'offset <m>' or 'noise <sigma>'", toks[0][1])

    if "sim.speed" in values:
        v, ln, c = get("sim.speed")
        toks = _tokens(v, c)
        if len(toks) not in (1, 2):
            raise ScenarioSyntaxError(ln, "sim.speed takes one or two values", c)
        speeds = [_positive(_parse_float(t, ln, tc), ln, tc, "speed") for t, tc in toks]
        kw["speeds"] = (speeds[0], speeds[-1])

    if "fusion.weights" in values:
        v, ln, c = get("fusion.weights")
        toks = _tokens(v, c)
        if len(toks) != 2:
            raise ScenarioSyntaxError(ln, "fusion.weights takes two values", c)
        w = tuple(_parse_float(t, ln, tc) for t, tc in toks)
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ScenarioSemanticError(ln, f"fusion weights must be >= 0 and sum to 1, got {w}", c)
        kw["fusion_weights"] = w

    if "fusion.apex" in values:
        v, ln, c = get("fusion.apex")
        if v not in ("on", "off"):
            raise ScenarioSyntaxError(ln, "fusion.apex must be 'on' or 'off'", c)
        kw["apex"] = v == "on"

    return ScenarioConfig(**kw)


def _format_segment(seg):
    if isinstance(seg, Straight):
        return f"straight {_fmt(seg.length)}"
    return f"arc {seg.direction} {_fmt(seg.radius)} {_fmt(seg.angle)}"


def pretty_print(cfg):
    """Canonical text for ``cfg``; ``parse_scenario`` reads it back unchanged."""
    err = cfg.error
    lines = [
        "road.segments = " + " | ".join(_format_segment(s) for s in cfg.road.segments),
        f"road.lane_width = {_fmt(cfg.road.lane_width)}",
        f"sensor.range = {_fmt(cfg.sensor_range)}",
        f"sensor.spacing = {_fmt(cfg.detection_spacing)}",
        "sensor.error = " + (err.kind if err.kind == "none" else f"{err.kind} {_fmt(err.value)}"),
        f"gt.spacing = {_fmt(cfg.gt_spacing)}",
        f"sim.gap = {_fmt(cfg.d_gap)}",
    ]
    if cfg.distance is not None:
        lines.append(f"sim.distance = {_fmt(cfg.distance)}")
    lines += [
        f"sim.speed = {_fmt(cfg.speeds[0])} {_fmt(cfg.speeds[1])}",
        f"sim.frames = {cfg.frames}",
        f"sim.seed = {cfg.seed}",
        f"sim.start = {_fmt(cfg.start)}",
        f"fusion.weights = {_fmt(cfg.fusion_weights[0])} {_fmt(cfg.fusion_weights[1])}",
        f"fusion.max_interp = {_fmt(cfg.max_interp_distance)}",
        "fusion.apex = " + ("on" if cfg.apex else "off"),
        f"fusion.apex_factor = {_fmt(cfg.apex_factor)}",
    ]
    return "\n".join(lines) + "\n"


def load_scenario(path):
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())
