"""Two-vehicle scenario runner: move, sense, exchange, fuse, evaluate."""

import csv
from dataclasses import dataclass, replace
import io
import logging
import time
from typing import List

import numpy as np

from .codec import codec_roundtrip
from .evaluation import EvalReport, GroundTruthIndex, aggregate, evaluate_lane
from .exceptions import EndOfRoadError
from .fusion import LaneFusion
from .geometry import Pose2
from .road import build_road
from .sensor import ErrorModel, sense

log = logging.getLogger(__name__)

DT = 0.1                 # s, one sensor cycle
SPEED_JITTER = 0.05      # +-5 % uniform per step
GAP_GAIN = 0.5           # 1/s, follower's distance-keeping gain
END_MARGIN = 1.0         # m of road the cooperative vehicle must still see
EGO, COOP = 0, 1

CSV_FIELDS = ("frame_id", "mode", "mse_left", "mse_right", "max_left", "max_right",
              "p95", "range_m", "runtime_us")


@dataclass(frozen=True)
class FrameState:
    frame_id: int
    ego_s: float
    coop_s: float
    ego_pose: Pose2
    coop_pose: Pose2

    @property
    def d_actual(self):
        return self.coop_s - self.ego_s


def _jitter(seed, frame_id, vehicle):
    key = [int(seed) & 0xFFFFFFFF, int(frame_id), int(vehicle), 0x5EED]
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
    return float(gen.uniform(-1.0, 1.0))


def initial_state(cfg, road):
    ego_s = cfg.start
    coop_s = cfg.start + cfg.vehicle_distance
    if coop_s > road.length - END_MARGIN:
        raise EndOfRoadError("cooperative vehicle starts beyond the end of the road")
    return FrameState(0, ego_s, coop_s, road.pose_at(ego_s), road.pose_at(coop_s))


def step(state, cfg, road):
    """Advance both vehicles one sensor cycle along the centreline.

    Each vehicle's speed is jittered by up to 5 % (seeded per frame); the ego
    vehicle also corrects its speed toward the configured distance so the gap
    wanders but stays bounded.
    """
    nxt = state.frame_id + 1
    v_ego, v_coop = cfg.speeds
    coop_adv = v_coop * (1 + SPEED_JITTER * _jitter(cfg.seed, nxt, COOP)) * DT
    gap_error = state.d_actual - cfg.vehicle_distance
    ego_speed = v_ego * (1 + SPEED_JITTER * _jitter(cfg.seed, nxt, EGO)) + GAP_GAIN * gap_error
    ego_adv = max(ego_speed, 0.0) * DT
    ego_s, coop_s = state.ego_s + ego_adv, state.coop_s + coop_adv
    if coop_s > road.length - END_MARGIN:
        raise EndOfRoadError(f"cooperative vehicle reached the road end at frame {nxt}")
    return FrameState(nxt, ego_s, coop_s, road.pose_at(ego_s), road.pose_at(coop_s))


def pose_sequence(cfg, road, frames=None):
    """States for up to ``frames`` frames, stopping early at the road end."""
    frames = cfg.frames if frames is None else frames
    states = []
    if frames <= 0:
        return states
    state = initial_state(cfg, road)
    states.append(state)
    while len(states) < frames:
        try:
            state = step(state, cfg, road)
        except EndOfRoadError as exc:
            log.info("stopping early: %s", exc)
            break
        states.append(state)
    return states


def make_fuser(cfg, mode="auto"):
    return LaneFusion(weights=cfg.fusion_weights, max_interp_distance=cfg.max_interp_distance,
                      apex=cfg.apex, apex_factor=cfg.apex_factor,
                      spacing=cfg.detection_spacing, mode=mode)


class Simulation:
    """Holds the road and GT index for one scenario."""

    def __init__(self, cfg, mode="auto", codec=False):
        self.cfg = cfg
        self.mode = mode
        self.codec = codec
        self.road = build_road(cfg.road)
        gt = self.road.sample(cfg.gt_spacing)
        self.gt_left = GroundTruthIndex(gt.left)
        self.gt_right = GroundTruthIndex(gt.right)
        self.fuser = make_fuser(cfg, mode)
        self.error = ErrorModel(cfg.error.kind, cfg.error.value, cfg.seed)
        initial_state(cfg, self.road)  # placement problems are config errors

    def detections(self, state):
        cfg = self.cfg
        ego = sense(state.ego_pose, self.road, cfg.sensor_range, cfg.detection_spacing,
                    self.error, state.frame_id, EGO)
        coop = sense(state.coop_pose, self.road, cfg.sensor_range, cfg.detection_spacing,
                     self.error, state.frame_id, COOP)
        if self.codec:
            coop = codec_roundtrip(coop, state.frame_id, cfg.detection_spacing)
        return ego, coop

    def states(self):
        return pose_sequence(self.cfg, self.road)

    def run(self):
        reports = [self.run_frame(s) for s in self.states()]
        summary = aggregate(reports) if reports else {}
        return RunResult(reports, summary, self.cfg, self.codec, self.mode)

    def run_frame(self, state):
        ego, coop = self.detections(state)
        t0 = time.perf_counter()
        result = self.fuser.fuse(ego, coop)
        runtime_us = (time.perf_counter() - t0) * 1e6
        return evaluate_lane(result.lane, self.gt_left, self.gt_right, ego.perceiver,
                             state.frame_id, result.mode, runtime_us)


@dataclass
class RunResult:
    reports: List[EvalReport]
    summary: dict
    config: object
    codec_enabled: bool = False
    mode: str = "auto"


def run_scenario(cfg, mode="auto", codec=False, frames=None, seed=None):
    """Run every frame of a scenario and return the collected reports."""
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if frames is not None:
        cfg = replace(cfg, frames=frames)
    return Simulation(cfg, mode, codec).run()


def run_frame(state, cfg, mode="auto", codec=False):
    """Evaluate one frame in isolation (builds road and GT on every call)."""
    return Simulation(cfg, mode, codec).run_frame(state)


# --------------------------------------------------------------------------
# output


def frames_csv(reports, include_runtime=True):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = CSV_FIELDS if include_runtime else CSV_FIELDS[:-1]
    writer.writerow(cols)
    for r in reports:
        row = [r.frame_id, r.mode] + [f"{v:.6f}" for v in (
            r.mse_left, r.mse_right, r.max_left, r.max_right, r.p95, r.perception_range)]
        if include_runtime:
            row.append(f"{r.runtime_us:.1f}")
        writer.writerow(row)
    return buf.getvalue()


def read_frames_csv(text):
    reports = []
    for row in csv.DictReader(io.StringIO(text)):
        reports.append(EvalReport(
            int(row["frame_id"]), row["mode"], float(row["mse_left"]), float(row["mse_right"]),
            float(row["max_left"]), float(row["max_right"]), float(row["p95"]),
            float(row["range_m"]), float(row.get("runtime_us") or 0.0)))
    return reports


def runtime_table(reports):
    """Runtime statistics per fusion mode in milliseconds."""
    rows = {}
    for mode in ("convoy", "spline", "local"):
        v = np.array([r.runtime_us for r in reports if r.mode == mode]) / 1000.0
        if v.size:
            rows[mode] = (float(v.mean()), float(v.std()), float(v.max()), int(v.size))
    return rows


def format_summary(reports, title="CoLD run"):
    stats = aggregate(reports)
    counts = {m: sum(r.mode == m for r in reports) for m in ("convoy", "spline", "local")}
    lines = [
        f"{title}: {len(reports)} frames "
        f"(convoy {counts['convoy']}, spline {counts['spline']}, local {counts['local']})",
        "",
        f"{'':<24}{'mean':>10}{'std':>10}{'max':>10}",
    ]
    labels = (("mse_left", "MSE left [m]"), ("mse_right", "MSE right [m]"),
              ("max_left", "MAX left [m]"), ("max_right", "MAX right [m]"),
              ("p95", "p95 [m]"), ("perception_range", "Perception range [m]"))
    for key, label in labels:
        s = stats[key]
        lines.append(f"{label:<24}{s.mean:>10.3f}{s.std:>10.3f}{s.max:>10.3f}")
    lines += ["", f"{'Runtime [ms]':<24}{'mean':>10}{'sigma':>10}{'max':>10}"]
    for mode, (mean, std, mx, _) in runtime_table(reports).items():
        lines.append(f"{mode.capitalize() + ' fusion':<24}{mean:>10.2f}{std:>10.2f}{mx:>10.2f}")
    return "\n".join(lines) + "\n"
