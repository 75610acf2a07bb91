"""Deterministic closed-loop navigation simulator.

Rate structure (all multiples of the integrator tick):

* every sim tick: explicit-Euler step of ``x' = u`` with the held command;
* every sensor tick: LiDAR scan, barrier evaluation, new filtered command;
* every Mariner tick: new preview target from the latest scan;
* once: global plan on the floor plan.

Collision is judged by the sampled-surface oracle of :mod:`vesselnav.world`,
never by the barrier itself.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .geometry import HyperEllipsoid, PlanarPose, body_from_world, world_from_body
from .mariner import select_preview_target
from .planning import GridPlanner, WaypointPath, WaypointTracker, rasterize
from .safety_filter import ControlCommand, safe_command
from .scenario import LidarSpec, Scenario
from .vessel import PointCloud, evaluate_cbf
from .world import World

COLUMNS = [
    "t",
    "r_x", "r_y", "r_z", "yaw",
    "u_ref_vx", "u_ref_vy", "u_ref_vz", "u_ref_omega",
    "u_vx", "u_vy", "u_vz", "u_omega",
    "h_soft", "h_min", "alpha_min",
    "mariner_chosen_angle",
    "preview_target_x", "preview_target_y", "preview_target_z",
    "active_waypoint_index",
    "true_clearance_alpha",
    "stuck", "infeasible",
]

OUTCOMES = ("reached", "collision", "stuck", "timeout")


def lidar_scan(pose: PlanarPose, world: World, spec: LidarSpec, rng: np.random.Generator | None = None,
               directions: np.ndarray | None = None) -> PointCloud:
    """Body-frame returns of a multi-channel LiDAR at the robot center.

    One point per ray that hits geometry within ``max_range`` (first hit),
    with optional Gaussian range noise. Misses produce no point.
    """
    d_body = spec.directions() if directions is None else directions
    d_world = d_body @ pose.rotation.T
    t = world.raycast(pose.position, d_world, spec.max_range)
    if spec.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noisy scans need an rng")
        t = t + spec.noise_sigma * rng.standard_normal(t.shape[0])
    hit = np.isfinite(t) & (t > 0.0)
    return PointCloud(d_body[hit] * t[hit, None], "body")


def integrate(pose: PlanarPose, u: ControlCommand, dt: float) -> PlanarPose:
    """Explicit Euler step; ``v`` is a body-frame command lifted by the current yaw."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    vx, vy, vz = u.v
    r = pose.r
    return PlanarPose(
        (r[0] + (c * vx - s * vy) * dt, r[1] + (s * vx + c * vy) * dt, r[2] + vz * dt),
        pose.yaw + u.omega * dt,
    )


def true_clearance_alpha(pose: PlanarPose, world: World, vessel: HyperEllipsoid) -> float:
    return world.true_clearance_alpha(pose, vessel)


@dataclass
class TrajectoryRecord:
    rows: list[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_csv().encode("utf-8"))
        return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class EpisodeResult:
    record: TrajectoryRecord
    metrics: dict
    path: WaypointPath

    @property
    def outcome(self) -> str:
        return self.metrics["outcome"]


def _stats(samples: list[float]) -> dict:
    if not samples:
        return {"count": 0}
    a = np.asarray(samples) * 1e3
    return {
        "count": int(a.size),
        "mean_ms": float(a.mean()),
        "median_ms": float(np.median(a)),
        "p95_ms": float(np.percentile(a, 95)),
        "max_ms": float(a.max()),
    }


def plan_for(scenario: Scenario) -> WaypointPath:
    """Global plan on the scenario's floor plan (transient obstacles excluded)."""
    static = scenario.world.static()
    pts = [scenario.start.position[:2], scenario.goal[:2]]
    bb = static.bounds_2d()
    if bb is not None:
        pts += [bb[0], bb[1]]
    pts = np.array(pts)
    m = scenario.planner.margin
    bounds = (pts.min(axis=0) - m, pts.max(axis=0) + m)
    grid = rasterize(static, scenario.planner.resolution, scenario.inflation, bounds=bounds)
    return GridPlanner(grid, scenario.planner.advance_radius).plan(scenario.start.position, scenario.goal)


def run_episode(
    scenario: Scenario,
    vessel_on: bool = True,
    mariner_on: bool = True,
    threads: int | None = None,
    path: WaypointPath | None = None,
) -> EpisodeResult:
    """Simulate one episode and collect the trajectory and summary metrics.

    Terminates on reaching the goal (planar distance below the tolerance),
    collision (true clearance alpha below 1), stuck (command norm below
    ``stuck_speed`` for ``stuck_window_s``) or the end of the duration.
    """
    if threads is not None:
        _kernels.set_threads(threads)
    sc = scenario
    wall0 = time.perf_counter()
    if path is None:
        path = plan_for(sc)
    tracker = WaypointTracker(path)
    rng = np.random.default_rng(sc.seed)
    directions = sc.sensor.directions()
    identity = PlanarPose.identity()
    dt = sc.rates.sim_dt
    n_ticks = round(sc.duration_s / dt)
    k_sensor = sc.rates.sensor_ticks
    k_mariner = sc.rates.mariner_ticks
    term = sc.termination
    stuck_ticks_needed = round(term.stuck_window_s / dt)
    beta = sc.vessel_params.beta
    z_crop = sc.vessel_params.z_crop

    timings = {"scan": [], "cbf": [], "mariner": [], "filter": [], "clearance": []}
    record = TrajectoryRecord()
    pose = sc.start
    u_ref = u = ControlCommand()
    h_soft = h_min = math.nan
    chosen_angle = math.nan
    preview_world: np.ndarray | None = None
    mariner_stuck = infeasible = False
    still_ticks = 0
    outcome = "timeout"
    time_to_goal = None
    path_length = 0.0
    min_clear = math.inf
    min_h = math.inf
    n_infeasible = n_mariner_stuck = n_active = 0

    for k in range(n_ticks):
        t = k * dt
        if k % k_sensor == 0:
            t0 = time.perf_counter()
            cloud = lidar_scan(pose, sc.world, sc.sensor, rng, directions)
            if z_crop is not None:
                cloud = cloud.crop_z(*z_crop)
            t1 = time.perf_counter()
            ev = evaluate_cbf(sc.vessel, identity, cloud, sc.vessel_params)
            t2 = time.perf_counter()
            timings["scan"].append(t1 - t0)
            timings["cbf"].append(t2 - t1)
            h_soft, h_min = ev.h, ev.h_min
            if not ev.empty:
                min_h = min(min_h, h_soft)
            tracker.update(pose)
            wp_body = tracker.target_body(pose)
            if mariner_on and k % k_mariner == 0:
                t3 = time.perf_counter()
                res = select_preview_target(sc.needles, cloud, wp_body)
                timings["mariner"].append(time.perf_counter() - t3)
                mariner_stuck = res.stuck
                if res.stuck:
                    n_mariner_stuck += 1
                    preview_world = None
                    chosen_angle = math.nan
                else:
                    preview_world = world_from_body(pose, res.preview_target_body)
                    chosen_angle = res.chosen_angle
            if mariner_on and preview_world is not None:
                target_body = body_from_world(pose, preview_world)
            else:
                target_body = wp_body
            t4 = time.perf_counter()
            step = safe_command(target_body, ev if vessel_on else None, sc.filter)
            timings["filter"].append(time.perf_counter() - t4)
            u_ref, u = step.u_ref, step.u
            infeasible = step.infeasible
            n_infeasible += int(infeasible)
            n_active += int(step.active)

        t5 = time.perf_counter()
        clear = sc.world.true_clearance_alpha(pose, sc.vessel) if len(sc.world) else math.inf
        timings["clearance"].append(time.perf_counter() - t5)
        min_clear = min(min_clear, clear)
        preview = preview_world if (mariner_on and preview_world is not None) else tracker.active_world
        record.rows.append(
            (
                t, *pose.r, pose.yaw,
                *u_ref.v, u_ref.omega,
                *u.v, u.omega,
                h_soft, h_min, h_min + beta,
                chosen_angle,
                *preview,
                tracker.index,
                clear,
                mariner_stuck, infeasible,
            )
        )

        if math.hypot(pose.r[0] - sc.goal[0], pose.r[1] - sc.goal[1]) < term.goal_tolerance:
            outcome, time_to_goal = "reached", t
            break
        if clear < 1.0:
            outcome = "collision"
            break
        still_ticks = still_ticks + 1 if u.norm < term.stuck_speed else 0
        if still_ticks >= stuck_ticks_needed:
            outcome = "stuck"
            break

        nxt = integrate(pose, u, dt)
        path_length += math.hypot(nxt.r[0] - pose.r[0], nxt.r[1] - pose.r[1])
        pose = nxt

    metrics = {
        "scenario": sc.name,
        "vessel_on": vessel_on,
        "mariner_on": mariner_on,
        "seed": sc.seed,
        "outcome": outcome,
        "reached": outcome == "reached",
        "time_to_goal": time_to_goal,
        "path_length": path_length,
        "min_true_clearance_alpha": min_clear,
        "min_h_soft": min_h,
        "final_position": list(pose.r),
        "rows": len(record),
        "filter_active_updates": n_active,
        "infeasible_updates": n_infeasible,
        "mariner_stuck_updates": n_mariner_stuck,
        "waypoints": path.waypoints.tolist(),
        "plan_cost": path.cost,
        "wall_time_s": time.perf_counter() - wall0,
        "timings": {name: _stats(v) for name, v in timings.items()},
    }
    return EpisodeResult(record, metrics, path)


def write_outputs(result: EpisodeResult, out_dir: str | Path, stem: str | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.metrics.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or result.metrics["scenario"]
    csv_path = result.record.write_csv(out_dir / f"{stem}.csv")
    metrics_path = out_dir / f"{stem}.metrics.json"
    metrics_path.write_text(json.dumps(_jsonable(result.metrics), indent=2) + "\n", encoding="utf-8")
    return csv_path, metrics_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj
