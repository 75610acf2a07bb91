"""Scenario description and its YAML file format.

A scenario file is a YAML mapping::

    name: box_wall
    description: free text
    world:                      # list of obstacles
      - type: box               # axis-aligned box
        min: [x, y, z]
        max: [x, y, z]
        transient: true         # optional; absent from the planner's floor plan
      - type: prism             # convex polygon extruded vertically
        vertices: [[x, y], ...]
        z: [z_lo, z_hi]
    start: {position: [x, y, z], yaw: 0.0}
    goal: [x, y, z]
    vessel: {semi_axes: [a, b, c], order: 1, beta: 1.2, delta: 0.01,
             n_max: 65536, z_crop: [-0.15, 1.0]}
    needles: {semi_axes: [a, b, c], order: 2, count: 100, s_min: 0.3,
              s_max: 2.5, dist: uniform}
    filter: {gamma_bar: 2.0, k_v: [1, 1, 1], k_omega: 1.0, v_max: 0.8,
             omega_max: 1.0, heading_deadband: 0.05, planar: true}
    sensor: {n_channels: 16, rays_per_channel: 360, vertical_fov: [-15, 15],
             max_range: 20.0, noise_sigma: 0.0}
    planner: {resolution: 0.1, inflation: null, advance_radius: 0.5, margin: 1.0}
    rates: {sensor_hz: 10, mariner_hz: 2, sim_dt: 0.01}
    termination: {goal_tolerance: 0.2, stuck_speed: 0.001, stuck_window_s: 5.0}
    duration_s: 60
    seed: 0

Every block except ``world``, ``start`` and ``goal`` is optional and falls
back to the defaults shown. ``planner.inflation: null`` means the vessel's
largest semi-axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .geometry import HyperEllipsoid, PlanarPose
from .mariner import NeedleConfig
from .safety_filter import FilterParams
from .vessel import VesselParams
from .world import Prism, World

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True)
class LidarSpec:
    n_channels: int = 16
    rays_per_channel: int = 360
    vertical_fov: tuple[float, float] = (-15.0, 15.0)
    max_range: float = 20.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.n_channels < 1 or self.rays_per_channel < 1:
            raise ValueError("channel and ray counts must be positive")
        if not self.max_range > 0:
            raise ValueError("max_range must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        lo, hi = self.vertical_fov
        if lo > hi:
            raise ValueError("vertical_fov must be [low, high]")
        object.__setattr__(self, "vertical_fov", (float(lo), float(hi)))

    def directions(self) -> np.ndarray:
        """Unit ray directions in the body frame, channel-major."""
        if self.n_channels == 1:
            elev = np.array([0.5 * (self.vertical_fov[0] + self.vertical_fov[1])])
        else:
            elev = np.linspace(self.vertical_fov[0], self.vertical_fov[1], self.n_channels)
        elev = np.radians(elev)
        az = (2.0 * math.pi / self.rays_per_channel) * np.arange(self.rays_per_channel) - math.pi
        ce, se = np.cos(elev)[:, None], np.sin(elev)[:, None]
        d = np.stack(
            [ce * np.cos(az)[None, :], ce * np.sin(az)[None, :], np.broadcast_to(se, (elev.size, az.size))],
            axis=-1,
        )
        return d.reshape(-1, 3)


@dataclass(frozen=True)
class Rates:
    sensor_hz: float = 10.0
    mariner_hz: float = 2.0
    sim_dt: float = 0.01

    def __post_init__(self):
        if not (self.sensor_hz > 0 and self.mariner_hz > 0 and self.sim_dt > 0):
            raise ValueError("rates and sim_dt must be positive")
        s = 1.0 / (self.sensor_hz * self.sim_dt)
        m = 1.0 / (self.mariner_hz * self.sim_dt)
        if abs(s - round(s)) > 1e-9 or abs(m - round(m)) > 1e-9 or round(s) < 1:
            raise ValueError("sensor and mariner periods must be whole numbers of sim ticks")
        if round(m) % round(s):
            raise ValueError("the mariner period must be a multiple of the sensor period")

    @property
    def sensor_ticks(self) -> int:
        return round(1.0 / (self.sensor_hz * self.sim_dt))

    @property
    def mariner_ticks(self) -> int:
        return round(1.0 / (self.mariner_hz * self.sim_dt))


@dataclass(frozen=True)
class PlannerSpec:
    resolution: float = 0.1
    inflation: float | None = None
    advance_radius: float = 0.5
    margin: float = 1.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if self.inflation is not None and self.inflation < 0:
            raise ValueError("inflation must be >= 0")
        if not self.advance_radius > 0:
            raise ValueError("advance_radius must be > 0")


@dataclass(frozen=True)
class Termination:
    goal_tolerance: float = 0.2
    stuck_speed: float = 1e-3
    stuck_window_s: float = 5.0


def default_filter() -> FilterParams:
    return FilterParams(v_max=0.8, omega_max=1.0, planar=True)


@dataclass
class Scenario:
    name: str
    world: World
    start: PlanarPose
    goal: np.ndarray
    vessel: HyperEllipsoid = field(default_factory=lambda: HyperEllipsoid(0.8, 0.4, 0.4, 1))
    vessel_params: VesselParams = field(default_factory=VesselParams)
    needles: NeedleConfig = field(default_factory=NeedleConfig)
    filter: FilterParams = field(default_factory=default_filter)
    sensor: LidarSpec = field(default_factory=LidarSpec)
    planner: PlannerSpec = field(default_factory=PlannerSpec)
    rates: Rates = field(default_factory=Rates)
    termination: Termination = field(default_factory=Termination)
    duration_s: float = 60.0
    seed: int = 0
    description: str = ""

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=float).reshape(3)

    @property
    def inflation(self) -> float:
        return self.vessel.max_semi_axis if self.planner.inflation is None else self.planner.inflation

    def validate(self) -> None:
        """Geometric checks that need the whole scenario.

        Raises:
            ScenarioError: start or goal not in free space, or bad duration.
        """
        if not self.duration_s > 0:
            raise ScenarioError("duration_s", "must be > 0")
        steps = self.duration_s / self.rates.sim_dt
        if abs(steps - round(steps)) > 1e-6:
            raise ScenarioError("duration_s", "must be a whole number of sim_dt ticks")
        if len(self.world) and self.world.contains(self.start.position)[0]:
            raise ScenarioError("start.position", "inside an obstacle")
        if len(self.world) and self.world.true_clearance_alpha(self.start, self.vessel) < self.vessel_params.beta:
            raise ScenarioError("start.position", "vessel overlaps an obstacle (alpha < beta) at the start pose")
        if len(self.world) and self.world.contains(self.goal)[0]:
            raise ScenarioError("goal", "inside an obstacle")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        world = []
        for p in self.world.prisms:
            v = p.vertices
            is_box = v.shape[0] == 4 and np.allclose(v, [[v[:, 0].min(), v[:, 1].min()], [v[:, 0].max(), v[:, 1].min()],
                                                          [v[:, 0].max(), v[:, 1].max()], [v[:, 0].min(), v[:, 1].max()]])
            if is_box:
                item = {"type": "box", "min": [_f(v[:, 0].min()), _f(v[:, 1].min()), _f(p.z_lo)],
                        "max": [_f(v[:, 0].max()), _f(v[:, 1].max()), _f(p.z_hi)]}
            else:
                item = {"type": "prism", "vertices": [[_f(x), _f(y)] for x, y in v], "z": [_f(p.z_lo), _f(p.z_hi)]}
            if p.transient:
                item["transient"] = True
            if p.name:
                item["name"] = p.name
            world.append(item)
        n = self.needles
        f = self.filter
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "world": world,
            "start": {"position": [_f(x) for x in self.start.r], "yaw": _f(self.start.yaw)},
            "goal": [_f(x) for x in self.goal],
            "vessel": {
                "semi_axes": [self.vessel.a, self.vessel.b, self.vessel.c],
                "order": self.vessel.d,
                "beta": self.vessel_params.beta,
                "delta": self.vessel_params.delta,
                "n_max": self.vessel_params.n_max,
                "z_crop": None if self.vessel_params.z_crop is None else list(self.vessel_params.z_crop),
            },
            "needles": {
                "semi_axes": [n.a_bar, n.b_bar, n.c_bar],
                "order": n.d_bar,
                "count": n.n_needle,
                "s_min": n.s_min,
                "s_max": n.s_max,
                "dist": n.dist if isinstance(n.dist, str) else list(n.dist),
            },
            "filter": {
                "gamma_bar": f.gamma_bar,
                "k_v": list(f.k_v),
                "k_omega": f.k_omega,
                "v_max": f.v_max,
                "omega_max": f.omega_max,
                "heading_deadband": f.heading_deadband,
                "planar": f.planar,
            },
            "sensor": {
                "n_channels": self.sensor.n_channels,
                "rays_per_channel": self.sensor.rays_per_channel,
                "vertical_fov": list(self.sensor.vertical_fov),
                "max_range": self.sensor.max_range,
                "noise_sigma": self.sensor.noise_sigma,
            },
            "planner": {
                "resolution": self.planner.resolution,
                "inflation": self.planner.inflation,
                "advance_radius": self.planner.advance_radius,
                "margin": self.planner.margin,
            },
            "rates": {"sensor_hz": self.rates.sensor_hz, "mariner_hz": self.rates.mariner_hz, "sim_dt": self.rates.sim_dt},
            "termination": {
                "goal_tolerance": self.termination.goal_tolerance,
                "stuck_speed": self.termination.stuck_speed,
                "stuck_window_s": self.termination.stuck_window_s,
            },
            "duration_s": self.duration_s,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("", "scenario must be a mapping")
        r = _Reader(data)
        schema = r.get("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ScenarioError("schema", f"unsupported schema version {schema!r}")
        world = World([_prism(item, f"world[{i}]") for i, item in enumerate(r.require("world", list))])
        start = r.section("start", required=True)
        start_pose = start.build(
            lambda: PlanarPose(tuple(start.vec("position", 3)), start.num("yaw", 0.0))
        )
        goal = r.vec("goal", 3)
        v = r.section("vessel")
        vessel = v.build(lambda: HyperEllipsoid(*v.vec("semi_axes", 3, (0.8, 0.4, 0.4)), d=v.integer("order", 1)))
        vessel_params = v.build(
            lambda: VesselParams(
                beta=v.num("beta", 1.2),
                delta=v.num("delta", 0.01),
                n_max=v.integer("n_max", 65_536),
                z_crop=None if v.get("z_crop", (-0.15, 1.0)) is None else tuple(v.vec("z_crop", 2, (-0.15, 1.0))),
            )
        )
        nd = r.section("needles")
        dist = nd.get("dist", "uniform")
        needles = nd.build(
            lambda: NeedleConfig(
                *nd.vec("semi_axes", 3, (2.0, 0.8, 0.8)),
                d_bar=nd.integer("order", 2),
                n_needle=nd.integer("count", 100),
                s_min=nd.num("s_min", 0.3),
                s_max=nd.num("s_max", 2.5),
                dist=dist if isinstance(dist, str) else tuple(float(a) for a in dist),
            )
        )
        fl = r.section("filter")
        filt = fl.build(
            lambda: FilterParams(
                gamma_bar=fl.num("gamma_bar", 2.0),
                k_v=tuple(fl.vec("k_v", 3, (1.0, 1.0, 1.0))),
                k_omega=fl.num("k_omega", 1.0),
                v_max=fl.num("v_max", 0.8, allow_none=True),
                omega_max=fl.num("omega_max", 1.0, allow_none=True),
                heading_deadband=fl.num("heading_deadband", 0.05),
                planar=fl.boolean("planar", True),
            )
        )
        se = r.section("sensor")
        sensor = se.build(
            lambda: LidarSpec(
                n_channels=se.integer("n_channels", 16),
                rays_per_channel=se.integer("rays_per_channel", 360),
                vertical_fov=tuple(se.vec("vertical_fov", 2, (-15.0, 15.0))),
                max_range=se.num("max_range", 20.0),
                noise_sigma=se.num("noise_sigma", 0.0),
            )
        )
        pl = r.section("planner")
        planner = pl.build(
            lambda: PlannerSpec(
                resolution=pl.num("resolution", 0.1),
                inflation=pl.num("inflation", None, allow_none=True),
                advance_radius=pl.num("advance_radius", 0.5),
                margin=pl.num("margin", 1.0),
            )
        )
        ra = r.section("rates")
        rates = ra.build(
            lambda: Rates(ra.num("sensor_hz", 10.0), ra.num("mariner_hz", 2.0), ra.num("sim_dt", 0.01))
        )
        te = r.section("termination")
        term = te.build(
            lambda: Termination(te.num("goal_tolerance", 0.2), te.num("stuck_speed", 1e-3), te.num("stuck_window_s", 5.0))
        )
        scen = cls(
            name=str(r.get("name", "scenario")),
            description=str(r.get("description", "")),
            world=world,
            start=start_pose,
            goal=np.array(goal),
            vessel=vessel,
            vessel_params=vessel_params,
            needles=needles,
            filter=filt,
            sensor=sensor,
            planner=planner,
            rates=rates,
            termination=term,
            duration_s=r.num("duration_s", 60.0),
            seed=r.integer("seed", 0),
        )
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ScenarioError(sorted(unknown)[0], "unknown key")
        scen.validate()
        return scen

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=100)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_yaml(), encoding="utf-8")
        return path

    @classmethod
    def from_yaml(cls, text: str) -> "Scenario":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else "yaml"
            raise ScenarioError(where, f"malformed YAML ({getattr(exc, 'problem', exc)})") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError("scenario", f"cannot read {path}: {exc.strerror}") from exc
        return cls.from_yaml(text)


_TOP_KEYS = {
    "schema", "name", "description", "world", "start", "goal", "vessel", "needles", "filter",
    "sensor", "planner", "rates", "termination", "duration_s", "seed",
}


def _f(x) -> float:
    return float(x)


class _Reader:
    """Typed accessors over a mapping that report errors with the field path."""

    def __init__(self, data: dict, prefix: str = ""):
        self.data = data
        self.prefix = prefix

    def path(self, key: str) -> str:
        return f"{self.prefix}.{key}" if self.prefix else key

    def get(self, key, default=None):
        return self.data.get(key, default)

    def require(self, key, kind):
        if key not in self.data:
            raise ScenarioError(self.path(key), "missing required field")
        val = self.data[key]
        if not isinstance(val, kind):
            raise ScenarioError(self.path(key), f"expected {kind.__name__}, got {type(val).__name__}")
        return val

    def section(self, key, required: bool = False) -> "_Reader":
        if key not in self.data or self.data[key] is None:
            if required:
                raise ScenarioError(self.path(key), "missing required section")
            return _Reader({}, self.path(key))
        val = self.data[key]
        if not isinstance(val, dict):
            raise ScenarioError(self.path(key), "expected a mapping")
        return _Reader(val, self.path(key))

    def num(self, key, default, allow_none: bool = False):
        val = self.data.get(key, default)
        if val is None and allow_none:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ScenarioError(self.path(key), f"expected a finite number, got {val!r}")
        return float(val)

    def integer(self, key, default):
        val = self.data.get(key, default)
        if isinstance(val, bool) or not isinstance(val, int):
            raise ScenarioError(self.path(key), f"expected an integer, got {val!r}")
        return val

    def boolean(self, key, default):
        val = self.data.get(key, default)
        if not isinstance(val, bool):
            raise ScenarioError(self.path(key), f"expected true/false, got {val!r}")
        return val

    def vec(self, key, n, default=None):
        val = self.data.get(key, default)
        if val is None:
            raise ScenarioError(self.path(key), "missing required field")
        if not isinstance(val, (list, tuple)) or len(val) != n:
            raise ScenarioError(self.path(key), f"expected a list of {n} numbers, got {val!r}")
        out = []
        for x in val:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ScenarioError(self.path(key), f"expected numbers, got {val!r}")
            out.append(float(x))
        return out

    def build(self, fn):
        try:
            return fn()
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(self.prefix, str(exc)) from exc


def _prism(item, where: str) -> Prism:
    if not isinstance(item, dict):
        raise ScenarioError(where, "expected a mapping")
    r = _Reader(item, where)
    kind = item.get("type")
    transient = r.boolean("transient", False)
    name = str(item.get("name", ""))
    if kind == "box":
        return r.build(lambda: Prism.box(r.vec("min", 3), r.vec("max", 3), transient, name))
    if kind == "prism":
        verts = item.get("vertices")
        if not isinstance(verts, list) or len(verts) < 3:
            raise ScenarioError(r.path("vertices"), "expected at least 3 [x, y] pairs")
        return r.build(lambda: Prism(np.array(verts, dtype=float), *r.vec("z", 2), transient, name))
    raise ScenarioError(r.path("type"), f"unknown obstacle type {kind!r} (use 'box' or 'prism')")
