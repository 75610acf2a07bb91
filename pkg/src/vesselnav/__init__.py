"""Point-cloud control-barrier navigation: a higher-order-ellipsoid safety
filter (the vessel) with a needle-based preview planner (the mariner)."""

from .geometry import HyperEllipsoid, PlanarPose, alpha_value, geometric_scale, wrap_angle
from .mariner import NeedleConfig, NeedleResult, needle_scale, needle_scales, select_preview_target
from .planning import (
    GridPlanner,
    NoPathError,
    OccupancyGrid,
    WaypointPath,
    WaypointTracker,
    active_waypoint,
    plan_path,
    rasterize,
)
from .safety_filter import (
    ControlCommand,
    FilterParams,
    InfeasibleFilterError,
    filter_command,
    reference_control,
    safe_command,
)
from .scenario import Scenario, ScenarioError
from .sim import TrajectoryRecord, integrate, lidar_scan, run_episode
from .vessel import CbfEval, EmptyCloudError, PointCloud, VesselParams, evaluate_cbf
from .world import Prism, World

__version__ = "0.1.0"

__all__ = [
    "CbfEval", "ControlCommand", "EmptyCloudError", "FilterParams", "GridPlanner", "HyperEllipsoid",
    "InfeasibleFilterError", "NeedleConfig", "NeedleResult", "NoPathError", "OccupancyGrid", "PlanarPose",
    "PointCloud", "Prism", "Scenario", "ScenarioError", "TrajectoryRecord", "VesselParams", "WaypointPath",
    "WaypointTracker", "World", "active_waypoint", "alpha_value", "evaluate_cbf", "filter_command",
    "geometric_scale", "integrate", "lidar_scan", "needle_scale", "needle_scales", "plan_path", "rasterize",
    "reference_control", "run_episode", "safe_command", "select_preview_target", "wrap_angle",
]
