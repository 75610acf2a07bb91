"""Kernel throughput benchmark on a synthetic LiDAR-like cloud."""

from __future__ import annotations

import math
import os
import platform
import time

import numpy as np

from . import _kernels
from .geometry import HyperEllipsoid, PlanarPose
from .mariner import NeedleConfig, select_preview_target
from .vessel import PointCloud, VesselParams, evaluate_cbf


def synthetic_cloud(n_points: int, seed: int = 0, min_range: float = 1.0, max_range: float = 20.0) -> PointCloud:
    """Seeded body-frame cloud shaped like a 16-channel spinning LiDAR return."""
    rng = np.random.default_rng(seed)
    az = rng.uniform(-math.pi, math.pi, n_points)
    el = np.deg2rad(rng.choice(np.linspace(-15.0, 15.0, 16), n_points))
    rho = rng.uniform(min_range, max_range, n_points)
    pts = np.stack([rho * np.cos(el) * np.cos(az), rho * np.cos(el) * np.sin(az), rho * np.sin(el)], axis=1)
    return PointCloud(pts, "body")


def _time(fn, iterations: int) -> np.ndarray:
    out = np.empty(iterations)
    for k in range(iterations):
        t0 = time.perf_counter()
        fn()
        out[k] = time.perf_counter() - t0
    return out


def _summary(samples: np.ndarray, n_points: int) -> dict:
    med = float(np.median(samples))
    return {
        "median_ms": med * 1e3,
        "p95_ms": float(np.percentile(samples, 95)) * 1e3,
        "points_per_s": n_points / med if med > 0 else math.inf,
    }


def run_bench(n_points: int = 57_600, n_needles: int = 100, iterations: int = 50, seed: int = 0,
              threads: int | None = None, warmup: int = 3) -> dict:
    """Median and p95 latency of the barrier evaluation and of a full needle pass.

    The needle pass is scale computation for every needle plus selection.
    """
    if min(n_points, n_needles, iterations) < 1:
        raise ValueError("points, needles and iterations must all be >= 1")
    if threads is not None:
        _kernels.set_threads(threads)
    cloud = synthetic_cloud(n_points, seed)
    vessel = HyperEllipsoid(0.8, 0.4, 0.4, 1)
    params = VesselParams()
    pose = PlanarPose.identity()
    needles = NeedleConfig(n_needle=n_needles)
    target = np.array([5.0, 1.0, 0.0])

    def cbf():
        evaluate_cbf(vessel, pose, cloud, params)

    def mariner():
        select_preview_target(needles, cloud, target)

    for _ in range(warmup):
        cbf()
        mariner()
    return {
        "n_points": n_points,
        "n_needles": n_needles,
        "iterations": iterations,
        "seed": seed,
        "threads": _kernels.get_threads(),
        "cpu_count": os.cpu_count(),
        "machine": platform.machine(),
        "evaluate_cbf": _summary(_time(cbf, iterations), n_points),
        "mariner": _summary(_time(mariner, iterations), n_points),
    }
