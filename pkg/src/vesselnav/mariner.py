"""Needle-based preview target selection.

Heading space is discretized into needles, each an elongated higher-order
ellipsoid rooted at the robot center and pointing along a fixed body-frame yaw.
A needle stretches only along its own axis: for a needle-frame point
``(x, y, z)`` with

    m^d = 1 - y^d / b^d - z^d / c^d > 0   and   x > 0

the needle of scale ``s`` (center ``s*a``, x semi-axis ``s*a``) reaches the
point when ``s = x / ((1 + m) * a)``. The needle scale is the smallest such
value over the cloud, capped at ``s_max``. Needles shorter than ``s_min`` are
invalid; among the valid ones the scaled tip ``(2*s*a, 0, 0)`` nearest the
waypoint becomes the preview target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .geometry import int_pow, wrap_angle
from .vessel import PointCloud

DEFAULT_S_MIN = 0.3
DEFAULT_S_MAX = 2.5


@dataclass(frozen=True)
class NeedleConfig:
    """Needle shape, count, scale limits and angle distribution.

    ``dist`` is ``"uniform"`` for ``theta_i = 2*pi*i/n - pi`` or an explicit
    sequence of ``n_needle`` angles (radians).
    """

    a_bar: float = 2.0
    b_bar: float = 0.8
    c_bar: float = 0.8
    d_bar: int = 2
    n_needle: int = 100
    s_min: float = DEFAULT_S_MIN
    s_max: float = DEFAULT_S_MAX
    dist: str | tuple[float, ...] = "uniform"

    def __post_init__(self):
        for name in ("a_bar", "b_bar", "c_bar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if int(self.d_bar) != self.d_bar or self.d_bar < 1:
            raise ValueError("d_bar must be an integer >= 1")
        if self.d_bar % 2:
            raise ValueError(f"d_bar must be even so powers are sign-symmetric, got {self.d_bar}")
        object.__setattr__(self, "d_bar", int(self.d_bar))
        if int(self.n_needle) != self.n_needle or self.n_needle < 1:
            raise ValueError("n_needle must be an integer >= 1")
        if not 0 < self.s_min < self.s_max:
            raise ValueError(f"need 0 < s_min < s_max, got {self.s_min}, {self.s_max}")
        if isinstance(self.dist, str):
            if self.dist != "uniform":
                raise ValueError(f"unknown needle distribution {self.dist!r}")
        else:
            angles = tuple(float(a) for a in self.dist)
            if len(angles) != self.n_needle:
                raise ValueError("explicit needle angles must have n_needle entries")
            object.__setattr__(self, "dist", angles)

    @property
    def max_tip(self) -> float:
        return 2.0 * self.s_max * self.a_bar


@dataclass(frozen=True)
class NeedleResult:
    angles: np.ndarray
    scales: np.ndarray
    valid: np.ndarray
    chosen_index: int | None
    preview_target_body: np.ndarray | None
    clipped: bool = False

    @property
    def stuck(self) -> bool:
        return self.chosen_index is None

    @property
    def chosen_angle(self) -> float:
        return math.nan if self.chosen_index is None else float(self.angles[self.chosen_index])

    def tips(self, config: NeedleConfig) -> np.ndarray:
        return needle_tips(self.angles, self.scales, config.a_bar)


def needle_angles(config: NeedleConfig) -> np.ndarray:
    if config.dist == "uniform":
        n = config.n_needle
        return (2.0 * math.pi / n) * np.arange(n) - math.pi
    return np.array(config.dist, dtype=float)


def needle_tips(angles, scales, a_bar: float) -> np.ndarray:
    """Body-frame tips ``R(theta) (2*s*a, 0, 0)``."""
    length = 2.0 * np.asarray(scales) * a_bar
    angles = np.asarray(angles)
    return np.stack([length * np.cos(angles), length * np.sin(angles), np.zeros_like(length)], axis=-1)


def _prepare(config: NeedleConfig, cloud_body: PointCloud):
    pts = cloud_body.points
    if cloud_body.frame != "body":
        raise ValueError("needle scaling expects a body-frame cloud")
    zt = int_pow(pts[:, 2], config.d_bar) / config.c_bar**config.d_bar
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), np.ascontiguousarray(zt)


def needle_scales(config: NeedleConfig, cloud_body: PointCloud, angles: np.ndarray | None = None) -> np.ndarray:
    """Scale of every needle against the cloud."""
    uniform = angles is None and config.dist == "uniform"
    if angles is None:
        angles = needle_angles(config)
    angles = np.asarray(angles, dtype=float)
    px, py, zt = _prepare(config, cloud_body)
    inv_bd = 1.0 / config.b_bar**config.d_bar
    cos_t, sin_t = np.cos(angles), np.sin(angles)
    if uniform:
        return _kernels.needle_scales_uniform(
            px, py, zt, cos_t, sin_t, config.a_bar, config.b_bar, inv_bd, config.d_bar, config.s_max
        )
    return _kernels.needle_scales(px, py, zt, cos_t, sin_t, config.a_bar, inv_bd, config.d_bar, config.s_max)


def needle_scale(config: NeedleConfig, theta: float, cloud_body: PointCloud) -> float:
    """Scale of a single needle pointing at body yaw ``theta``."""
    return float(needle_scales(config, cloud_body, np.array([theta]))[0])


def select_preview_target(config: NeedleConfig, cloud_body: PointCloud, target_body: Sequence[float]) -> NeedleResult:
    """Pick the valid needle whose scaled tip is nearest ``target_body``.

    Ties go to the smallest needle index. When the target is nearer than the
    chosen tip and a needle aimed straight at it is valid and long enough to
    reach it, the target itself is returned (no overshoot near the goal). No
    valid needle gives a stuck result with ``chosen_index=None``.
    """
    target = np.asarray(target_body, dtype=float)
    angles = needle_angles(config)
    scales = needle_scales(config, cloud_body)
    valid = scales >= config.s_min
    if not valid.any():
        return NeedleResult(angles, scales, valid, None, None)
    tips = needle_tips(angles, scales, config.a_bar)
    dist = np.linalg.norm(tips - target, axis=1)
    dist[~valid] = np.inf
    chosen = int(np.argmin(dist))
    preview = tips[chosen]
    clipped = False
    reach = math.hypot(target[0], target[1])
    if reach < math.hypot(preview[0], preview[1]):
        bearing = math.atan2(target[1], target[0]) if reach > 0.0 else 0.0
        s_direct = needle_scale(config, bearing, cloud_body)
        if s_direct >= config.s_min and 2.0 * s_direct * config.a_bar >= reach:
            preview = target.copy()
            clipped = True
    return NeedleResult(angles, scales, valid, chosen, preview, clipped)


def nearest_grid_index(config: NeedleConfig, theta: float) -> int:
    """Index of the needle whose angle is closest to ``theta``."""
    angles = needle_angles(config)
    diff = np.abs(np.array([wrap_angle(a - theta) for a in angles]))
    return int(np.argmin(diff))
