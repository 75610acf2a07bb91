"""Higher-order ellipsoids, planar poses and scaling-factor arithmetic.

A higher-order ellipsoid of order ``d`` with semi-axes ``(a, b, c)`` is the set

    (x/a)^(2d) + (y/b)^(2d) + (z/c)^(2d) <= 1

and the *alpha value* of a body-frame point is the left-hand side. ``alpha >= 1``
means the point is outside the unscaled body. The geometric scaling factor is
``alpha ** (1 / (2d))``: the uniform scale at which the boundary passes through
the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to ``[-pi, pi)``."""
    w = math.fmod(theta + math.pi, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    w -= math.pi
    # fmod can land exactly on +pi after the shift for inputs just below a multiple of 2pi
    if w >= math.pi:
        w -= TWO_PI
    return w


def int_pow(x, n: int):
    """``x ** n`` for integer ``n >= 1`` by repeated squaring (works on arrays)."""
    result = None
    base = x
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


@dataclass(frozen=True)
class HyperEllipsoid:
    """Axis-aligned higher-order ellipsoid in its own body frame.

    Attributes:
        a, b, c: Semi-axis lengths along body x, y, z (meters).
        d: Integer order; ``d = 1`` is an ordinary ellipsoid.
    """

    a: float
    b: float
    c: float
    d: int = 1

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"semi-axis {name} must be finite and > 0, got {v!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"order d must be an integer >= 1, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def semi_axes(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    @property
    def inv_pow(self) -> np.ndarray:
        """Diagonal of ``P^d``: ``1 / axis^(2d)``."""
        return 1.0 / int_pow(self.semi_axes, 2 * self.d)

    @property
    def max_semi_axis(self) -> float:
        return max(self.a, self.b, self.c)


@dataclass(frozen=True)
class PlanarPose:
    """World-frame position plus yaw. Orientation is yaw-only.

    ``yaw`` is wrapped to ``[-pi, pi)`` on construction.
    """

    r: tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        r = tuple(float(v) for v in self.r)
        if len(r) != 3 or not all(math.isfinite(v) for v in r):
            raise ValueError(f"position must be 3 finite values, got {self.r!r}")
        if not math.isfinite(self.yaw):
            raise ValueError("yaw must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))

    @classmethod
    def identity(cls) -> "PlanarPose":
        return cls((0.0, 0.0, 0.0), 0.0)

    @property
    def position(self) -> np.ndarray:
        return np.array(self.r, dtype=float)

    @property
    def quaternion(self) -> np.ndarray:
        """Unit quaternion ``(w, x, y, z)`` of the yaw rotation."""
        half = 0.5 * self.yaw
        return np.array([math.cos(half), 0.0, 0.0, math.sin(half)])

    @property
    def dquat_dyaw(self) -> np.ndarray:
        half = 0.5 * self.yaw
        return 0.5 * np.array([-math.sin(half), 0.0, 0.0, math.cos(half)])

    @property
    def rotation(self) -> np.ndarray:
        return yaw_matrix(self.yaw)


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion ``(w, x, y, z)``.

    Uses the ``2w^2 + 2x^2 - 1`` diagonal form, so it is exact only for unit
    quaternions; the barrier gradient is taken of this same expression.
    """
    w, x, y, z = q
    return np.array(
        [
            [2 * (w * w + x * x) - 1, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 2 * (w * w + y * y) - 1, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 2 * (w * w + z * z) - 1],
        ]
    )


def alpha_value(E: HyperEllipsoid, p) -> np.ndarray | float:
    """Sum of ``p_i^(2d) / axis_i^(2d)`` for a body-frame point (or ``(N, 3)`` array)."""
    p = np.asarray(p, dtype=float)
    terms = int_pow(p, 2 * E.d) * E.inv_pow
    out = terms[..., 0] + terms[..., 1] + terms[..., 2]
    return float(out) if out.ndim == 0 else out


def geometric_scale(E: HyperEllipsoid, p) -> np.ndarray | float:
    """Uniform scale ``s`` that puts ``p`` on the boundary of ``s * E``."""
    alpha = alpha_value(E, p)
    return np.power(alpha, 1.0 / (2 * E.d)) if isinstance(alpha, np.ndarray) else alpha ** (1.0 / (2 * E.d))


def body_from_world(pose: PlanarPose, p_w) -> np.ndarray:
    """Map world-frame point(s) into the pose's body frame: ``R^T (p_w - r)``."""
    p_w = np.asarray(p_w, dtype=float)
    return (p_w - pose.position) @ pose.rotation


def world_from_body(pose: PlanarPose, p_b) -> np.ndarray:
    """Map body-frame point(s) to world: ``R p_b + r``."""
    p_b = np.asarray(p_b, dtype=float)
    return p_b @ pose.rotation.T + pose.position
