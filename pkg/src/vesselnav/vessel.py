"""Point-cloud control barrier function built from scaling factors.

Every point ``p_j`` of the obstacle cloud contributes ``h_j = alpha_j - beta``
where ``alpha_j`` is the point's alpha value in the robot's body frame. The
per-point values are folded into one smooth barrier with a 1/N-normalized
softmin, evaluated in the min-shifted form so the largest exponent is zero:

    h = min_j h_j - delta * ln( (1/N) * sum_j exp(-(h_j - min_k h_k) / delta) )

The gradient is the softmin-weighted average of per-point gradients. Gradients
are taken w.r.t. the pose position ``r`` and quaternion ``q = (w, x, y, z)``
(``grad7``) and reduced to ``(r, yaw)`` through ``q(yaw)`` (``grad4``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import HyperEllipsoid, PlanarPose, alpha_value, body_from_world, world_from_body

# defaults: the safety margin must absorb the softmin's over-estimate for the
# largest cloud the pipeline is configured to accept
DEFAULT_BETA = 1.2
DEFAULT_DELTA = 0.01
DEFAULT_N_MAX = 65_536
DEFAULT_Z_CROP = (-0.15, 1.0)


class EmptyCloudError(ValueError):
    """Raised by :func:`softmin_stable` when given no values."""


@dataclass(frozen=True)
class PointCloud:
    """Ordered obstacle points tagged with the frame they are expressed in."""

    points: np.ndarray
    frame: str = "body"

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 3))
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        if self.frame not in ("body", "world"):
            raise ValueError(f"frame must be 'body' or 'world', got {self.frame!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def empty(cls, frame: str = "body") -> "PointCloud":
        return cls(np.zeros((0, 3)), frame)

    def to_world(self, pose: PlanarPose) -> "PointCloud":
        if self.frame == "world":
            return self
        return PointCloud(world_from_body(pose, self.points), "world")

    def to_body(self, pose: PlanarPose) -> "PointCloud":
        if self.frame == "body":
            return self
        return PointCloud(body_from_world(pose, self.points), "body")

    def crop_z(self, z_lo: float, z_hi: float) -> "PointCloud":
        """Keep body-frame points with ``z_lo <= z <= z_hi`` (drops floor returns)."""
        if self.frame != "body":
            raise ValueError("z crop is defined on body-frame clouds")
        z = self.points[:, 2]
        return PointCloud(self.points[(z >= z_lo) & (z <= z_hi)], "body")


@dataclass(frozen=True)
class VesselParams:
    """Safety margin ``beta`` and softmin sharpness ``delta``.

    ``n_max`` is the largest cloud size the configuration is meant for; the
    constructor rejects ``beta < 1 + delta * ln(n_max)`` because then ``h >= 0``
    would no longer imply that every point is outside the unscaled vessel.
    """

    beta: float = DEFAULT_BETA
    delta: float = DEFAULT_DELTA
    n_max: int = DEFAULT_N_MAX
    z_crop: tuple[float, float] | None = DEFAULT_Z_CROP

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.beta >= 1.0:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        need = self.min_beta(self.delta, self.n_max)
        if self.beta < need:
            raise ValueError(
                f"beta={self.beta} < 1 + delta*ln(n_max) = {need:.6f}; "
                "h >= 0 would not guarantee non-penetration"
            )
        if self.z_crop is not None:
            lo, hi = self.z_crop
            if not lo < hi:
                raise ValueError(f"z_crop must satisfy lo < hi, got {self.z_crop}")
            object.__setattr__(self, "z_crop", (float(lo), float(hi)))

    @staticmethod
    def min_beta(delta: float, n_max: int) -> float:
        return 1.0 + delta * math.log(n_max)


@dataclass(frozen=True)
class CbfEval:
    """Result of one barrier evaluation.

    ``h`` is ``+inf`` and both gradients are zero when the cloud was empty; the
    safety filter then passes the reference command through.
    """

    h: float
    h_min: float
    argmin_index: int
    grad7: np.ndarray
    grad4: np.ndarray
    n_points: int = 0

    @property
    def empty(self) -> bool:
        return self.n_points == 0

    @classmethod
    def no_constraint(cls) -> "CbfEval":
        return cls(math.inf, math.inf, -1, np.zeros(7), np.zeros(4), 0)


def _reduce_grad(grad7: np.ndarray, pose: PlanarPose) -> np.ndarray:
    grad4 = np.empty(4)
    grad4[:3] = grad7[:3]
    grad4[3] = float(grad7[3:] @ pose.dquat_dyaw)
    return grad4


def per_point_h(E: HyperEllipsoid, pose: PlanarPose, p_w, beta: float) -> tuple[float, np.ndarray]:
    """Barrier value and ``(r, q)`` gradient for one world-frame point."""
    pts = np.ascontiguousarray(np.asarray(p_w, dtype=float).reshape(1, 3))
    h = np.empty(1)
    g = np.empty((1, 7))
    _kernels.cbf_point_terms(pts, pose.position, pose.quaternion, E.inv_pow, E.d, float(beta), h, g)
    return float(h[0]), g[0].copy()


def per_point_terms(E: HyperEllipsoid, pose: PlanarPose, points_w, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`per_point_h`: arrays ``(N,)`` and ``(N, 7)``."""
    pts = np.ascontiguousarray(np.asarray(points_w, dtype=float).reshape(-1, 3))
    h = np.empty(pts.shape[0])
    g = np.empty((pts.shape[0], 7))
    _kernels.cbf_point_terms(pts, pose.position, pose.quaternion, E.inv_pow, E.d, float(beta), h, g)
    return h, g


def softmin_stable(values, delta: float) -> float:
    """1/N-normalized softmin in min-shifted form.

    The result always lies in ``[min(values), min(values) + delta * ln N]``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyCloudError("softmin of an empty set: no points")
    if not delta > 0.0:
        raise ValueError("delta must be > 0")
    v_min = float(v.min())
    total = float(np.sum(np.exp(-(v - v_min) / delta)))
    log_mean = min(0.0, math.log(total) - math.log(v.size))
    return v_min - delta * log_mean


def evaluate_cbf(
    E: HyperEllipsoid,
    pose: PlanarPose,
    cloud: PointCloud,
    params: VesselParams,
    *,
    crop: bool = False,
) -> CbfEval:
    """Evaluate the smooth point-cloud barrier and its pose gradients.

    Args:
        E: Vessel shape.
        pose: World pose of the vessel. For a body-frame cloud the cloud is
            lifted to world with this pose first; passing the identity pose with
            a body-frame cloud yields gradients w.r.t. body-frame motion.
        cloud: Obstacle points.
        params: Margin and softmin sharpness.
        crop: Apply ``params.z_crop`` in the body frame before evaluating.

    Returns:
        A :class:`CbfEval`; the no-constraint sentinel if no points remain.
    """
    if crop and params.z_crop is not None:
        cloud = cloud.to_body(pose).crop_z(*params.z_crop)
    if len(cloud) == 0:
        return CbfEval.no_constraint()
    pts = cloud.to_world(pose).points
    h, g = per_point_terms(E, pose, pts, params.beta)
    h_min, argmin, log_mean, grad7 = _kernels.softmin_reduce(h, g, params.delta)
    h_soft = h_min - params.delta * log_mean
    return CbfEval(
        h=float(h_soft),
        h_min=float(h_min),
        argmin_index=int(argmin),
        grad7=grad7,
        grad4=_reduce_grad(grad7, pose),
        n_points=len(cloud),
    )


def point_alphas(E: HyperEllipsoid, pose: PlanarPose, cloud: PointCloud) -> np.ndarray:
    """Alpha value of every point in the vessel body frame."""
    return np.atleast_1d(alpha_value(E, cloud.to_body(pose).points))
