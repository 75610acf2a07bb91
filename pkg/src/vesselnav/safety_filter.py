"""CBF quadratic-program safety filter and proportional performance controller.

With single-integrator dynamics and one aggregated barrier the QP

    min_u ||u - u_ref||^2   s.t.   a . u >= -gamma_bar * h

has a closed-form solution: keep ``u_ref`` if it already satisfies the
constraint, otherwise project it onto the constraint's bounding hyperplane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .vessel import CbfEval

DEFAULT_GAMMA_BAR = 2.0


class InfeasibleFilterError(RuntimeError):
    """The barrier gradient vanished while the constraint is violated.

    Happens when the cloud surrounds the robot symmetrically. Commanding zero
    velocity is the safe fallback.
    """


@dataclass(frozen=True)
class ControlCommand:
    """Body-frame linear velocity ``v`` (m/s) and yaw rate ``omega`` (rad/s)."""

    v: tuple[float, float, float] = (0.0, 0.0, 0.0)
    omega: float = 0.0

    def __post_init__(self):
        v = tuple(float(x) for x in self.v)
        if len(v) != 3 or not all(math.isfinite(x) for x in v) or not math.isfinite(self.omega):
            raise ValueError(f"command must be finite, got v={self.v!r} omega={self.omega!r}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "omega", float(self.omega))

    def as_array(self) -> np.ndarray:
        return np.array([*self.v, self.omega])

    @classmethod
    def from_array(cls, u) -> "ControlCommand":
        u = np.asarray(u, dtype=float)
        return cls((u[0], u[1], u[2]), u[3])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class FilterParams:
    """Gains and limits for the performance controller and the CBF filter.

    Attributes:
        gamma_bar: Slope of the linear class-K function ``Gamma(h) = gamma_bar * h``.
        k_v: Diagonal of the positive-definite linear-velocity gain.
        k_omega: Yaw-rate gain.
        v_max, omega_max: Command limits (``None`` disables a limit).
        heading_deadband: Below this planar target distance the yaw command is zero.
        planar: The robot cannot command vertical velocity; ``v_z`` is pinned
            to zero and the constraint uses only ``(v_x, v_y, omega)``.
    """

    gamma_bar: float = DEFAULT_GAMMA_BAR
    k_v: tuple[float, float, float] = (1.0, 1.0, 1.0)
    k_omega: float = 1.0
    v_max: float | None = None
    omega_max: float | None = None
    heading_deadband: float = 0.05
    planar: bool = False

    def __post_init__(self):
        if not self.gamma_bar > 0:
            raise ValueError("gamma_bar must be > 0")
        k_v = tuple(float(k) for k in np.broadcast_to(np.asarray(self.k_v, dtype=float), (3,)))
        if not all(k > 0 for k in k_v):
            raise ValueError("k_v entries must be > 0")
        object.__setattr__(self, "k_v", k_v)
        if not self.k_omega > 0:
            raise ValueError("k_omega must be > 0")
        for name in ("v_max", "omega_max"):
            lim = getattr(self, name)
            if lim is not None and not lim > 0:
                raise ValueError(f"{name} must be > 0 when set")


def reference_control(target_body, params: FilterParams) -> ControlCommand:
    """Proportional command toward a body-frame target.

    The robot's own body-frame position and yaw are identically zero, so the
    errors are just the target coordinates and its bearing.
    """
    t = np.asarray(target_body, dtype=float)
    v = np.asarray(params.k_v) * t
    if params.planar:
        v[2] = 0.0
    if math.hypot(t[0], t[1]) < params.heading_deadband:
        omega = 0.0
    else:
        omega = params.k_omega * math.atan2(t[1], t[0])
    return ControlCommand((v[0], v[1], v[2]), omega)


def project_halfspace(u_ref: np.ndarray, a: np.ndarray, bound: float) -> np.ndarray:
    """Closest point to ``u_ref`` in ``{u : a . u >= bound}``.

    Raises:
        InfeasibleFilterError: ``a = 0`` and ``bound > 0``.
    """
    slack = float(a @ u_ref) - bound
    if slack >= 0.0:
        return u_ref.copy()
    aa = float(a @ a)
    if aa == 0.0:
        raise InfeasibleFilterError(f"zero barrier gradient with violated constraint (0 >= {bound:.3g})")
    return u_ref - (slack / aa) * a


def constraint_row(ev: CbfEval, params: FilterParams) -> np.ndarray:
    a = np.asarray(ev.grad4, dtype=float).copy()
    if params.planar:
        a[2] = 0.0
    return a


def filter_command(u_ref: ControlCommand, ev: CbfEval, params: FilterParams) -> ControlCommand:
    """Minimally modify ``u_ref`` so that ``grad4 . u >= -gamma_bar * h``.

    An empty-cloud evaluation (``h = inf``) passes ``u_ref`` through.

    Raises:
        InfeasibleFilterError: see :func:`project_halfspace`.
    """
    if ev.empty or math.isinf(ev.h):
        return u_ref
    u = u_ref.as_array()
    if params.planar:
        u[2] = 0.0
    a = constraint_row(ev, params)
    out = project_halfspace(u, a, -params.gamma_bar * ev.h)
    return ControlCommand.from_array(out)


def saturate_reference(u: ControlCommand, params: FilterParams) -> ControlCommand:
    """Limit a reference command before filtering: scale ``v``, clip ``omega``."""
    v = np.array(u.v)
    if params.v_max is not None:
        speed = float(np.linalg.norm(v))
        if speed > params.v_max:
            v *= params.v_max / speed
    omega = u.omega
    if params.omega_max is not None:
        omega = min(max(omega, -params.omega_max), params.omega_max)
    return ControlCommand((v[0], v[1], v[2]), omega)


def limit_command(u: ControlCommand, params: FilterParams) -> ControlCommand:
    """Enforce the limits on a filtered command by uniform scaling toward zero.

    Scaling keeps ``a . u >= -gamma_bar * h`` whenever the right-hand side is
    non-positive (inside the safe set), because ``u = 0`` is feasible there and
    the constraint set is convex.
    """
    k = 1.0
    speed = math.sqrt(u.v[0] ** 2 + u.v[1] ** 2 + u.v[2] ** 2)
    if params.v_max is not None and speed > params.v_max:
        k = min(k, params.v_max / speed)
    if params.omega_max is not None and abs(u.omega) > params.omega_max:
        k = min(k, params.omega_max / abs(u.omega))
    if k == 1.0:
        return u
    return ControlCommand.from_array(u.as_array() * k)


@dataclass
class FilterStep:
    """Everything one control update produced, for logging."""

    u_ref: ControlCommand
    u: ControlCommand
    infeasible: bool = False
    active: bool = False


def safe_command(target_body, ev: CbfEval | None, params: FilterParams) -> FilterStep:
    """Reference control, saturation, CBF filter (if ``ev`` given) and limits.

    ``ev=None`` disables the filter. An infeasible filter yields a zero command
    and ``infeasible=True`` rather than an exception.
    """
    u_ref = saturate_reference(reference_control(target_body, params), params)
    if ev is None:
        return FilterStep(u_ref, limit_command(u_ref, params))
    try:
        u = filter_command(u_ref, ev, params)
    except InfeasibleFilterError:
        return FilterStep(u_ref, ControlCommand(), infeasible=True)
    active = u is not u_ref and not np.array_equal(u.as_array(), u_ref.as_array())
    return FilterStep(u_ref, limit_command(u, params), active=active)
