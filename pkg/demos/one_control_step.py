"""One control update by hand: barrier value, gradient and filtered command.

Two obstacle points sit 1.1 m ahead and one sits behind. The reference
command drives straight at the goal 5 m ahead. It is saturated to the speed
limit first. The filter then removes just enough of the forward component
to satisfy the barrier condition and keeps the rest.
"""

import numpy as np

from vesselnav.geometry import HyperEllipsoid, PlanarPose
from vesselnav.safety_filter import FilterParams, safe_command
from vesselnav.vessel import PointCloud, VesselParams, evaluate_cbf

vessel = HyperEllipsoid(0.8, 0.4, 0.4, 1)
cloud = PointCloud([[1.1, 0.1, 0.0], [1.1, -0.5, 0.0], [-2.0, 0.0, 0.0]], "body")

ev = evaluate_cbf(vessel, PlanarPose.identity(), cloud, VesselParams())
print(f"h_soft = {ev.h:.4f}   h_min = {ev.h_min:.4f}   nearest point #{ev.argmin_index}")
print("dh/d(x, y, z, yaw) =", np.round(ev.grad4, 4))

# the limits a scenario file uses by default
params = FilterParams(v_max=0.8, omega_max=1.0, planar=True)
step = safe_command((5.0, 0.0, 0.0), ev, params)
print("reference:", np.round(step.u_ref.as_array(), 4))
print("filtered: ", np.round(step.u.as_array(), 4), "(active)" if step.active else "")
lhs = float(ev.grad4 @ step.u.as_array())
print(f"grad . u = {lhs:.4f} >= -gamma * h = {-params.gamma_bar * ev.h:.4f}")
