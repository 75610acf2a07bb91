"""Drive the large vessel down the L-shaped hallway and print a coarse trace.

The corridor is 2.0 m wide and the vessel is 0.8 x 0.4 x 0.4 m, so there is
0.6 m to spare on either side. The trace prints one line per second: where
the robot is, how far the softmin barrier is from zero, and which heading
the needle planner picked.
"""

import math

from vesselnav import scenarios
from vesselnav.sim import run_episode

res = run_episode(scenarios.hallway())
rec = res.record
t, x, y = rec.column("t"), rec.column("r_x"), rec.column("r_y")
h, ang, clear = rec.column("h_soft"), rec.column("mariner_chosen_angle"), rec.column("true_clearance_alpha")

print(f"global plan: {len(res.path.waypoints)} waypoints, cost {res.path.cost:.2f} m")
print(f"{'t':>5} {'x':>6} {'y':>6} {'h_soft':>8} {'needle':>7} {'alpha':>6}")
for k in range(0, len(t), 100):
    needle = "-" if math.isnan(ang[k]) else f"{math.degrees(ang[k]):.0f}"
    print(f"{t[k]:5.1f} {x[k]:6.2f} {y[k]:6.2f} {h[k]:8.3f} {needle:>7} {clear[k]:6.2f}")
print(f"outcome: {res.outcome} after {res.metrics['time_to_goal']:.2f} s, "
      f"closest approach alpha = {res.metrics['min_true_clearance_alpha']:.3f}")
