"""Built-in scenario suite.

The geometry is a reconstruction: obstacle sizes are authored to reproduce the
qualitative behaviour of a box wall, an L-shaped hallway and a cluttered
course, not measured from any real site. No scenario has a floor, so the
vessel's z-crop is inert here (see :func:`floor_box` for a floor-enabled
variant used in tests).
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from .geometry import HyperEllipsoid, PlanarPose
from .mariner import NeedleConfig
from .scenario import Scenario
from .world import Prism, World

# small quadruped: body and needle shapes used for the box-wall ablation
SMALL_VESSEL = HyperEllipsoid(0.5, 0.3, 0.2, 1)
SMALL_NEEDLES = NeedleConfig(a_bar=0.8, b_bar=0.1, c_bar=0.2, d_bar=2, n_needle=100)
# large quadruped: hallway and obstacle course
LARGE_VESSEL = HyperEllipsoid(0.8, 0.4, 0.4, 1)
LARGE_NEEDLES = NeedleConfig(a_bar=2.0, b_bar=0.8, c_bar=0.8, d_bar=2, n_needle=100)

WALL_Z = (-0.5, 1.5)


def box_wall() -> Scenario:
    """Four boxes side by side across the straight line to the goal.

    The boxes are transient, so the global plan is the straight segment and
    only the local planner can get around them. Without the needle planner
    the filter settles in front of the wall; without the barrier the robot
    follows needle tips into the boxes.
    """
    boxes = [
        Prism.box((3.0, y, -0.3), (3.5, y + 0.5, 0.6), transient=True, name=f"box{i}")
        for i, y in enumerate((-1.0, -0.5, 0.0, 0.5))
    ]
    return Scenario(
        name="box_wall",
        description="Reconstructed box-wall ablation: 2 m wall of transient boxes between start and goal.",
        world=World(boxes),
        start=PlanarPose((0.0, 0.0, 0.0), 0.0),
        goal=np.array([6.5, 0.0, 0.0]),
        vessel=SMALL_VESSEL,
        needles=SMALL_NEEDLES,
        duration_s=60.0,
    )


def _wall(x0, y0, x1, y1, name) -> Prism:
    return Prism.box((x0, y0, WALL_Z[0]), (x1, y1, WALL_Z[1]), name=name)


def hallway() -> Scenario:
    """L-shaped corridor, 2.0 m wide, walls 0.2 m thick, in the floor plan."""
    t = 0.2
    walls = [
        # first leg runs along +x with free space y in [-1, 1]
        _wall(-1.5, -1.0 - t, 9.0 + t, -1.0, "south"),
        _wall(-1.5, 1.0, 7.0, 1.0 + t, "north"),
        _wall(-1.5 - t, -1.0 - t, -1.5, 1.0 + t, "west_cap"),
        # second leg runs along +y with free space x in [7, 9]
        _wall(9.0, -1.0, 9.0 + t, 9.0, "east"),
        _wall(7.0 - t, 1.0, 7.0, 9.0, "inner"),
    ]
    return Scenario(
        name="hallway",
        description="Reconstructed hallway: L-shaped 2.0 m corridor traversed with the 0.8 x 0.4 x 0.4 m vessel.",
        world=World(walls),
        start=PlanarPose((0.0, 0.0, 0.0), 0.0),
        goal=np.array([8.0, 8.0, 0.0]),
        vessel=LARGE_VESSEL,
        needles=LARGE_NEEDLES,
        duration_s=60.0,
    )


def obstacle_course() -> Scenario:
    """Room with a partition known to the planner plus four unmapped boxes."""
    t = 0.2
    static = [
        _wall(-1.0, -4.0 - t, 15.0, -4.0, "south"),
        _wall(-1.0, 4.0, 15.0, 4.0 + t, "north"),
        _wall(-1.0 - t, -4.0 - t, -1.0, 4.0 + t, "west"),
        _wall(15.0, -4.0 - t, 15.0 + t, 4.0 + t, "east"),
        _wall(5.0, -4.0, 5.3, 1.0, "partition"),
    ]
    boxes = [
        Prism.box((2.0, 0.6, -0.5), (2.8, 1.4, 1.0), transient=True, name="box0"),
        Prism.box((7.5, 0.8, -0.5), (8.3, 1.6, 1.0), transient=True, name="box1"),
        Prism.box((9.5, -1.5, -0.5), (10.3, -0.7, 1.0), transient=True, name="box2"),
        Prism(((11.8, 0.0), (12.6, 0.5), (12.2, 1.2), (11.4, 0.8)), -0.5, 1.0, transient=True, name="box3"),
    ]
    return Scenario(
        name="obstacle_course",
        description="Reconstructed course: a mapped partition and four unmapped boxes along the global path.",
        world=World(static + boxes),
        start=PlanarPose((0.0, 0.0, 0.0), 0.0),
        goal=np.array([14.0, 0.0, 0.0]),
        vessel=LARGE_VESSEL,
        needles=LARGE_NEEDLES,
        duration_s=90.0,
    )


def free_space() -> Scenario:
    """No geometry at all; the goal is 5 m straight ahead."""
    return Scenario(
        name="free_space",
        description="Empty world, goal 5 m ahead.",
        world=World([]),
        start=PlanarPose((0.0, 0.0, 0.0), 0.0),
        goal=np.array([5.0, 0.0, 0.0]),
        vessel=LARGE_VESSEL,
        needles=LARGE_NEEDLES,
        duration_s=30.0,
    )


def floor_box() -> Scenario:
    """Box wall standing on a floor slab; exercises the z-crop. Not shipped."""
    sc = box_wall()
    # hidden from the planner: a floor is not part of a 2D floor plan
    floor = Prism.box((-2.0, -4.0, -0.5), (9.0, 4.0, -0.3), transient=True, name="floor")
    sc.world = World([floor, *sc.world.prisms])
    sc.name = "floor_box"
    sc.description = "Box wall on a floor slab."
    return sc


BUILTIN: dict[str, Callable[[], Scenario]] = {
    "box_wall": box_wall,
    "hallway": hallway,
    "obstacle_course": obstacle_course,
    "free_space": free_space,
}


def builtin(name: str) -> Scenario:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(BUILTIN)}") from None


def write_suite(out_dir: str | Path) -> list[Path]:
    """Write every built-in scenario as ``<name>.yaml`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [fn().save(out_dir / f"{name}.yaml") for name, fn in BUILTIN.items()]
