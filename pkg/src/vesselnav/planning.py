"""Occupancy-grid global planning and waypoint tracking.

The planner sees only the floor plan (non-transient obstacles). Cells whose
centers lie within the inflation radius of a footprint are occupied. Paths are
8-connected A* (no corner cutting) sparsified by line-of-sight string pulling.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .geometry import PlanarPose, body_from_world
from .world import World

SQRT2 = math.sqrt(2.0)
DEFAULT_ADVANCE_RADIUS = 0.5

_MOVES = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]


class NoPathError(RuntimeError):
    pass


@dataclass
class OccupancyGrid:
    """``occupancy[iy, ix]``; cell ``(ix, iy)`` has center ``origin + ((ix, iy) + 0.5) * resolution``."""

    resolution: float
    origin: tuple[float, float, float]
    occupancy: np.ndarray

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 2 or min(self.occupancy.shape) < 1:
            raise ValueError("occupancy must be a non-empty 2D array")
        self.origin = tuple(float(v) for v in self.origin)

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def cell_centers(self) -> np.ndarray:
        """``(height, width, 2)`` array of cell-center coordinates."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def cell_of(self, p) -> tuple[int, int]:
        ix = math.floor((p[0] - self.origin[0]) / self.resolution)
        iy = math.floor((p[1] - self.origin[1]) / self.resolution)
        return ix, iy

    def center_of(self, cell) -> np.ndarray:
        ix, iy = cell
        return np.array(
            [self.origin[0] + (ix + 0.5) * self.resolution, self.origin[1] + (iy + 0.5) * self.resolution]
        )

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell[1], cell[0]]

    def to_text(self) -> str:
        """Plain-text map: ``;`` header lines, then rows from top (max y) to bottom.

        ``#`` marks an occupied cell and ``.`` a free one.
        """
        lines = [f"; resolution {self.resolution!r}", f"; origin {self.origin[0]!r} {self.origin[1]!r}"]
        for row in self.occupancy[::-1]:
            lines.append("".join("#" if c else "." for c in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OccupancyGrid":
        resolution, origin, rows = 0.1, (0.0, 0.0), []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith(";"):
                key, *vals = line[1:].split()
                if key == "resolution":
                    resolution = float(vals[0])
                elif key == "origin":
                    origin = (float(vals[0]), float(vals[1]))
                else:
                    raise ValueError(f"line {lineno}: unknown header key {key!r}")
                continue
            bad = set(line) - {"#", "."}
            if bad:
                raise ValueError(f"line {lineno}: unexpected characters {sorted(bad)!r}")
            rows.append([c == "#" for c in line])
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("map rows must be non-empty and of equal length")
        return cls(resolution, (origin[0], origin[1], 0.0), np.array(rows[::-1], dtype=bool))

    @classmethod
    def load(cls, path: str | Path) -> "OccupancyGrid":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def rasterize(world: World, resolution: float, inflation_radius: float, bounds=None, margin: float = 1.0) -> OccupancyGrid:
    """Occupancy grid of ``world``'s static obstacles.

    Args:
        bounds: ``((x_min, y_min), (x_max, y_max))``; defaults to the obstacle
            bounding box grown by ``margin``.
    """
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    static = world.static()
    if bounds is None:
        bb = static.bounds_2d()
        if bb is None:
            bounds = ((-margin, -margin), (margin, margin))
        else:
            bounds = (bb[0] - margin, bb[1] + margin)
    (x0, y0), (x1, y1) = bounds
    width = max(1, math.ceil((x1 - x0) / resolution))
    height = max(1, math.ceil((y1 - y0) / resolution))
    grid = OccupancyGrid(resolution, (x0, y0, 0.0), np.zeros((height, width), dtype=bool))
    if len(static):
        centers = grid.cell_centers().reshape(-1, 2)
        dist = static.footprint_distance(centers)
        grid.occupancy = (dist <= inflation_radius).reshape(height, width)
    return grid


def octile(a, b) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (max(dx, dy) - min(dx, dy)) + SQRT2 * min(dx, dy)


def neighbors(grid: OccupancyGrid, cell):
    """8-connected free neighbours; diagonal moves need both side cells free."""
    x, y = cell
    for dx, dy in _MOVES:
        nxt = (x + dx, y + dy)
        if not grid.is_free(nxt):
            continue
        if dx and dy and not (grid.is_free((x + dx, y)) and grid.is_free((x, y + dy))):
            continue
        yield nxt, (SQRT2 if dx and dy else 1.0)


def astar(grid: OccupancyGrid, start_cell, goal_cell) -> tuple[list[tuple[int, int]], float]:
    """Optimal 8-connected cell path and its cost in cell units."""
    if not grid.is_free(start_cell):
        raise NoPathError(f"start cell {start_cell} is occupied or outside the map")
    if not grid.is_free(goal_cell):
        raise NoPathError(f"goal cell {goal_cell} is occupied or outside the map")
    g = {start_cell: 0.0}
    parent = {start_cell: None}
    closed = set()
    counter = 0
    heap = [(octile(start_cell, goal_cell), 0, start_cell)]
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal_cell:
            path = []
            node = cur
            while node is not None:
                path.append(node)
                node = parent[node]
            return path[::-1], g[cur]
        closed.add(cur)
        for nxt, step in neighbors(grid, cur):
            cand = g[cur] + step
            if cand < g.get(nxt, math.inf):
                g[nxt] = cand
                parent[nxt] = cur
                counter += 1
                heapq.heappush(heap, (cand + octile(nxt, goal_cell), counter, nxt))
    raise NoPathError(f"goal cell {goal_cell} unreachable from {start_cell}")


def line_of_sight(grid: OccupancyGrid, a, b) -> bool:
    """True if the segment between cell centers ``a`` and ``b`` crosses only free cells.

    Supercover traversal: when the segment passes exactly through a cell
    corner, both side cells must be free too.
    """
    x, y = a
    x1, y1 = b
    dx, dy = x1 - x, y1 - y
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    nx, ny = abs(dx), abs(dy)
    if not grid.is_free((x, y)):
        return False
    ix = iy = 0
    while ix < nx or iy < ny:
        # compare (ix + 0.5) / nx against (iy + 0.5) / ny without division
        lhs = (2 * ix + 1) * ny
        rhs = (2 * iy + 1) * nx
        if lhs == rhs:
            if not (grid.is_free((x + sx, y)) and grid.is_free((x, y + sy))):
                return False
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif lhs < rhs:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        if not grid.is_free((x, y)):
            return False
    return True


def string_pull(grid: OccupancyGrid, cells: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Greedy sparsification: from each anchor jump to the farthest visible path cell."""
    if len(cells) <= 2:
        return list(cells)
    out = [cells[0]]
    i = 0
    while i < len(cells) - 1:
        j = len(cells) - 1
        while j > i + 1 and not line_of_sight(grid, cells[i], cells[j]):
            j -= 1
        out.append(cells[j])
        i = j
    return out


@dataclass
class WaypointPath:
    """Waypoints after the start, ending at the goal (world frame)."""

    waypoints: np.ndarray
    advance_radius: float = DEFAULT_ADVANCE_RADIUS
    cost: float = math.nan
    cells: list | None = None

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        if self.waypoints.shape[0] < 1:
            raise ValueError("a path needs at least one waypoint")

    def __len__(self) -> int:
        return self.waypoints.shape[0]


def plan_path(grid: OccupancyGrid, start, goal, advance_radius: float = DEFAULT_ADVANCE_RADIUS) -> WaypointPath:
    """Plan on ``grid`` from ``start`` to ``goal`` (world coordinates).

    ``cost`` is the optimal 8-connected grid cost in meters.

    Raises:
        NoPathError: the goal is occupied or unreachable.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    cells, cost = astar(grid, grid.cell_of(start), grid.cell_of(goal))
    pulled = string_pull(grid, cells)
    z = start[2] if start.shape[0] > 2 else 0.0
    wps = [np.array([*grid.center_of(c), z]) for c in pulled[1:-1]]
    wps.append(np.array([goal[0], goal[1], goal[2] if goal.shape[0] > 2 else z]))
    return WaypointPath(np.array(wps), advance_radius, cost * grid.resolution, cells)


class GlobalPlanner(Protocol):
    def plan(self, start, goal) -> WaypointPath: ...


@dataclass
class GridPlanner:
    """A* on a rasterized floor plan; any object with ``plan(start, goal)`` can replace it."""

    grid: OccupancyGrid
    advance_radius: float = DEFAULT_ADVANCE_RADIUS

    def plan(self, start, goal) -> WaypointPath:
        return plan_path(self.grid, start, goal, self.advance_radius)


class WaypointTracker:
    """Monotone waypoint scheduler.

    Advances past waypoint ``k`` once the robot is within ``advance_radius`` of
    it (planar distance). The final waypoint is never abandoned.
    """

    def __init__(self, path: WaypointPath):
        self.path = path
        self.index = 0

    def update(self, pose: PlanarPose) -> int:
        wps = self.path.waypoints
        last = len(wps) - 1
        r = pose.position
        while self.index < last and math.hypot(*(wps[self.index, :2] - r[:2])) < self.path.advance_radius:
            self.index += 1
        return self.index

    @property
    def active_world(self) -> np.ndarray:
        return self.path.waypoints[self.index]

    def target_body(self, pose: PlanarPose) -> np.ndarray:
        return body_from_world(pose, self.active_world)


def active_waypoint(path: WaypointPath, pose: PlanarPose, index: int = 0) -> tuple[int, np.ndarray]:
    """Functional form of :class:`WaypointTracker`: returns ``(index, target_body)``."""
    tracker = WaypointTracker(path)
    tracker.index = index
    tracker.update(pose)
    return tracker.index, tracker.target_body(pose)
