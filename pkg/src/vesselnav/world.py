"""Static world geometry, ray-cast range sensing and a clearance oracle.

All obstacles are vertical prisms: a convex counter-clockwise polygon footprint
extruded over ``[z_lo, z_hi]``. Axis-aligned boxes are the rectangular case.
Obstacles flagged ``transient`` exist in the simulated world but not in the
floor plan handed to the global planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import HyperEllipsoid, PlanarPose, int_pow

SURFACE_PITCH = 0.01


@dataclass(frozen=True)
class Prism:
    """Convex polygon footprint (CCW, ``(K, 2)``) extruded over ``[z_lo, z_hi]``."""

    vertices: np.ndarray
    z_lo: float
    z_hi: float
    transient: bool = False
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if v.shape[0] < 3:
            raise ValueError("a prism footprint needs at least 3 vertices")
        if not self.z_lo < self.z_hi:
            raise ValueError(f"need z_lo < z_hi, got {self.z_lo}, {self.z_hi}")
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 < 0:
            v = v[::-1].copy()
        elif area2 == 0:
            raise ValueError("degenerate (zero-area) footprint")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross < -1e-12):
            raise ValueError("prism footprint must be convex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "z_lo", float(self.z_lo))
        object.__setattr__(self, "z_hi", float(self.z_hi))

    @classmethod
    def box(cls, lo, hi, transient: bool = False, name: str = "") -> "Prism":
        (x0, y0, z0), (x1, y1, z1) = lo, hi
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"box min must be below max, got {lo}, {hi}")
        verts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        return cls(np.array(verts, dtype=float), z0, z1, transient, name)

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Outward unit normals of the footprint edges."""
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def edge_offsets(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.edge_normals, self.vertices)

    @cached_property
    def planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Half-spaces ``n . p <= off`` bounding the solid: ``(K+2, 3)``, ``(K+2,)``."""
        k = self.vertices.shape[0]
        normals = np.zeros((k + 2, 3))
        normals[:k, :2] = self.edge_normals
        normals[k] = (0.0, 0.0, 1.0)
        normals[k + 1] = (0.0, 0.0, -1.0)
        offsets = np.concatenate([self.edge_offsets, [self.z_hi, -self.z_lo]])
        return normals, offsets

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def signed_distance_2d(self, xy) -> np.ndarray:
        """Euclidean distance from points to the footprint (``<= 0`` inside; interior value is a bound)."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        inside_margin = xy @ self.edge_normals.T - self.edge_offsets
        outside = np.max(inside_margin, axis=1)
        # exact distance outside: min over edges of point-segment distance
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        ab = b - a
        ap = xy[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("nkj,kj->nk", ap, ab) / np.einsum("kj,kj->k", ab, ab), 0.0, 1.0)
        closest = a[None] + t[..., None] * ab[None]
        dist = np.min(np.linalg.norm(xy[:, None, :] - closest, axis=2), axis=1)
        return np.where(outside > 0.0, dist, outside)

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        normals, offsets = self.planes
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return np.all(p @ normals.T - offsets <= tol, axis=1)

    def perimeter_samples(self, pitch: float) -> np.ndarray:
        """Footprint boundary points, every edge split into segments no longer than ``pitch``."""
        out = []
        v = self.vertices
        for i in range(v.shape[0]):
            a, b = v[i], v[(i + 1) % v.shape[0]]
            n = max(1, math.ceil(np.linalg.norm(b - a) / pitch))
            t = np.arange(n) / n
            out.append(a + t[:, None] * (b - a))
        return np.concatenate(out)

    def z_samples(self, pitch: float) -> np.ndarray:
        n = max(1, math.ceil((self.z_hi - self.z_lo) / pitch))
        return np.linspace(self.z_lo, self.z_hi, n + 1)

    def cap_grid(self, pitch: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Regular grid over the bounding box: ``xs``, ``ys`` and the inside mask ``[ix, iy]``."""
        lo, hi = self.bbox
        xs = np.arange(lo[0], hi[0] + 0.5 * pitch, pitch)
        ys = np.arange(lo[1], hi[1] + 0.5 * pitch, pitch)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        xy = np.stack([gx.ravel(), gy.ravel()], axis=1)
        keep = np.all(xy @ self.edge_normals.T - self.edge_offsets <= 0.0, axis=1)
        return xs, ys, keep.reshape(gx.shape)

    def cap_samples(self, pitch: float) -> np.ndarray:
        """Footprint interior grid points at ``pitch`` spacing."""
        xs, ys, keep = self.cap_grid(pitch)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx[keep], gy[keep]], axis=1)


@dataclass
class World:
    """A collection of static prisms."""

    prisms: list[Prism] = field(default_factory=list)

    def __post_init__(self):
        self._surface_cache: dict[float, list] = {}

    def __len__(self) -> int:
        return len(self.prisms)

    def static(self) -> "World":
        """Floor-plan view: only non-transient obstacles."""
        return World([p for p in self.prisms if not p.transient])

    def bounds_2d(self) -> tuple[np.ndarray, np.ndarray] | None:
        if not self.prisms:
            return None
        lo = np.min([p.bbox[0] for p in self.prisms], axis=0)
        hi = np.max([p.bbox[1] for p in self.prisms], axis=0)
        return lo, hi

    def footprint_distance(self, xy) -> np.ndarray:
        """Distance from 2D points to the nearest footprint (``<= 0`` inside one)."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        if not self.prisms:
            return np.full(xy.shape[0], np.inf)
        return np.min([p.signed_distance_2d(xy) for p in self.prisms], axis=0)

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        out = np.zeros(p.shape[0], dtype=bool)
        for prism in self.prisms:
            out |= prism.contains(p, tol)
        return out

    def on_surface(self, p, tol: float = 1e-9) -> np.ndarray:
        """True for points within ``tol`` of some prism's boundary."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        out = np.zeros(p.shape[0], dtype=bool)
        for prism in self.prisms:
            normals, offsets = prism.planes
            s = np.max(p @ normals.T - offsets, axis=1)
            out |= np.abs(s) <= tol
        return out

    def raycast(self, origins: np.ndarray, directions: np.ndarray, max_range: float) -> np.ndarray:
        """First-hit distance along each ray, ``inf`` for a miss within ``max_range``.

        Slab clipping against each prism's bounding half-spaces. Rays starting
        inside a solid report the exit-free entry at ``t = 0``.
        """
        origins = np.broadcast_to(np.asarray(origins, dtype=float), directions.shape)
        best = np.full(directions.shape[0], np.inf)
        for prism in self.prisms:
            normals, offsets = prism.planes
            nd = directions @ normals.T
            no = origins @ normals.T
            gap = offsets[None, :] - no
            with np.errstate(divide="ignore", invalid="ignore"):
                t = gap / nd
            entering = nd < 0.0
            leaving = nd > 0.0
            t_in = np.max(np.where(entering, t, -np.inf), axis=1)
            t_out = np.min(np.where(leaving, t, np.inf), axis=1)
            # parallel to a plane and outside it: no hit
            parallel_out = np.any((nd == 0.0) & (gap < 0.0), axis=1)
            hit = (t_in <= t_out) & ~parallel_out & (t_out >= 0.0)
            t_hit = np.maximum(t_in, 0.0)
            hit &= t_hit <= max_range
            best = np.where(hit & (t_hit < best), t_hit, best)
        return best

    def _surface(self, pitch: float):
        cached = self._surface_cache.get(pitch)
        if cached is None:
            cached = [
                (prism, prism.perimeter_samples(pitch), prism.z_samples(pitch), prism.cap_grid(pitch))
                for prism in self.prisms
            ]
            self._surface_cache[pitch] = cached
        return cached

    def surface_samples(self, pitch: float = SURFACE_PITCH) -> np.ndarray:
        """Every sampled surface point, ``(M, 3)``: side walls plus top and bottom caps."""
        out = []
        for prism, perim, zs, (xs, ys, keep) in self._surface(pitch):
            side = np.column_stack(
                [np.repeat(perim, len(zs), axis=0), np.tile(zs, perim.shape[0])]
            )
            out.append(side)
            gx, gy = np.meshgrid(xs, ys, indexing="ij")
            cap = np.stack([gx[keep], gy[keep]], axis=1)
            for zc in (prism.z_lo, prism.z_hi):
                out.append(np.column_stack([cap, np.full(cap.shape[0], zc)]))
        if not out:
            return np.zeros((0, 3))
        return np.concatenate(out)

    def true_clearance_alpha(self, pose: PlanarPose, vessel: HyperEllipsoid, pitch: float = SURFACE_PITCH) -> float:
        """Smallest vessel alpha over the sampled obstacle surfaces.

        Values below 1 mean the unscaled vessel penetrates an obstacle. The
        minimum is over exactly the points of :meth:`surface_samples`; because
        rotation is yaw-only, alpha splits into a planar part and a height part,
        so the side-wall minimum is the planar minimum over the perimeter plus
        the height minimum over the z samples. Prisms whose lower bound cannot
        beat the running minimum are skipped. A vessel center inside a solid
        reports 0.
        """
        if self.prisms and bool(self.contains(pose.position)[0]):
            return 0.0
        e = 2 * vessel.d
        ia, ib, ic = vessel.inv_pow
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        rx, ry, rz = pose.r
        best = math.inf

        def planar(xy):
            dx = xy[:, 0] - rx
            dy = xy[:, 1] - ry
            bx = c * dx + s * dy
            by = -s * dx + c * dy
            return int_pow(bx, e) * ia + int_pow(by, e) * ib

        def height(z):
            return int_pow(np.asarray(z, dtype=float) - rz, e) * ic

        # planar alpha below B forces the planar distance below this radius
        m = max(vessel.a, vessel.b)

        def radius(bound):
            return m * (2.0 ** (vessel.d - 1) * bound) ** (1.0 / e) * (1.0 + 1e-9)

        def cap_min(xs, ys, keep, bound):
            # seed with the grid point under the center, then search the window
            ix = min(max(int(np.searchsorted(xs, rx)), 0), len(xs) - 1)
            iy = min(max(int(np.searchsorted(ys, ry)), 0), len(ys) - 1)
            out = math.inf
            if keep[ix, iy]:
                out = float(planar(np.array([[xs[ix], ys[iy]]]))[0])
                bound = min(bound, out)
            if not math.isfinite(bound):
                i0, i1, j0, j1 = 0, len(xs), 0, len(ys)
            else:
                rad = radius(bound)
                i0, i1 = np.searchsorted(xs, rx - rad, "left"), np.searchsorted(xs, rx + rad, "right")
                j0, j1 = np.searchsorted(ys, ry - rad, "left"), np.searchsorted(ys, ry + rad, "right")
            sub = keep[i0:i1, j0:j1]
            if sub.any():
                gx, gy = np.meshgrid(xs[i0:i1], ys[j0:j1], indexing="ij")
                out = min(out, float(planar(np.stack([gx[sub], gy[sub]], axis=1)).min()))
            return out

        for prism, perim, zs, (xs, ys, keep) in self._surface(pitch):
            # footprint in the vessel's axis-normalized frame; there the planar
            # alpha is |u|^2 (d = 1) and at least 2^(1-d) |u|^(2d) in general
            dv = prism.vertices - (rx, ry)
            u = np.column_stack([(c * dv[:, 0] + s * dv[:, 1]) / vessel.a, (-s * dv[:, 0] + c * dv[:, 1]) / vessel.b])
            dist_u = _origin_distance_to_convex(u)
            planar_lb = 2.0 ** (1 - vessel.d) * dist_u**e * (1.0 - 1e-12)
            g = height(zs)
            g_min = float(g.min())
            if planar_lb + g_min >= best:
                continue
            best = min(best, float(planar(perim).min()) + g_min)
            for zc in (prism.z_lo, prism.z_hi):
                gc = float(height(zc))
                if keep.any() and planar_lb + gc < best:
                    best = min(best, cap_min(xs, ys, keep, best - gc) + gc)
        return best


def _origin_distance_to_convex(poly: np.ndarray) -> float:
    """Distance from the origin to a convex polygon given by its vertices (0 if inside)."""
    a = poly
    b = np.roll(a, -1, axis=0)
    ab = b - a
    cross = ab[:, 0] * (-a[:, 1]) - ab[:, 1] * (-a[:, 0])
    if np.all(cross >= 0.0) or np.all(cross <= 0.0):
        return 0.0
    t = np.clip(-np.einsum("kj,kj->k", a, ab) / np.einsum("kj,kj->k", ab, ab), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.hypot(closest[:, 0], closest[:, 1])))
