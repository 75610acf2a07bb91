"""Reference implementations used only by the tests.

Each oracle is written from the defining formulas with plain Python or numpy
and shares no code with the package, so agreement is evidence rather than
tautology.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def rot_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def alpha_ref(axes, d: int, p) -> float:
    return sum((float(pi) / float(ai)) ** (2 * d) for pi, ai in zip(p, axes))


def alpha_posed(axes, d: int, r, yaw: float, p_w) -> float:
    p_b = rot_z(yaw).T @ (np.asarray(p_w, float) - np.asarray(r, float))
    return alpha_ref(axes, d, p_b)


def softmin_mp(values, delta: float, dps: int = 60) -> float:
    """``-delta * ln(mean(exp(-v / delta)))`` in arbitrary precision."""
    with mpmath.workdps(dps):
        d = mpmath.mpf(delta)
        vals = [mpmath.mpf(float(v)) for v in values]
        acc = mpmath.fsum(mpmath.exp(-v / d) for v in vals) / len(vals)
        return float(-d * mpmath.log(acc))


def h_soft_ref(axes, d: int, r, yaw: float, points_w, beta: float, delta: float) -> float:
    hs = [alpha_posed(axes, d, r, yaw, p) - beta for p in points_w]
    return softmin_mp(hs, delta)


def central_fd(f, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def qp_active_set(u_ref, A, b, H=None, max_iter: int = 100) -> np.ndarray:
    """Primal active-set solve of ``min 1/2 |u - u_ref|_H^2  s.t.  A u >= b``.

    Starts from the unconstrained optimum with an empty working set; each
    iteration solves the equality-constrained KKT system, drops constraints
    with negative multipliers and adds the most violated one.
    """
    u_ref = np.asarray(u_ref, float)
    A = np.atleast_2d(np.asarray(A, float))
    b = np.atleast_1d(np.asarray(b, float))
    n = u_ref.size
    H = np.eye(n) if H is None else np.asarray(H, float)
    work: list[int] = []
    u = u_ref.copy()
    for _ in range(max_iter):
        if work:
            Aw = A[work]
            kkt = np.block([[H, -Aw.T], [Aw, np.zeros((len(work), len(work)))]])
            rhs = np.concatenate([H @ u_ref, b[work]])
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            u, lam = sol[:n], sol[n:]
            if (lam < -1e-14).any():
                work.pop(int(np.argmin(lam)))
                continue
        else:
            u = u_ref.copy()
        viol = b - A @ u
        k = int(np.argmax(viol))
        if viol[k] <= 1e-15 * max(1.0, abs(b[k])):
            return u
        if k in work:
            return u
        work.append(k)
    raise RuntimeError("active set did not converge")


def needle_scales_ref(points_body, angles, a_bar, b_bar, c_bar, d_bar, s_max) -> np.ndarray:
    """Exhaustive needle scales: every needle against every point."""
    pts = np.asarray(points_body, float)
    out = np.full(len(angles), float(s_max))
    for i, th in enumerate(angles):
        c, s = math.cos(th), math.sin(th)
        for p in pts:
            x = c * p[0] + s * p[1]
            y = -s * p[0] + c * p[1]
            z = p[2]
            md = 1.0 - (y / b_bar) ** d_bar - (z / c_bar) ** d_bar
            if x <= 0.0 or md <= 0.0:
                continue
            sc = x / ((1.0 + md ** (1.0 / d_bar)) * a_bar)
            out[i] = min(out[i], sc)
    return out


def choose_ref(angles, scales, a_bar, s_min, target) -> int | None:
    """Index of the valid tip nearest ``target``; lowest index on ties."""
    best, best_d = None, math.inf
    for i, (th, s) in enumerate(zip(angles, scales)):
        if s < s_min:
            continue
        tip = np.array([2 * s * a_bar * math.cos(th), 2 * s * a_bar * math.sin(th), 0.0])
        d = float(np.linalg.norm(tip - np.asarray(target, float)))
        if d < best_d:
            best, best_d = i, d
    return best


def ray_box_ref(origin, direction, lo, hi) -> float:
    """First hit of a ray with an axis-aligned box by testing each face plane."""
    o = np.asarray(origin, float)
    d = np.asarray(direction, float)
    best = math.inf
    for axis in range(3):
        if d[axis] == 0.0:
            continue
        for plane in (lo[axis], hi[axis]):
            t = (plane - o[axis]) / d[axis]
            if t <= 0.0:
                continue
            p = o + t * d
            others = [k for k in range(3) if k != axis]
            if all(lo[k] - 1e-12 <= p[k] <= hi[k] + 1e-12 for k in others):
                best = min(best, t)
    return best


def grid_dijkstra_cost(occupancy: np.ndarray, start, goal) -> float:
    """Shortest 8-connected path (no corner cutting) via scipy's Dijkstra."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    h, w = occupancy.shape
    free = ~occupancy
    idx = lambda x, y: y * w + x  # noqa: E731
    rows, cols, wts = [], [], []
    for y in range(h):
        for x in range(w):
            if not free[y, x]:
                continue
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == dy == 0:
                        continue
                    nx, ny = x + dx, y + dy
                    if not (0 <= nx < w and 0 <= ny < h) or not free[ny, nx]:
                        continue
                    if dx and dy and not (free[y, nx] and free[ny, x]):
                        continue
                    rows.append(idx(x, y))
                    cols.append(idx(nx, ny))
                    wts.append(math.sqrt(2.0) if dx and dy else 1.0)
    g = coo_matrix((wts, (rows, cols)), shape=(w * h, w * h)).tocsr()
    dist = dijkstra(g, indices=idx(*start))
    return float(dist[idx(*goal)])


def h_soft_mp(axes, d: int, x, points_w, beta: float, delta: float, dps: int = 50):
    """``h`` at pose ``x = (r_x, r_y, r_z, yaw)`` with every step in arbitrary precision."""
    with mpmath.workdps(dps):
        ax = [mpmath.mpf(float(a)) for a in axes]
        r = [mpmath.mpf(v) if isinstance(v, mpmath.mpf) else mpmath.mpf(float(v)) for v in x]
        c, s = mpmath.cos(r[3]), mpmath.sin(r[3])
        hs = []
        for p in points_w:
            dx, dy, dz = (mpmath.mpf(float(p[k])) - r[k] for k in range(3))
            body = (c * dx + s * dy, -s * dx + c * dy, dz)
            hs.append(mpmath.fsum((bi / ai) ** (2 * d) for bi, ai in zip(body, ax)) - mpmath.mpf(beta))
        m = min(hs)
        dl = mpmath.mpf(delta)
        return m - dl * mpmath.log(mpmath.fsum(mpmath.exp(-(h - m) / dl) for h in hs) / len(hs))


def central_fd_mp(axes, d: int, x, points_w, beta: float, delta: float, step: str = "1e-9", dps: int = 50):
    """Central differences of :func:`h_soft_mp`; truncation error is O(step^2)."""
    with mpmath.workdps(dps):
        st = mpmath.mpf(step)
        x0 = [mpmath.mpf(float(v)) for v in x]
        g = []
        for i in range(4):
            hi, lo = list(x0), list(x0)
            hi[i] += st
            lo[i] -= st
            g.append(float((h_soft_mp(axes, d, hi, points_w, beta, delta, dps)
                            - h_soft_mp(axes, d, lo, points_w, beta, delta, dps)) / (2 * st)))
    return np.array(g)
