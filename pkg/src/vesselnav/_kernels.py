"""Compiled point-cloud kernels.

Reductions run over fixed-size chunks whose boundaries do not depend on the
thread count, and chunk partials are combined sequentially in index order, so
results are bit-identical for any worker-pool size.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from numba import njit, prange

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

CHUNK = 4096
# needle sweep chunks are smaller: each carries a per-needle min buffer
NEEDLE_CHUNK = 2048


def set_threads(n: int | None) -> int:
    """Set the kernel worker-pool size (``None`` = all hardware threads)."""
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if n is None else max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


def get_threads() -> int:
    return numba.get_num_threads()


@njit(cache=True, inline="always")
def _ipow(x, n):
    out = 1.0
    for _ in range(n):
        out *= x
    return out


@njit(cache=True, parallel=True)
def cbf_point_terms(points, r, q, inv_pow, d, beta, h_out, g_out):
    """Per-point barrier ``h_j`` and its gradient w.r.t. ``(r, q)``.

    ``g_out[j]`` holds ``(dh/dr_x, dh/dr_y, dh/dr_z, dh/dq_w, dh/dq_x, dh/dq_y, dh/dq_z)``.
    """
    n = points.shape[0]
    qw, qx, qy, qz = q[0], q[1], q[2], q[3]
    # rotation matrix entries, unit-quaternion form
    r00 = 2.0 * (qw * qw + qx * qx) - 1.0
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 2.0 * (qw * qw + qy * qy) - 1.0
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 2.0 * (qw * qw + qz * qz) - 1.0
    ia, ib, ic = inv_pow[0], inv_pow[1], inv_pow[2]
    e = 2 * d
    n_chunks = (n + CHUNK - 1) // CHUNK
    for c in prange(n_chunks):
        lo = c * CHUNK
        hi = min(n, lo + CHUNK)
        for j in range(lo, hi):
            dx = points[j, 0] - r[0]
            dy = points[j, 1] - r[1]
            dz = points[j, 2] - r[2]
            bx = r00 * dx + r10 * dy + r20 * dz
            by = r01 * dx + r11 * dy + r21 * dz
            bz = r02 * dx + r12 * dy + r22 * dz
            px = _ipow(bx, e - 1)
            py = _ipow(by, e - 1)
            pz = _ipow(bz, e - 1)
            h_out[j] = (px * bx * ia + py * by * ib) + pz * bz * ic - beta
            gx = e * px * ia
            gy = e * py * ib
            gz = e * pz * ic
            # dh/dr = -R g
            g_out[j, 0] = -(r00 * gx + r01 * gy + r02 * gz)
            g_out[j, 1] = -(r10 * gx + r11 * gy + r12 * gz)
            g_out[j, 2] = -(r20 * gx + r21 * gy + r22 * gz)
            # dh/dq_k = sum_i g_i db_i/dq_k
            g_out[j, 3] = (
                gx * (4.0 * qw * dx + 2.0 * qz * dy - 2.0 * qy * dz)
                + gy * (-2.0 * qz * dx + 4.0 * qw * dy + 2.0 * qx * dz)
                + gz * (2.0 * qy * dx - 2.0 * qx * dy + 4.0 * qw * dz)
            )
            g_out[j, 4] = (
                gx * (4.0 * qx * dx + 2.0 * qy * dy + 2.0 * qz * dz)
                + gy * (2.0 * qy * dx + 2.0 * qw * dz)
                + gz * (2.0 * qz * dx - 2.0 * qw * dy)
            )
            g_out[j, 5] = (
                gx * (2.0 * qx * dy - 2.0 * qw * dz)
                + gy * (2.0 * qx * dx + 4.0 * qy * dy + 2.0 * qz * dz)
                + gz * (2.0 * qw * dx + 2.0 * qz * dy)
            )
            g_out[j, 6] = (
                gx * (2.0 * qw * dy + 2.0 * qx * dz)
                + gy * (-2.0 * qw * dx + 2.0 * qy * dz)
                + gz * (2.0 * qx * dx + 2.0 * qy * dy + 4.0 * qz * dz)
            )


@njit(cache=True, parallel=True)
def softmin_reduce(h, g, delta):
    """Stable softmin of ``h`` and the exp-weighted mean of rows of ``g``.

    Returns ``(h_min, argmin, log_mean_weight, grad)`` where the softmin is
    ``h_min - delta * log_mean_weight``.
    """
    n = h.shape[0]
    k = g.shape[1]
    n_chunks = (n + CHUNK - 1) // CHUNK
    cmin = np.empty(n_chunks)
    carg = np.empty(n_chunks, dtype=np.int64)
    for c in prange(n_chunks):
        lo = c * CHUNK
        hi = min(n, lo + CHUNK)
        best = h[lo]
        arg = lo
        for j in range(lo + 1, hi):
            if h[j] < best:
                best = h[j]
                arg = j
        cmin[c] = best
        carg[c] = arg
    h_min = cmin[0]
    argmin = carg[0]
    for c in range(1, n_chunks):
        if cmin[c] < h_min:
            h_min = cmin[c]
            argmin = carg[c]

    csum = np.zeros(n_chunks)
    cgrad = np.zeros((n_chunks, k))
    inv_delta = 1.0 / delta
    for c in prange(n_chunks):
        lo = c * CHUNK
        hi = min(n, lo + CHUNK)
        s = 0.0
        for j in range(lo, hi):
            w = math.exp(-(h[j] - h_min) * inv_delta)
            s += w
            for i in range(k):
                cgrad[c, i] += w * g[j, i]
        csum[c] = s
    total = 0.0
    grad = np.zeros(k)
    for c in range(n_chunks):
        total += csum[c]
        for i in range(k):
            grad[i] += cgrad[c, i]
    for i in range(k):
        grad[i] /= total
    # 1 <= total <= n, so the log term lies in [-log n, 0]
    log_mean = math.log(total) - math.log(n)
    if log_mean > 0.0:
        log_mean = 0.0
    return h_min, argmin, log_mean, grad


@njit(cache=True, parallel=True)
def needle_scales(px, py, zt, cos_t, sin_t, a_bar, inv_bd, d_bar, s_max):
    """Scale of every needle against every point (dense needle x point sweep).

    ``px, py`` are body-frame point coordinates, ``zt`` is the needle-independent
    ``z^d / c^d`` term. A point participates in needle ``i`` iff its needle-frame
    ``x > 0`` and ``m^d = 1 - y^d/b^d - z^d/c^d > 0``.
    """
    m = cos_t.shape[0]
    n = px.shape[0]
    out = np.empty(m)
    inv_root = 1.0 / d_bar
    for i in prange(m):
        c = cos_t[i]
        s = sin_t[i]
        best = s_max
        for j in range(n):
            x = c * px[j] + s * py[j]
            if x <= 0.0:
                continue
            y = -s * px[j] + c * py[j]
            if d_bar == 2:
                md = 1.0 - y * y * inv_bd - zt[j]
                if md <= 0.0:
                    continue
                mm = math.sqrt(md)
            else:
                md = 1.0 - _ipow(y, d_bar) * inv_bd - zt[j]
                if md <= 0.0:
                    continue
                mm = md**inv_root
            sij = x / ((1.0 + mm) * a_bar)
            if sij < best:
                best = sij
        out[i] = best
    return out


@njit(cache=True, parallel=True)
def needle_scales_uniform(px, py, zt, cos_t, sin_t, a_bar, b_bar, inv_bd, d_bar, s_max):
    """Same result as :func:`needle_scales` for the uniform grid ``2*pi*i/M - pi``.

    Each point only visits the needles whose lateral band can contain it, a
    window of half-width ``asin(b/rho)`` around its azimuth (padded by one
    index). Points whose nearest possible contribution exceeds ``s_max`` are
    skipped. Per-chunk minima are combined afterwards; ``min`` is exact, so the
    output is bit-identical to the dense sweep.
    """
    m = cos_t.shape[0]
    n = px.shape[0]
    inv_root = 1.0 / d_bar
    reach = 2.0 * s_max * a_bar
    step = 2.0 * math.pi / m
    n_chunks = (n + NEEDLE_CHUNK - 1) // NEEDLE_CHUNK
    buf = np.empty((max(n_chunks, 1), m))
    for c in prange(n_chunks):
        for i in range(m):
            buf[c, i] = s_max
        lo = c * NEEDLE_CHUNK
        hi = min(n, lo + NEEDLE_CHUNK)
        for j in range(lo, hi):
            if zt[j] >= 1.0:
                continue
            rem = 1.0 - zt[j]
            b_eff = b_bar * (rem**inv_root)
            rho2 = px[j] * px[j] + py[j] * py[j]
            if rho2 - b_eff * b_eff >= reach * reach:
                continue
            rho = math.sqrt(rho2)
            if rho <= b_eff:
                half = 0.5 * math.pi
            else:
                half = math.asin(b_eff / rho)
            phi = math.atan2(py[j], px[j])
            i_lo = int(math.floor((phi - half + math.pi) / step)) - 1
            i_hi = int(math.ceil((phi + half + math.pi) / step)) + 1
            if i_hi - i_lo + 1 > m:
                i_lo = 0
                i_hi = m - 1
            for k in range(i_lo, i_hi + 1):
                i = k % m
                x = cos_t[i] * px[j] + sin_t[i] * py[j]
                if x <= 0.0:
                    continue
                y = -sin_t[i] * px[j] + cos_t[i] * py[j]
                if d_bar == 2:
                    md = 1.0 - y * y * inv_bd - zt[j]
                    if md <= 0.0:
                        continue
                    mm = math.sqrt(md)
                else:
                    md = 1.0 - _ipow(y, d_bar) * inv_bd - zt[j]
                    if md <= 0.0:
                        continue
                    mm = md**inv_root
                sij = x / ((1.0 + mm) * a_bar)
                if sij < buf[c, i]:
                    buf[c, i] = sij
    out = np.empty(m)
    for i in range(m):
        best = s_max
        for c in range(n_chunks):
            if buf[c, i] < best:
                best = buf[c, i]
        out[i] = best
    return out
