"""Backend-switched numeric kernels.

The hot inner loops (the SMO dual solver and the k-means Lloyd sweep) exist
twice: a loop-style version compiled with numba and a vectorized numpy
version. ``PRICEGRID_BACKEND=numpy`` forces the numpy path,
``PRICEGRID_BACKEND=numba`` requires the compiled path (import error if
numba is missing), and the default picks numba when available.

Both SMO variants perform the same floating point operations element by
element (same selection ties, same update order), so for identical inputs
they return bit-identical multipliers. The Lloyd variants agree on
assignments and convergence but may differ in the last bits of centroid
means because numpy sums pairwise.

``benchmarks/bench_backends.py`` compares the two paths on realistic sizes.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("PRICEGRID_BACKEND", "").strip().lower()
if _REQUESTED not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"PRICEGRID_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}"
    )

if _REQUESTED == "numpy":
    _HAS_NUMBA = False
else:
    try:
        import numba

        _HAS_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        if _REQUESTED == "numba":
            raise
        _HAS_NUMBA = False

BACKEND = "numba" if _HAS_NUMBA else "numpy"

# Status codes returned by the SMO loop.
SMO_CONVERGED = 0
SMO_MAX_ITER = 1
SMO_STALLED = 2

_TAU = 1e-12  # curvature floor for the two-variable subproblem


# ---------------------------------------------------------------------------
# SMO dual solver.
#
# Works on nu = y * alpha with per-row box [lo, up]. K is this problem's
# own kernel matrix and must be exactly symmetric (rows are read where the
# math says columns). The bounds are snapped to multiples of q (a power of
# two) by the caller and every step lambda is quantized down to that
# lattice, so nu stays on the lattice and sum(nu) == 0 holds exactly at
# all times, not just in exact arithmetic.
#
# The loop maintains v = y - K @ nu incrementally together with two
# movability flags per row (which only change for the two rows a step
# touches); v is rebuilt from scratch before convergence is accepted, so
# the reported KKT violation is authoritative.
# ---------------------------------------------------------------------------


def _smo_loop_np(K, y, lo, up, q, tol, max_iter):
    n = y.shape[0]
    nu = np.zeros(n)
    v = y.copy()
    can_up = nu < up
    can_dn = nu > lo
    neg_inf = -np.inf
    pos_inf = np.inf
    iters = 0
    status = SMO_MAX_ITER

    def select():
        vu = np.where(can_up, v, neg_inf)
        bi = int(np.argmax(vu))
        vd = np.where(can_dn, v, pos_inf)
        bj = int(np.argmin(vd))
        return vu[bi], vd[bj], bi, bj

    m, M, bi, bj = select()
    while True:
        if not (m - M > tol):
            F = np.zeros(n)
            for t2 in range(n):
                w = nu[t2]
                if w != 0.0:
                    F += w * K[t2]
            v = y - F
            m, M, bi, bj = select()
            if not (m - M > tol):
                status = SMO_CONVERGED
                break
        if iters >= max_iter:
            status = SMO_MAX_ITER
            break
        a = K[bi, bi] + K[bj, bj] - 2.0 * K[bi, bj]
        if a < _TAU:
            a = _TAU
        lam = (m - M) / a
        room_i = up[bi] - nu[bi]
        room_j = nu[bj] - lo[bj]
        if room_i < lam:
            lam = room_i
        if room_j < lam:
            lam = room_j
        lam = np.floor(lam / q) * q
        if lam <= 0.0:
            status = SMO_STALLED
            break
        nu[bi] += lam
        nu[bj] -= lam
        can_up[bi] = nu[bi] < up[bi]
        can_dn[bi] = nu[bi] > lo[bi]
        can_up[bj] = nu[bj] < up[bj]
        can_dn[bj] = nu[bj] > lo[bj]
        v -= lam * (K[bi] - K[bj])
        m, M, bi, bj = select()
        iters += 1
    return nu, y - v, iters, status


def _smo_loop_loops(K, y, lo, up, q, tol, max_iter):
    n = y.shape[0]
    nu = np.zeros(n)
    v = y.copy()
    can_up = np.empty(n, dtype=np.bool_)
    can_dn = np.empty(n, dtype=np.bool_)
    for t in range(n):
        can_up[t] = nu[t] < up[t]
        can_dn[t] = nu[t] > lo[t]
    iters = 0
    status = SMO_MAX_ITER
    # initial working pair: i maximizes v among rows that can move up,
    # j minimizes v among rows that can move down
    m = -np.inf
    M = np.inf
    bi = 0
    bj = 0
    for t in range(n):
        vt = v[t]
        if can_up[t] and vt > m:
            m = vt
            bi = t
        if can_dn[t] and vt < M:
            M = vt
            bj = t
    while True:
        if not (m - M > tol):
            # apparent convergence: rebuild v exactly, then re-check
            F = np.zeros(n)
            for t2 in range(n):
                w = nu[t2]
                if w != 0.0:
                    for t in range(n):
                        F[t] += w * K[t2, t]
            for t in range(n):
                v[t] = y[t] - F[t]
            m = -np.inf
            M = np.inf
            bi = 0
            bj = 0
            for t in range(n):
                vt = v[t]
                if can_up[t] and vt > m:
                    m = vt
                    bi = t
                if can_dn[t] and vt < M:
                    M = vt
                    bj = t
            if not (m - M > tol):
                status = SMO_CONVERGED
                break
        if iters >= max_iter:
            status = SMO_MAX_ITER
            break
        a = K[bi, bi] + K[bj, bj] - 2.0 * K[bi, bj]
        if a < _TAU:
            a = _TAU
        lam = (m - M) / a
        room_i = up[bi] - nu[bi]
        room_j = nu[bj] - lo[bj]
        if room_i < lam:
            lam = room_i
        if room_j < lam:
            lam = room_j
        lam = np.floor(lam / q) * q
        if lam <= 0.0:
            status = SMO_STALLED
            break
        nu[bi] += lam
        nu[bj] -= lam
        can_up[bi] = nu[bi] < up[bi]
        can_dn[bi] = nu[bi] > lo[bi]
        can_up[bj] = nu[bj] < up[bj]
        can_dn[bj] = nu[bj] > lo[bj]
        # fused gradient update + next pair selection, one pass
        gi = bi
        gj = bj
        m = -np.inf
        M = np.inf
        bi = 0
        bj = 0
        for t in range(n):
            vt = v[t] - lam * (K[gi, t] - K[gj, t])
            v[t] = vt
            if can_up[t] and vt > m:
                m = vt
                bi = t
            if can_dn[t] and vt < M:
                M = vt
                bj = t
        iters += 1
    F_out = np.empty(n)
    for t in range(n):
        F_out[t] = y[t] - v[t]
    return nu, F_out, iters, status


# ---------------------------------------------------------------------------
# k-means Lloyd sweep on low-dimensional points.
#
# Runs assignment + mean updates until the assignment reaches a fixpoint or
# max_iter sweeps, recording inertia after every assignment step. Empty
# clusters are re-seeded at the point currently farthest from its centroid
# (first occurrence wins, each point used at most once per sweep).
# ---------------------------------------------------------------------------


def _lloyd_np(points, centroids, max_iter):
    n = points.shape[0]
    k = centroids.shape[0]
    centroids = centroids.copy()
    labels = np.full(n, -1, dtype=np.int64)
    trace = np.empty(max_iter)
    it = 0
    while it < max_iter:
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        best = d2[np.arange(n), new_labels]
        trace[it] = best.sum()
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        it += 1
        if not changed:
            break
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        avail = best.copy()
        for c in range(k):
            if counts[c] > 0:
                centroids[c] = sums[c] / counts[c]
            else:
                far = int(np.argmax(avail))
                centroids[c] = points[far]
                avail[far] = -1.0
    return centroids, labels, trace[:it], it


def _lloyd_loops(points, centroids, max_iter):
    n = points.shape[0]
    k = centroids.shape[0]
    dim = points.shape[1]
    centroids = centroids.copy()
    labels = np.full(n, -1, dtype=np.int64)
    best = np.empty(n)
    trace = np.empty(max_iter)
    sums = np.zeros((k, dim))
    counts = np.zeros(k, dtype=np.int64)
    it = 0
    while it < max_iter:
        changed = False
        inertia = 0.0
        for i in range(n):
            bd = np.inf
            bl = -1
            for c in range(k):
                d2 = 0.0
                for f in range(dim):
                    diff = points[i, f] - centroids[c, f]
                    d2 += diff * diff
                if d2 < bd:
                    bd = d2
                    bl = c
            if labels[i] != bl:
                changed = True
                labels[i] = bl
            best[i] = bd
            inertia += bd
        trace[it] = inertia
        it += 1
        if not changed:
            break
        for c in range(k):
            counts[c] = 0
            for f in range(dim):
                sums[c, f] = 0.0
        for i in range(n):
            li = labels[i]
            counts[li] += 1
            for f in range(dim):
                sums[li, f] += points[i, f]
        for c in range(k):
            if counts[c] > 0:
                for f in range(dim):
                    centroids[c, f] = sums[c, f] / counts[c]
            else:
                far = 0
                fd = -1.0
                for i in range(n):
                    if best[i] > fd:
                        fd = best[i]
                        far = i
                for f in range(dim):
                    centroids[c, f] = points[far, f]
                best[far] = -1.0
    return centroids, labels, trace[:it], it


if _HAS_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _smo_loop_nb = _jit(_smo_loop_loops)
    _lloyd_nb = _jit(_lloyd_loops)

    smo_loop = _smo_loop_nb
    lloyd = _lloyd_nb
else:
    smo_loop = _smo_loop_np
    lloyd = _lloyd_np


def smo_refresh(K, nu):
    """Bias-free decision values K @ nu rebuilt from scratch.

    Backend-independent: accumulates support-vector rows in index order,
    matching the rebuild inside the solver loops bit for bit.
    """
    n = nu.shape[0]
    F = np.zeros(n)
    for t2 in range(n):
        w = nu[t2]
        if w != 0.0:
            F += w * K[t2]
    return F
