"""Soft-margin binary SVM trained by SMO on the Wolfe dual.

The dual

    max  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j k(x_i, x_j)
    s.t. 0 <= alpha_i <= C_{y_i},  sum_i alpha_i y_i = 0

is solved in terms of nu_i = y_i * alpha_i with first-order
maximal-violating-pair selection. Box bounds and every pair step are
snapped down to a power-of-two lattice (relative grain 2**-48), which
keeps sum(nu) exactly zero through every update at a negligible
perturbation of the box; convergence is only accepted after the cached
gradient has been rebuilt from scratch, so the reported KKT violation is
authoritative.

Slack variables are never materialized; for any training point they are
recoverable as max(0, 1 - y_i * f(x_i)).
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .. import _accel
from ..errors import TrainingError
from .kernels import GramPool, KernelSpec, kernel_eval, kernel_matrix

_LATTICE_BITS = 48


def _lattice(C_pos: float, C_neg: float):
    """Quantum q and snapped-down box bounds for the nu lattice."""
    c_hi = max(C_pos, C_neg)
    e = math.frexp(c_hi)[1]
    q = math.ldexp(1.0, e - _LATTICE_BITS)
    cq_pos = math.floor(C_pos / q) * q
    cq_neg = math.floor(C_neg / q) * q
    if cq_pos <= 0.0 or cq_neg <= 0.0:
        raise TrainingError(
            f"class bound ratio too extreme for the dual lattice: "
            f"C_pos={C_pos}, C_neg={C_neg}"
        )
    return q, cq_pos, cq_neg


def _bounds(y, cq_pos, cq_neg):
    pos = y > 0
    lo = np.where(pos, 0.0, -cq_neg)
    up = np.where(pos, cq_pos, 0.0)
    return lo, up


def _kkt_summary(F, y, nu, lo, up):
    """(violation, bias, m, M) from a freshly rebuilt gradient."""
    v = y - F
    can_up = nu < up
    can_dn = nu > lo
    m = float(v[can_up].max()) if can_up.any() else -np.inf
    M = float(v[can_dn].min()) if can_dn.any() else np.inf
    free = can_up & can_dn
    if free.any():
        bias = float(v[free].mean())
    elif np.isfinite(m) and np.isfinite(M):
        bias = (m + M) / 2.0
    elif np.isfinite(M):
        bias = M
    elif np.isfinite(m):
        bias = m
    else:
        bias = 0.0
    violation = m - M
    if not np.isfinite(violation) or violation < 0.0:
        violation = 0.0
    return violation, bias, m, M


@dataclass
class SmoDiagnostics:
    """Training-time facts kept for KKT auditing; not serialized."""

    iters: int
    status: int
    converged: bool
    violation: float
    dual_objective: float
    sum_nu: float
    q: float
    cq_pos: float
    cq_neg: float
    n_train: int
    sv_index: np.ndarray | None = None


@dataclass
class BinarySvm:
    """Trained binary classifier in support-vector expansion form.

    coeffs[i] is alpha_i * y_i for the i-th stored support vector;
    decision(x) = sum_i coeffs[i] * k(sv_i, x) + bias. pos_label/neg_label
    record which original class sits on the +1 / -1 side.
    """

    support_vectors: np.ndarray
    coeffs: np.ndarray
    bias: float
    kernel: KernelSpec
    pos_label: int = 1
    neg_label: int = -1
    diag: SmoDiagnostics | None = field(default=None, repr=False)
    sv_pool_index: np.ndarray | None = field(default=None, repr=False)

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = kernel_matrix(self.kernel, X, self.support_vectors)
        return K @ self.coeffs + self.bias

    def decision_value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or (
            self.support_vectors.shape[0] > 0
            and x.shape[0] != self.support_vectors.shape[1]
        ):
            raise ValueError("dimension mismatch against support vectors")
        acc = self.bias
        for i in range(self.support_vectors.shape[0]):
            acc += self.coeffs[i] * kernel_eval(
                self.kernel, self.support_vectors[i], x
            )
        return float(acc)


def decision_value(model: BinarySvm, x: np.ndarray) -> float:
    return model.decision_value(x)


def _finish(nu, F_fresh, iters, status, y, lo, up, q, cq_pos, cq_neg,
            X_rows, kernel, pos_label, neg_label, tol):
    violation, bias, _, _ = _kkt_summary(F_fresh, y, nu, lo, up)
    objective = float(np.sum(y * nu) - 0.5 * (nu @ F_fresh))
    sum_nu = math.fsum(nu.tolist())
    sv = np.flatnonzero(nu != 0.0)
    diag = SmoDiagnostics(
        iters=int(iters),
        status=int(status),
        converged=bool(violation <= tol),
        violation=float(violation),
        dual_objective=objective,
        sum_nu=sum_nu,
        q=q,
        cq_pos=cq_pos,
        cq_neg=cq_neg,
        n_train=int(y.shape[0]),
        sv_index=sv,
    )
    return BinarySvm(
        support_vectors=np.ascontiguousarray(X_rows[sv]),
        coeffs=nu[sv].copy(),
        bias=float(bias),
        kernel=kernel,
        pos_label=pos_label,
        neg_label=neg_label,
        diag=diag,
    )


def train_on_matrix(K, y, X_rows, C_pos, C_neg, kernel, tol=1e-3,
                    max_iter=10_000_000, pos_label=1, neg_label=-1) -> BinarySvm:
    """Train against this problem's own precomputed kernel matrix.

    K must be exactly symmetric (see GramPool); X_rows holds the same
    rows' feature vectors, used only to materialize support vectors.
    """
    y = np.asarray(y, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    if y.shape[0] != K.shape[0] or K.shape[0] != K.shape[1]:
        raise TrainingError("K must be square with one label per row")
    if y.shape[0] < 2:
        raise TrainingError("need at least two rows")
    if not ((y > 0).any() and (y < 0).any()):
        raise TrainingError("both labels must be present")
    q, cq_pos, cq_neg = _lattice(C_pos, C_neg)
    lo, up = _bounds(y, cq_pos, cq_neg)
    nu, F, iters, status = _accel.smo_loop(
        K, y, lo, up, q, float(tol), int(max_iter)
    )
    if status != _accel.SMO_CONVERGED:
        F = _accel.smo_refresh(K, nu)
    return _finish(
        nu, F, iters, status, y, lo, up, q, cq_pos, cq_neg,
        X_rows, kernel, pos_label, neg_label, tol,
    )


class _RowCache:
    """LRU cache of kernel rows for problems too large to materialize."""

    def __init__(self, getter, max_rows):
        self._getter = getter
        self._max = max(2, int(max_rows))
        self._rows = OrderedDict()
        self.misses = 0

    def row(self, t):
        r = self._rows.get(t)
        if r is None:
            r = self._getter(t)
            self.misses += 1
            self._rows[t] = r
            if len(self._rows) > self._max:
                self._rows.popitem(last=False)
        else:
            self._rows.move_to_end(t)
        return r


def _smo_loop_lru(X, spec, y, lo, up, q, tol, max_iter, cache_rows):
    """Same update sequence as the matrix path, rows fetched on demand."""
    n = X.shape[0]

    def getter(t):
        return kernel_matrix(spec, X[t : t + 1], X)[0]

    cache = _RowCache(getter, cache_rows)
    if spec.kind == "rbf":
        diag = np.ones(n)
    else:
        diag = np.array([kernel_eval(spec, X[t], X[t]) for t in range(n)])

    def refresh(nu):
        F = np.zeros(n)
        for t2 in range(n):
            w = nu[t2]
            if w != 0.0:
                F += w * cache.row(t2)
        return F

    def select(F, nu):
        v = y - F
        vu = np.where(nu < up, v, -np.inf)
        bi = int(np.argmax(vu))
        vd = np.where(nu > lo, v, np.inf)
        bj = int(np.argmin(vd))
        return vu[bi], vd[bj], bi, bj

    nu = np.zeros(n)
    F = np.zeros(n)
    iters = 0
    status = _accel.SMO_MAX_ITER
    while True:
        m, M, bi, bj = select(F, nu)
        if not (m - M > tol):
            F = refresh(nu)
            m, M, bi, bj = select(F, nu)
            if not (m - M > tol):
                status = _accel.SMO_CONVERGED
                break
        if iters >= max_iter:
            status = _accel.SMO_MAX_ITER
            break
        row_i = cache.row(bi)
        row_j = cache.row(bj)
        a = diag[bi] + diag[bj] - 2.0 * row_i[bj]
        if a < 1e-12:
            a = 1e-12
        lam = (m - M) / a
        room_i = up[bi] - nu[bi]
        room_j = nu[bj] - lo[bj]
        if room_i < lam:
            lam = room_i
        if room_j < lam:
            lam = room_j
        lam = np.floor(lam / q) * q
        if lam <= 0.0:
            status = _accel.SMO_STALLED
            break
        nu[bi] += lam
        nu[bj] -= lam
        F += lam * (row_i - row_j)
        iters += 1
    return nu, refresh(nu), iters, status


def smo_train(X, y, C_pos, C_neg, kernel: KernelSpec, tol=1e-3,
              max_iter=10_000_000, cache_mb=1024, pos_label=1,
              neg_label=-1) -> BinarySvm:
    """Train a binary SVM; y must be +-1 with both labels present.

    The full kernel matrix is materialized when it fits in cache_mb,
    otherwise kernel rows are computed on demand through an LRU cache of
    the same byte budget.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("X must be 2-d with one label per row")
    n = X.shape[0]
    if n < 2:
        raise TrainingError("need at least two rows")
    if not ((y > 0).any() and (y < 0).any()):
        raise TrainingError("both labels must be present")
    cap_bytes = int(cache_mb) * (1 << 20)
    if n * n * 8 <= cap_bytes:
        K = GramPool(X).kernel(kernel)
        return train_on_matrix(
            K, y, X, C_pos, C_neg, kernel, tol=tol, max_iter=max_iter,
            pos_label=pos_label, neg_label=neg_label,
        )
    q, cq_pos, cq_neg = _lattice(C_pos, C_neg)
    lo, up = _bounds(y, cq_pos, cq_neg)
    nu, F, iters, status = _smo_loop_lru(
        X, kernel, y, lo, up, q, float(tol), int(max_iter),
        cache_rows=cap_bytes // (8 * n),
    )
    return _finish(
        nu, F, iters, status, y, lo, up, q, cq_pos, cq_neg,
        X, kernel, pos_label, neg_label, tol,
    )


@dataclass
class KktReport:
    sum_nu: float
    alpha_min: float
    box_excess: float
    violation: float
    box_exact: bool


def recheck_kkt(model: BinarySvm, X, y) -> KktReport:
    """Recompute KKT facts for a trained model from its training data.

    Independent of the cached gradient: rebuilds the kernel matrix and the
    full multiplier vector (non-support rows are exactly zero).
    """
    d = model.diag
    if d is None or d.sv_index is None:
        raise ValueError("model carries no training diagnostics")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nu = np.zeros(d.n_train)
    nu[d.sv_index] = model.coeffs
    alpha = y * nu
    lo, up = _bounds(y, d.cq_pos, d.cq_neg)
    K = GramPool(X).kernel(model.kernel)
    F = _accel.smo_refresh(K, nu)
    violation, _, _, _ = _kkt_summary(F, y, nu, lo, up)
    caps = np.where(y > 0, d.cq_pos, d.cq_neg)
    return KktReport(
        sum_nu=math.fsum(nu.tolist()),
        alpha_min=float(alpha.min()) if alpha.size else 0.0,
        box_excess=float((alpha - caps).max()) if alpha.size else 0.0,
        violation=float(violation),
        box_exact=bool((alpha >= 0.0).all() and (alpha <= caps).all()),
    )
