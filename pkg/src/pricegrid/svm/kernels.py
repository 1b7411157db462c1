"""Kernel functions, kernel matrices, and the shared Gram pool.

All kernels evaluate squared distances through the expanded form
``x.x + z.z - 2 x.z`` so that single evaluations, cross matrices and the
pooled full matrix agree on the same floating point pipeline.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

KERNEL_KINDS = ("rbf", "linear", "poly", "sigmoid")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    gamma is required for rbf/poly/sigmoid, degree and coef0 only apply to
    poly (coef0 also to sigmoid).
    """

    kind: str
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind: {self.kind!r}")
        if self.uses_gamma:
            if self.gamma is None or not self.gamma > 0:
                raise ConfigError(f"kernel {self.kind!r} needs gamma > 0")
        if self.kind == "poly" and self.degree < 1:
            raise ConfigError("poly kernel needs degree >= 1")

    @property
    def uses_gamma(self) -> bool:
        return self.kind in ("rbf", "poly", "sigmoid")

    def cache_key(self):
        return (self.kind, self.gamma, self.degree, self.coef0)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.uses_gamma:
            out["gamma"] = self.gamma
        if self.kind == "poly":
            out["degree"] = self.degree
        if self.kind in ("poly", "sigmoid"):
            out["coef0"] = self.coef0
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        return cls(
            kind=obj["kind"],
            gamma=obj.get("gamma"),
            degree=int(obj.get("degree", 3)),
            coef0=float(obj.get("coef0", 0.0)),
        )


def kernel_eval(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> float:
    """Evaluate k(x, z) for a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    dot = float(x @ z)
    if spec.kind == "linear":
        return dot
    if spec.kind == "rbf":
        d2 = float(x @ x) + float(z @ z) - 2.0 * dot
        if d2 < 0.0:
            d2 = 0.0
        return float(np.exp(-spec.gamma * d2))
    if spec.kind == "poly":
        return float((spec.gamma * dot + spec.coef0) ** spec.degree)
    return float(np.tanh(spec.gamma * dot + spec.coef0))


def _from_dots(spec: KernelSpec, dots, sq_a, sq_b):
    if spec.kind == "linear":
        return dots
    if spec.kind == "rbf":
        d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * dots
        np.maximum(d2, 0.0, out=d2)
        d2 *= -spec.gamma
        return np.exp(d2, out=d2)
    if spec.kind == "poly":
        return (spec.gamma * dots + spec.coef0) ** spec.degree
    return np.tanh(spec.gamma * dots + spec.coef0)


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Cross kernel matrix of shape (len(A), len(B))."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    dots = A @ B.T
    return _from_dots(spec, dots, (A * A).sum(axis=1), (B * B).sum(axis=1))


class GramPool:
    """Caches the full Gram matrix of one row universe across kernel specs.

    Grid search sweeps many (C, gamma) cells over the same rows; the dot
    product matrix is computed once and each new spec only costs an
    elementwise transform. Only the most recent spec's kernel matrix (and
    its contiguous submatrices, see submatrix()) are kept, so memory stays
    bounded while C sweeps under a fixed gamma pay no slicing cost.
    """

    def __init__(self, X: np.ndarray):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self._dots = None
        self._key = None
        self._K = None
        self._sub = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def dots(self) -> np.ndarray:
        if self._dots is None:
            d = self.X @ self.X.T
            # GEMM output is not guaranteed bitwise symmetric; the solver
            # reads rows where the math says columns, so make it exact
            d = np.tril(d) + np.tril(d, -1).T
            self._dots = d
        return self._dots

    def kernel(self, spec: KernelSpec) -> np.ndarray:
        key = spec.cache_key()
        if key != self._key:
            dots = self.dots()
            sq = np.diagonal(dots).copy()
            self._K = np.ascontiguousarray(_from_dots(spec, dots, sq, sq))
            self._key = key
            self._sub = {}
        return self._K

    def submatrix(self, spec: KernelSpec, rows: np.ndarray) -> np.ndarray:
        """Contiguous K[rows][:, rows] for the given spec, cached.

        Thread-safe; the cache is cleared whenever the spec changes, so at
        most one spec's submatrices are held.
        """
        return self.block(spec, rows, rows)

    def block(self, spec: KernelSpec, rows_a: np.ndarray,
              rows_b: np.ndarray) -> np.ndarray:
        """Contiguous K[rows_a][:, rows_b] for the given spec, cached."""
        key = (rows_a.tobytes(), rows_b.tobytes())
        with self._lock:
            K = self.kernel(spec)
            blk = self._sub.get(key)
            if blk is None:
                blk = K[np.ix_(rows_a, rows_b)]
                self._sub[key] = blk
        return blk

    def release(self):
        self._dots = None
        self._K = None
        self._key = None
        self._sub = {}
