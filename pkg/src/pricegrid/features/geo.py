"""Supplier location clustering: k-means over (lat, lon) degrees.

Distances are plain squared Euclidean on raw degrees; the clusters are
coarse metro regions, so no great-circle correction is applied. Defaults
are 6 clusters for US and 9 for EU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..errors import InfeasibleClusteringError

DEFAULT_K = {"US": 6, "EU": 9}
MAX_LLOYD_ITER = 300


@dataclass
class GeoModel:
    k: int
    centroids: np.ndarray  # (k, 2) finite
    region: str
    seed: int
    inertia: float
    n_iter: int
    inertia_trace: np.ndarray

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "region": self.region,
            "seed": self.seed,
            "inertia": self.inertia,
            "n_iter": self.n_iter,
            "inertia_trace": self.inertia_trace.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeoModel":
        return cls(
            k=int(obj["k"]),
            centroids=np.asarray(obj["centroids"], dtype=np.float64),
            region=obj["region"],
            seed=int(obj["seed"]),
            inertia=float(obj["inertia"]),
            n_iter=int(obj["n_iter"]),
            inertia_trace=np.asarray(obj["inertia_trace"], dtype=np.float64),
        )


def _kmeanspp_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[int(rng.integers(n))]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centers
            centers[c] = points[int(rng.integers(n))]
            continue
        r = rng.random() * total
        j = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        j = min(j, n - 1)
        centers[c] = points[j]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans_fit(points, k: int, seed: int, restarts: int = 10,
               region: str = "US", max_iter: int = MAX_LLOYD_ITER) -> GeoModel:
    """Lloyd iterations with k-means++ seeding; best of `restarts` wins.

    Runs to an assignment fixpoint (or max_iter sweeps) per restart and
    keeps the restart with minimum inertia, ties to the lowest restart
    index, so the result is independent of any restart scheduling.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be 2-d")
    if k < 1:
        raise ValueError("k must be at least 1")
    n_distinct = np.unique(points, axis=0).shape[0]
    if n_distinct < k:
        raise InfeasibleClusteringError(
            f"need at least {k} distinct points, got {n_distinct}"
        )
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        init = _kmeanspp_init(points, k, rng)
        centroids, _, trace, n_iter = _accel.lloyd(points, init, max_iter)
        inertia = float(trace[-1])
        if best is None or inertia < best[0]:
            best = (inertia, centroids, trace, n_iter)
    inertia, centroids, trace, n_iter = best
    return GeoModel(
        k=k,
        centroids=centroids,
        region=region,
        seed=seed,
        inertia=inertia,
        n_iter=int(n_iter),
        inertia_trace=np.asarray(trace),
    )


def kmeans_assign(point, model: GeoModel):
    """Nearest centroid by squared Euclidean distance; ties to lowest index."""
    pts = np.atleast_2d(np.asarray(point, dtype=np.float64))
    d2 = ((pts[:, None, :] - model.centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    if np.asarray(point).ndim == 1:
        return int(labels[0])
    return labels


def save_geo(path, model: GeoModel):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, separators=(",", ":"))


def load_geo(path) -> GeoModel:
    with open(path, "r", encoding="utf-8") as fh:
        return GeoModel.from_json(json.load(fh))
