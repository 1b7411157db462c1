"""One-vs-one multiclass SVM with a one-vs-rest ensemble for ROC scores.

Each unordered class pair gets its own binary problem trained on that
pair's rows only; prediction is majority voting with ties broken by the
larger sum of absolute decision values over the tied class's pairs, then
by the lower class index. Class weighting is applied per sub-problem:
Balanced mode gives class c a box bound of C * n / (k * n_c) computed on
the sub-problem's own labels.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, TrainingError
from .kernels import GramPool, KernelSpec
from .smo import BinarySvm, train_on_matrix

BALANCED = "balanced"


@dataclass(frozen=True)
class TrainConfig:
    """Binary solver settings shared by every sub-problem."""

    C: float
    kernel: KernelSpec
    class_weights: object = BALANCED  # BALANCED or {class: weight}
    tol: float = 1e-3
    max_iter: int = 10_000_000
    cache_mb: int = 1024

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")

    def to_json(self) -> dict:
        w = self.class_weights
        if isinstance(w, dict):
            w = {str(k): float(v) for k, v in w.items()}
        return {
            "C": self.C,
            "kernel": self.kernel.to_json(),
            "class_weights": w,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "cache_mb": self.cache_mb,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        w = obj.get("class_weights", BALANCED)
        if isinstance(w, dict):
            w = {int(k): float(v) for k, v in w.items()}
        return cls(
            C=float(obj["C"]),
            kernel=KernelSpec.from_json(obj["kernel"]),
            class_weights=w,
            tol=float(obj.get("tol", 1e-3)),
            max_iter=int(obj.get("max_iter", 10_000_000)),
            cache_mb=int(obj.get("cache_mb", 1024)),
        )


def class_weights(labels, mode=BALANCED) -> dict:
    """Per-class weights: Balanced gives n / (k * n_c), inverse to frequency."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise TrainingError("empty label vector")
    classes, counts = np.unique(labels, return_counts=True)
    if isinstance(mode, dict):
        missing = [c for c in mode if c not in set(classes.tolist())]
        if missing:
            raise TrainingError(f"declared classes absent from labels: {missing}")
        return dict(mode)
    if mode != BALANCED:
        raise ConfigError(f"unknown class weight mode: {mode!r}")
    n = labels.size
    k = classes.size
    return {c.item(): n / (k * int(cnt)) for c, cnt in zip(classes, counts)}


@dataclass
class MulticlassSvm:
    """One-vs-one ensemble: one BinarySvm per unordered class pair."""

    classes: list
    pair_models: list  # BinarySvm, ordered by (a, b) with a < b
    config: TrainConfig
    schema_fingerprint: str | None = None
    binning_fingerprint: str | None = None
    skipped_pairs: list = field(default_factory=list)

    def pair_decision_matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.column_stack([m.decision_values(X) for m in self.pair_models])

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        dec = self.pair_decision_matrix(X)
        return self._vote(dec)

    def _vote(self, dec: np.ndarray) -> np.ndarray:
        k = len(self.classes)
        n = dec.shape[0]
        votes = np.zeros((n, k), dtype=np.int64)
        margin = np.zeros((n, k))
        for p, m in enumerate(self.pair_models):
            a = self.classes.index(m.pos_label)
            b = self.classes.index(m.neg_label)
            pos = dec[:, p] > 0
            votes[pos, a] += 1
            votes[~pos, b] += 1
            absd = np.abs(dec[:, p])
            margin[:, a] += absd
            margin[:, b] += absd
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            top = votes[i].max()
            tied = np.flatnonzero(votes[i] == top)
            if tied.size > 1:
                best = tied[np.argmax(margin[i, tied])]
            else:
                best = tied[0]
            out[i] = self.classes[best]
        return out


@dataclass
class OvrEnsemble:
    """One model per class (class vs rest); used only to score ROC curves."""

    classes: list
    models: list
    config: TrainConfig

    def class_scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.column_stack([m.decision_values(X) for m in self.models])


def _binary_bounds(config: TrainConfig, pos_class, neg_class, y_signed):
    if isinstance(config.class_weights, dict):
        w = config.class_weights
        try:
            w_pos, w_neg = w[pos_class], w[neg_class]
        except KeyError as exc:
            raise TrainingError(f"class weight missing for {exc}") from exc
    else:
        bw = class_weights(y_signed, BALANCED)
        w_pos, w_neg = bw[1], bw[-1]
    return config.C * w_pos, config.C * w_neg


def _solve_subproblem(pool, rows, y_signed, config, pos_class, neg_class):
    c_pos, c_neg = _binary_bounds(config, pos_class, neg_class, y_signed)
    # contiguous submatrix: the SMO sweeps rows constantly and strided
    # gathers from the pooled matrix would thrash the cache
    K_sub = pool.submatrix(config.kernel, rows)
    model = train_on_matrix(
        K_sub, y_signed, pool.X[rows], c_pos, c_neg, config.kernel,
        tol=config.tol, max_iter=config.max_iter,
        pos_label=pos_class, neg_label=neg_class,
    )
    model.sv_pool_index = rows[model.diag.sv_index]
    return model


def _run_tasks(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(t) for t in tasks]
        return [f.result() for f in futures]


def train_multiclass(X, labels, config: TrainConfig, classes=None,
                     pool: GramPool | None = None, row_idx=None, jobs=1,
                     diagnostics=None) -> MulticlassSvm:
    """Train the one-vs-one ensemble on X[row_idx] (all rows by default).

    A shared GramPool may be passed so repeated calls over the same row
    universe (grid search, cross-validation) reuse the kernel matrix. Pairs
    with an empty side are skipped with a diagnostic and excluded from
    voting.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if row_idx is None:
        row_idx = np.arange(X.shape[0], dtype=np.int64)
    else:
        row_idx = np.asarray(row_idx, dtype=np.int64)
    if classes is None:
        classes = sorted(int(c) for c in np.unique(labels[row_idx]))
    else:
        classes = [int(c) for c in classes]
    if len(classes) < 2:
        raise TrainingError("need at least two classes")
    if pool is None:
        pool = GramPool(X)
    pool.kernel(config.kernel)

    by_class = {c: row_idx[labels[row_idx] == c] for c in classes}
    pairs = [(a, b) for i, a in enumerate(classes) for b in classes[i + 1 :]]
    skipped = []
    tasks = []
    for a, b in pairs:
        ra, rb = by_class[a], by_class[b]
        if ra.size == 0 or rb.size == 0:
            skipped.append((a, b))
            if diagnostics is not None:
                diagnostics.append(f"pair ({a},{b}) skipped: one side empty")
            continue
        rows = np.sort(np.concatenate([ra, rb]))
        y_signed = np.where(labels[rows] == a, 1.0, -1.0)
        tasks.append(
            lambda rows=rows, y_signed=y_signed, a=a, b=b: _solve_subproblem(
                pool, rows, y_signed, config, a, b
            )
        )
    models = _run_tasks(tasks, jobs)
    return MulticlassSvm(
        classes=classes,
        pair_models=models,
        config=config,
        skipped_pairs=skipped,
    )


def train_ovr(X, labels, config: TrainConfig, classes=None,
              pool: GramPool | None = None, row_idx=None, jobs=1) -> OvrEnsemble:
    """One-vs-rest ensemble with Balanced weights on each binarized problem."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if row_idx is None:
        row_idx = np.arange(X.shape[0], dtype=np.int64)
    else:
        row_idx = np.asarray(row_idx, dtype=np.int64)
    if classes is None:
        classes = sorted(int(c) for c in np.unique(labels[row_idx]))
    else:
        classes = [int(c) for c in classes]
    if len(classes) < 2:
        raise TrainingError("need at least two classes")
    if pool is None:
        pool = GramPool(X)
    pool.kernel(config.kernel)
    rows = np.sort(row_idx)

    def solve(c):
        y_signed = np.where(labels[rows] == c, 1.0, -1.0)
        if not ((y_signed > 0).any() and (y_signed < 0).any()):
            raise TrainingError(f"class {c} missing or covering all rows")
        bw = class_weights(y_signed, BALANCED)
        K_sub = pool.submatrix(config.kernel, rows)
        model = train_on_matrix(
            K_sub, y_signed, pool.X[rows], config.C * bw[1],
            config.C * bw[-1], config.kernel, tol=config.tol,
            max_iter=config.max_iter, pos_label=c, neg_label=-1,
        )
        model.sv_pool_index = rows[model.diag.sv_index]
        return model

    models = _run_tasks([lambda c=c: solve(c) for c in classes], jobs)
    return OvrEnsemble(classes=classes, models=models, config=config)


def pool_decision_values(model: BinarySvm, K: np.ndarray, query_idx) -> np.ndarray:
    """Decision values for pool rows, via kernel matrix slicing."""
    if model.sv_pool_index is None:
        raise ValueError("model was not trained against a pool")
    if model.sv_pool_index.size == 0:
        return np.full(len(query_idx), model.bias)
    block = K[np.ix_(np.asarray(query_idx, dtype=np.int64), model.sv_pool_index)]
    return block @ model.coeffs + model.bias


def pool_pair_decisions(models, pool: GramPool, spec, query_idx,
                        base_rows) -> np.ndarray:
    """Decision matrix (len(query_idx), len(models)) for pool rows.

    base_rows must be sorted and contain every model's support rows; the
    per-pair expansions are packed into one coefficient matrix so a single
    cached kernel block and one matmul score all models at once.
    """
    query_idx = np.asarray(query_idx, dtype=np.int64)
    base_rows = np.asarray(base_rows, dtype=np.int64)
    B = pool.block(spec, query_idx, base_rows)
    W = np.zeros((base_rows.size, len(models)))
    biases = np.empty(len(models))
    for p, m in enumerate(models):
        pos = np.searchsorted(base_rows, m.sv_pool_index)
        W[pos, p] = m.coeffs
        biases[p] = m.bias
    return B @ W + biases


def pool_predict(model: MulticlassSvm, pool: GramPool, query_idx,
                 base_rows) -> np.ndarray:
    dec = pool_pair_decisions(
        model.pair_models, pool, model.config.kernel, query_idx, base_rows
    )
    return model._vote(dec)
