"""Model selection and evaluation: stratified k-fold CV, two-stage grid
search, learning curves, classification metrics, and ROC/AUC.

Grid search first sweeps C (and gamma where the kernel uses it) over
powers of ten in [1e-4, 1e4], then refines multiplicatively around the
coarse winner; cells are scored by mean CV accuracy with ties broken by
request order of the kernel, then smaller C, then smaller gamma. The
"paper" fine preset centers the refinement on (C=6500, gamma=0.01) so
that cell is always reachable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StratificationError
from .svm import (
    BALANCED,
    GramPool,
    KernelSpec,
    MulticlassSvm,
    TrainConfig,
    pool_predict,
    train_multiclass,
)

COARSE_VALUES = tuple(float(10.0 ** e) for e in range(-4, 5))
FINE_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
PAPER_FINE_CENTER = (6500.0, 0.01)
DEFAULT_CELL_MAX_ITER = 10_000
DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 11))


# ---------------------------------------------------------------------------
# Folds and cross-validation.
# ---------------------------------------------------------------------------


@dataclass
class FoldPlan:
    k: int
    assignment: np.ndarray  # fold index per row
    seed: int

    def fold_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def rest_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle within each class, then round-robin fold assignment."""
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignment = np.full(labels.shape[0], -1, dtype=np.int64)
    for c in np.unique(labels):
        rows = np.flatnonzero(labels == c)
        if rows.size < k:
            raise StratificationError(
                f"class {c} has {rows.size} member(s); need at least k={k}"
            )
        shuffled = rows[rng.permutation(rows.size)]
        for pos, row in enumerate(shuffled):
            assignment[row] = pos % k
    return FoldPlan(k=k, assignment=assignment, seed=seed)


@dataclass
class CvResult:
    mean_accuracy: float
    variance: float  # population variance of the per-fold accuracies
    fold_accuracies: list
    n_unconverged: int = 0


def cross_validate(X, labels, config: TrainConfig, plan: FoldPlan,
                   pool: GramPool | None = None, row_idx=None,
                   classes=None, jobs: int = 1) -> CvResult:
    """Train on k-1 folds, score accuracy on the held-out fold, k times.

    row_idx restricts everything to a subset of rows (the plan must then
    be over positions 0..len(row_idx)-1).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if row_idx is None:
        row_idx = np.arange(X.shape[0], dtype=np.int64)
    else:
        row_idx = np.asarray(row_idx, dtype=np.int64)
    if pool is None:
        pool = GramPool(X)
    pool.kernel(config.kernel)
    accs = []
    unconverged = 0
    for fold in range(plan.k):
        train_rows = row_idx[plan.rest_rows(fold)]
        test_rows = row_idx[plan.fold_rows(fold)]
        model = train_multiclass(
            pool.X, labels, config, classes=classes, pool=pool,
            row_idx=train_rows, jobs=jobs,
        )
        unconverged += sum(
            1 for m in model.pair_models
            if m.diag is not None and not m.diag.converged
        )
        pred = pool_predict(model, pool, test_rows, train_rows)
        accs.append(float(np.mean(pred == labels[test_rows])))
    accs_arr = np.asarray(accs)
    return CvResult(
        mean_accuracy=float(accs_arr.mean()),
        variance=float(accs_arr.var()),
        fold_accuracies=accs,
        n_unconverged=unconverged,
    )


# ---------------------------------------------------------------------------
# Two-stage grid search.
# ---------------------------------------------------------------------------


@dataclass
class GridCell:
    kernel_kind: str
    C: float
    gamma: float | None
    mean_accuracy: float
    variance: float
    fold_accuracies: list
    n_unconverged: int
    error: str | None = None

    def as_row(self) -> dict:
        return {
            "kernel": self.kernel_kind,
            "C": self.C,
            "gamma": "" if self.gamma is None else self.gamma,
            "mean_cv_accuracy": self.mean_accuracy,
            "cv_variance": self.variance,
            "n_unconverged": self.n_unconverged,
            "error": self.error or "",
        }


@dataclass
class GridSearchReport:
    stage: str  # "coarse" | "fine"
    cells: list
    best_index: int

    @property
    def best(self) -> GridCell:
        return self.cells[self.best_index]

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "cells": [c.as_row() for c in self.cells],
            "best_index": self.best_index,
        }


def _base_spec(kind: str, gamma):
    if kind == "linear":
        return KernelSpec("linear")
    return KernelSpec(kind, gamma=gamma)


def _rank_key(order, cell: GridCell):
    return (
        -cell.mean_accuracy,
        order.index(cell.kernel_kind),
        cell.C,
        -1.0 if cell.gamma is None else cell.gamma,
    )


def _pick_best(cells, kernel_order) -> int:
    scored = [
        (i, c) for i, c in enumerate(cells) if c.error is None
    ]
    if not scored:
        raise StratificationError("every grid cell failed")
    best_i, _ = min(scored, key=lambda t: _rank_key(kernel_order, t[1]))
    return best_i


def grid_search(X, labels, kernels, plan: FoldPlan, pool: GramPool | None = None,
                row_idx=None, classes=None, coarse_values=COARSE_VALUES,
                fine_factors=FINE_FACTORS, fine_center=None,
                cell_max_iter: int = DEFAULT_CELL_MAX_ITER,
                tol: float = 1e-3, final_max_iter: int = 10_000_000,
                jobs: int = 1):
    """Coarse-then-fine hyperparameter search over (kernel, C, gamma).

    kernels is an ordered list of kernel kind names. fine_center overrides
    the refinement center (use PAPER_FINE_CENTER to guarantee the
    (6500, 0.01) cell is explored). Cells are trained with a bounded
    iteration budget (cell_max_iter); unconverged solves count into the
    cell's n_unconverged but still score. Training failures mark the cell
    with an error and exclude it from ranking.

    Returns (coarse_report, fine_report, best_config).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if pool is None:
        pool = GramPool(X)
    kernel_order = list(kernels)
    cache = {}

    def eval_cell(kind: str, C: float, gamma) -> GridCell:
        key = (kind, C, gamma)
        if key in cache:
            return cache[key]
        try:
            config = TrainConfig(
                C=C, kernel=_base_spec(kind, gamma), class_weights=BALANCED,
                tol=tol, max_iter=cell_max_iter,
            )
            cv = cross_validate(
                X, labels, config, plan, pool=pool, row_idx=row_idx,
                classes=classes, jobs=jobs,
            )
            cell = GridCell(
                kernel_kind=kind, C=C, gamma=gamma,
                mean_accuracy=cv.mean_accuracy, variance=cv.variance,
                fold_accuracies=cv.fold_accuracies,
                n_unconverged=cv.n_unconverged,
            )
        except Exception as exc:  # noqa: BLE001 - cell failures are data
            cell = GridCell(
                kernel_kind=kind, C=C, gamma=gamma, mean_accuracy=float("nan"),
                variance=float("nan"), fold_accuracies=[], n_unconverged=0,
                error=f"{type(exc).__name__}: {exc}",
            )
        cache[key] = cell
        return cell

    def stage(points, name) -> GridSearchReport:
        # evaluate gamma-major so the pooled kernel matrix is reused
        eval_order = sorted(
            set(points),
            key=lambda p: (kernel_order.index(p[0]),
                           -1.0 if p[2] is None else p[2], p[1]),
        )
        for kind, C, gamma in eval_order:
            eval_cell(kind, C, gamma)
        report_order = sorted(
            set(points),
            key=lambda p: (kernel_order.index(p[0]), p[1],
                           -1.0 if p[2] is None else p[2]),
        )
        cells = [cache[p] for p in report_order]
        return GridSearchReport(
            stage=name, cells=cells, best_index=_pick_best(cells, kernel_order)
        )

    coarse_points = []
    for kind in kernel_order:
        uses_gamma = kind != "linear"
        for C in coarse_values:
            if uses_gamma:
                coarse_points.extend((kind, C, g) for g in coarse_values)
            else:
                coarse_points.append((kind, C, None))
    coarse = stage(coarse_points, "coarse")

    winner = coarse.best
    if fine_center is None:
        center_c, center_g = winner.C, winner.gamma
        fine_kind = winner.kernel_kind
    else:
        center_c, center_g = fine_center
        fine_kind = winner.kernel_kind
        if fine_kind == "linear":
            center_g = None
    fine_points = []
    for fc in fine_factors:
        C = center_c * fc
        if center_g is None:
            fine_points.append((fine_kind, C, None))
        else:
            fine_points.extend(
                (fine_kind, C, center_g * fg) for fg in fine_factors
            )
    fine = stage(fine_points, "fine")

    all_cells = coarse.cells + fine.cells
    best = all_cells[_pick_best(all_cells, kernel_order)]
    best_config = TrainConfig(
        C=best.C,
        kernel=_base_spec(best.kernel_kind, best.gamma),
        class_weights=BALANCED,
        tol=tol,
        max_iter=final_max_iter,
    )
    return coarse, fine, best_config


# ---------------------------------------------------------------------------
# Learning curves.
# ---------------------------------------------------------------------------


@dataclass
class LearningCurve:
    fractions: list
    train_accuracy: list
    cv_accuracy: list
    cv_variance: list
    subset_sizes: list

    def to_json(self) -> dict:
        return {
            "fractions": self.fractions,
            "train_accuracy": self.train_accuracy,
            "cv_accuracy": self.cv_accuracy,
            "cv_variance": self.cv_variance,
            "subset_sizes": self.subset_sizes,
        }


def learning_curve(X, labels, config: TrainConfig, fractions=DEFAULT_FRACTIONS,
                   k: int = 5, seed: int = 0, pool: GramPool | None = None,
                   jobs: int = 1) -> LearningCurve:
    """Train/CV accuracy versus training-set size.

    Per fraction f, a stratified prefix subsample (shuffled once, so the
    subsets are nested) of round(f * n_c) rows per class is trained on and
    cross-validated within itself. A large persistent gap between train
    and CV accuracy flags an overfit configuration.
    """
    fractions = list(fractions)
    if not fractions or any(not 0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if sorted(fractions) != fractions:
        raise ValueError("fractions must be ascending")
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if pool is None:
        pool = GramPool(X)
    rng = np.random.default_rng(seed)
    per_class = {
        int(c): np.flatnonzero(labels == c) for c in np.unique(labels)
    }
    shuffled = {
        c: rows[rng.permutation(rows.size)] for c, rows in per_class.items()
    }
    train_acc, cv_acc, cv_var, sizes = [], [], [], []
    for f in fractions:
        parts = []
        for c, rows in shuffled.items():
            take = int(np.floor(f * rows.size + 0.5))
            if take < k:
                raise StratificationError(
                    f"fraction {f} leaves class {c} with {take} rows; "
                    f"need at least k={k}"
                )
            parts.append(rows[:take])
        sub = np.sort(np.concatenate(parts))
        model = train_multiclass(
            pool.X, labels, config, pool=pool, row_idx=sub, jobs=jobs
        )
        pred = pool_predict(model, pool, sub, sub)
        train_acc.append(float(np.mean(pred == labels[sub])))
        sub_plan = stratified_kfold(labels[sub], k, seed)
        cv = cross_validate(
            X, labels, config, sub_plan, pool=pool, row_idx=sub, jobs=jobs
        )
        cv_acc.append(cv.mean_accuracy)
        cv_var.append(cv.variance)
        sizes.append(int(sub.size))
    return LearningCurve(
        fractions=fractions, train_accuracy=train_acc, cv_accuracy=cv_acc,
        cv_variance=cv_var, subset_sizes=sizes,
    )


# ---------------------------------------------------------------------------
# Evaluation metrics.
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    classes: list
    confusion: np.ndarray  # rows = true, cols = predicted
    per_class: list  # dicts: class, precision, recall, f1, support
    micro: dict  # accuracy == precision == recall == f1, exactly
    baseline: float
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "per_class": self.per_class,
            "micro": self.micro,
            "baseline": self.baseline,
            "diagnostics": self.diagnostics,
        }


def baseline_accuracy(labels) -> float:
    """Share of the most frequent class (always-majority predictor)."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label vector")
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max() / labels.size)


def evaluate_predictions(y_true, y_pred, classes=None,
                         baseline_labels=None) -> EvalReport:
    """Confusion matrix, per-class P/R/F1, micro averages, baseline.

    Micro precision/recall/F1 are computed from the pooled counts, where
    they all equal plain accuracy for single-label classification; the
    identity therefore holds exactly, not just to rounding.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise ValueError("empty test set")
    if classes is None:
        classes = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    classes = [int(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[index[int(t)], index[int(p)]] += 1
    diagnostics = []
    per_class = []
    for i, c in enumerate(classes):
        tp = int(confusion[i, i])
        fp = int(confusion[:, i].sum() - tp)
        fn = int(confusion[i, :].sum() - tp)
        if tp + fp == 0:
            precision = 0.0
            diagnostics.append(f"class {c}: no predicted positives; precision=0")
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 0.0
            diagnostics.append(f"class {c}: no true members; recall=0")
        else:
            recall = tp / (tp + fn)
        if precision + recall == 0.0:
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        per_class.append(
            {
                "class": c,
                "precision": precision,
                "recall": recall,
                "f1": f1,
                "support": tp + fn,
            }
        )
    correct = int(np.trace(confusion))
    total = int(y_true.size)
    accuracy = correct / total
    micro = {
        "accuracy": accuracy,
        "precision": accuracy,
        "recall": accuracy,
        "f1": accuracy,
    }
    base_labels = y_true if baseline_labels is None else np.asarray(baseline_labels)
    return EvalReport(
        classes=classes,
        confusion=confusion,
        per_class=per_class,
        micro=micro,
        baseline=baseline_accuracy(base_labels),
        diagnostics=diagnostics,
    )


def evaluate(model: MulticlassSvm, X_test, y_test) -> EvalReport:
    pred = model.predict(X_test)
    return evaluate_predictions(y_test, pred, classes=model.classes)


# ---------------------------------------------------------------------------
# ROC curves.
# ---------------------------------------------------------------------------


@dataclass
class RocCurve:
    label: str  # class index as string, or "micro"
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass
class RocResult:
    per_class: list  # RocCurve per scored class
    micro: RocCurve
    skipped: list = field(default_factory=list)

    def to_json(self) -> dict:
        def curve(c):
            return {
                "label": c.label,
                "fpr": c.fpr.tolist(),
                "tpr": c.tpr.tolist(),
                "auc": c.auc,
            }

        return {
            "per_class": [curve(c) for c in self.per_class],
            "micro": curve(self.micro),
            "skipped": self.skipped,
        }


def _binary_roc(scores: np.ndarray, positives: np.ndarray, label: str) -> RocCurve:
    """Threshold sweep over sorted scores; tied scores step simultaneously."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = positives[order].astype(np.int64)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    tp = np.cumsum(pos)
    fp = np.cumsum(1 - pos)
    # keep only the last point of every tied-score group
    keep = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tpr = np.concatenate([[0.0], tp[keep] / n_pos])
    fpr = np.concatenate([[0.0], fp[keep] / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(label=label, fpr=fpr, tpr=tpr, auc=auc)


def roc_curves(scores, labels, classes) -> RocResult:
    """Per-class one-vs-rest ROC plus the micro-average curve.

    scores has one column per class (higher means more positive); classes
    lacking a positive or negative example are skipped with a note. The
    micro curve pools every (sample, class) binary decision into a single
    sweep.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    classes = [int(c) for c in classes]
    if scores.ndim != 2 or scores.shape[1] != len(classes):
        raise ValueError("scores must have one column per class")
    per_class = []
    skipped = []
    pooled_scores = []
    pooled_pos = []
    for j, c in enumerate(classes):
        positives = labels == c
        pooled_scores.append(scores[:, j])
        pooled_pos.append(positives)
        n_pos = int(positives.sum())
        if n_pos == 0 or n_pos == labels.size:
            skipped.append(
                f"class {c}: needs at least one positive and one negative"
            )
            continue
        per_class.append(_binary_roc(scores[:, j], positives, label=str(c)))
    micro = _binary_roc(
        np.concatenate(pooled_scores), np.concatenate(pooled_pos), label="micro"
    )
    return RocResult(per_class=per_class, micro=micro, skipped=skipped)
