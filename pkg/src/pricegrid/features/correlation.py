"""Correlation analysis and redundancy pruning of numeric columns.

Spearman (Pearson on average ranks) is the default since the interest is
any monotonic relationship, not just linear; Pearson is available by
flag. Pruning keeps, within every over-threshold group, the member that
comes first in the keep-priority order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CorpusError

METHODS = ("spearman", "pearson")


@dataclass
class CorrelationReport:
    method: str
    names: list
    matrix: np.ndarray  # symmetric, unit diagonal
    excluded_constant: list = field(default_factory=list)
    dropped: list = field(default_factory=list)
    threshold: float | None = None

    def value(self, a: str, b: str) -> float:
        return float(self.matrix[self.names.index(a), self.names.index(b)])

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "names": self.names,
            "matrix": self.matrix.tolist(),
            "excluded_constant": self.excluded_constant,
            "dropped": self.dropped,
            "threshold": self.threshold,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0])
    sorted_vals = values[order]
    i = 0
    n = values.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def correlation_matrix(columns: dict, method: str = "spearman") -> CorrelationReport:
    """Correlation over named columns of equal length (>= 2 rows).

    Constant columns are excluded with a note rather than producing NaNs.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if not columns:
        raise CorpusError("no columns given")
    names = list(columns)
    length = len(np.asarray(columns[names[0]]))
    if length < 2:
        raise CorpusError("need at least 2 rows for correlation")
    excluded = []
    kept = []
    data = []
    for name in names:
        col = np.asarray(columns[name], dtype=np.float64)
        if col.shape[0] != length:
            raise ValueError(f"column {name!r} has mismatched length")
        if np.all(col == col[0]):
            excluded.append(name)
            continue
        kept.append(name)
        data.append(_average_ranks(col) if method == "spearman" else col)
    if len(kept) == 0:
        raise CorpusError("all columns constant")
    mat = np.corrcoef(np.vstack(data))
    mat = np.atleast_2d(mat)
    # enforce exact symmetry and unit diagonal against rounding
    mat = (mat + mat.T) / 2.0
    np.fill_diagonal(mat, 1.0)
    return CorrelationReport(
        method=method, names=kept, matrix=mat, excluded_constant=excluded
    )


def prune_correlated(report: CorrelationReport, threshold: float,
                     keep_priority=()) -> list:
    """Greedy keep-list: walk features in priority order, keep one unless
    it correlates above threshold with something already kept.

    Features not named in keep_priority are visited after the named ones,
    in name order, so the result does not depend on input column order.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    order = [n for n in keep_priority if n in report.names]
    order += sorted(n for n in report.names if n not in keep_priority)
    kept = []
    for name in order:
        i = report.names.index(name)
        redundant = any(
            abs(report.matrix[i, report.names.index(k)]) > threshold for k in kept
        )
        if not redundant:
            kept.append(name)
    return kept
