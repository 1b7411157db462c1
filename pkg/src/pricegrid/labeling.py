"""Price banding into 7 classes and the stratified train/test split.

Quartiles of the full price sample give the first three boundaries; the
top quarter is right-skewed enough that it is quartiled again, yielding
seven classes total. Class c covers [b_c, b_{c+1}) half-open, with the
last class closed at the maximum. Quantiles use linear interpolation
between order statistics.

The published US/EU boundaries ship as presets so labels can be assigned
reproducibly without the original corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateBinsError, StratificationError
from .fingerprint import fingerprint_obj

N_CLASSES = 7

FITTED = "FittedFromData"
FIXED = "FixedFromPaper"

# Published boundaries per region (USD).
PRESET_BOUNDARIES = {
    "US": (2.36, 15.1, 21.2, 36.2, 47.8, 64.4, 106.0, 1956.0),
    "EU": (3.75, 15.9, 21.5, 33.1, 40.1, 56.0, 87.2, 2261.5),
}


@dataclass(frozen=True)
class PriceBinning:
    boundaries: tuple  # 8 strictly ascending reals
    region: str
    source: str  # FITTED | FIXED

    def __post_init__(self):
        b = self.boundaries
        if len(b) != N_CLASSES + 1:
            raise DegenerateBinsError(f"need 8 boundaries, got {len(b)}")
        if any(not b[i] < b[i + 1] for i in range(N_CLASSES)):
            raise DegenerateBinsError(
                f"boundaries must be strictly ascending: {b}"
            )

    def class_range(self, c: int) -> tuple:
        return (self.boundaries[c], self.boundaries[c + 1])

    def to_json(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "region": self.region,
            "source": self.source,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PriceBinning":
        return cls(
            boundaries=tuple(float(x) for x in obj["boundaries"]),
            region=obj["region"],
            source=obj["source"],
        )

    def fingerprint(self) -> str:
        return fingerprint_obj(self.to_json())


def paper_binning(region: str) -> PriceBinning:
    return PriceBinning(PRESET_BOUNDARIES[region], region=region, source=FIXED)


def fit_bins(prices, region: str = "US") -> PriceBinning:
    """Recursive-quartile binning of a price sample.

    Quartiles of the whole sample give b1..b3; quartiles of the prices
    strictly above b3 give b4..b6; min/max close the ends.
    """
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size < 16:
        raise DegenerateBinsError(
            f"need at least 16 prices to fit 7 bins, got {prices.size}"
        )
    q1, q2, q3 = np.quantile(prices, [0.25, 0.5, 0.75])
    top = prices[prices > q3]
    if top.size < 4:
        raise DegenerateBinsError("top quartile too small to subdivide")
    q4, q5, q6 = np.quantile(top, [0.25, 0.5, 0.75])
    boundaries = (
        float(prices.min()), float(q1), float(q2), float(q3),
        float(q4), float(q5), float(q6), float(prices.max()),
    )
    return PriceBinning(boundaries, region=region, source=FITTED)


def assign_class(price: float, bins: PriceBinning, diagnostics=None) -> int:
    """Class index 0..6 under the half-open rule; out-of-range clamps."""
    b = bins.boundaries
    if price < b[0]:
        if diagnostics is not None:
            diagnostics.append(f"price {price} below {b[0]}; clamped to class 0")
        return 0
    if price > b[-1]:
        if diagnostics is not None:
            diagnostics.append(
                f"price {price} above {b[-1]}; clamped to class {N_CLASSES - 1}"
            )
        return N_CLASSES - 1
    c = int(np.searchsorted(b[1:-1], price, side="right"))
    return c


def assign_classes(prices, bins: PriceBinning, diagnostics=None) -> np.ndarray:
    return np.array(
        [assign_class(float(p), bins, diagnostics) for p in prices],
        dtype=np.int64,
    )


@dataclass
class DatasetSplit:
    """Stratified train/test partition of encoded rows.

    Indices refer to the feature matrix rows handed to stratified_split;
    dedup_removed counts test rows removed for duplicating a train row.
    """

    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    train_fraction: float
    dedup_removed: int = 0

    def to_json(self) -> dict:
        return {
            "train_idx": self.train_idx.tolist(),
            "test_idx": self.test_idx.tolist(),
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "dedup_removed": self.dedup_removed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetSplit":
        return cls(
            train_idx=np.asarray(obj["train_idx"], dtype=np.int64),
            test_idx=np.asarray(obj["test_idx"], dtype=np.int64),
            seed=int(obj["seed"]),
            train_fraction=float(obj["train_fraction"]),
            dedup_removed=int(obj["dedup_removed"]),
        )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(labels, train_fraction: float, seed: int) -> DatasetSplit:
    """Per class, round(fraction * n_c) rows to train (half rounds up).

    Shuffling is seeded per call; classes are processed in ascending label
    order so the result is deterministic.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_parts = []
    test_parts = []
    for c in np.unique(labels):
        rows = np.flatnonzero(labels == c)
        if rows.size < 2:
            raise StratificationError(
                f"class {c} has {rows.size} member(s); need at least 2"
            )
        perm = rng.permutation(rows.size)
        n_train = _round_half_up(train_fraction * rows.size)
        shuffled = rows[perm]
        train_parts.append(shuffled[:n_train])
        test_parts.append(shuffled[n_train:])
    return DatasetSplit(
        train_idx=np.sort(np.concatenate(train_parts)),
        test_idx=np.sort(np.concatenate(test_parts)),
        seed=seed,
        train_fraction=train_fraction,
    )


def dedup_test(split: DatasetSplit, X, labels) -> DatasetSplit:
    """Drop test rows exactly equal (encoded vector and class) to a train row.

    Train is left untouched: repeated observations inside train are real
    signal, they only mislead when the same observation straddles the
    split.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    train_keys = {
        (int(labels[i]), X[i].tobytes()) for i in split.train_idx
    }
    kept = [
        i for i in split.test_idx
        if (int(labels[i]), X[i].tobytes()) not in train_keys
    ]
    removed = split.test_idx.size - len(kept)
    return replace(
        split,
        test_idx=np.asarray(kept, dtype=np.int64),
        dedup_removed=split.dedup_removed + removed,
    )


def save_binning(path, bins: PriceBinning):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bins.to_json(), fh, separators=(",", ":"))


def load_binning(path) -> PriceBinning:
    with open(path, "r", encoding="utf-8") as fh:
        return PriceBinning.from_json(json.load(fh))
