"""JSON persistence for trained models.

The file carries the full support-vector expansion of every pair model
(and the one-vs-rest ensemble when present) plus the fingerprints of the
feature schema and price binning it was trained under. Loading refuses a
schema fingerprint mismatch so a model can never be applied to vectors
encoded differently.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import FingerprintMismatchError
from .multiclass import MulticlassSvm, OvrEnsemble, TrainConfig
from .smo import BinarySvm

FORMAT = "pricegrid-model/1"


def _binary_to_json(m: BinarySvm) -> dict:
    d = m.diag
    return {
        "pos_label": m.pos_label,
        "neg_label": m.neg_label,
        "bias": m.bias,
        "coeffs": m.coeffs.tolist(),
        "support_vectors": m.support_vectors.tolist(),
        "iters": None if d is None else d.iters,
        "violation": None if d is None else d.violation,
        "converged": None if d is None else d.converged,
    }


def _binary_from_json(obj: dict, kernel) -> BinarySvm:
    return BinarySvm(
        support_vectors=np.asarray(obj["support_vectors"], dtype=np.float64).reshape(
            len(obj["coeffs"]), -1
        )
        if obj["coeffs"]
        else np.zeros((0, 0)),
        coeffs=np.asarray(obj["coeffs"], dtype=np.float64),
        bias=float(obj["bias"]),
        kernel=kernel,
        pos_label=int(obj["pos_label"]),
        neg_label=int(obj["neg_label"]),
    )


def model_to_json(model: MulticlassSvm, ovr: OvrEnsemble | None = None) -> dict:
    return {
        "format": FORMAT,
        "config": model.config.to_json(),
        "classes": model.classes,
        "schema_fingerprint": model.schema_fingerprint,
        "binning_fingerprint": model.binning_fingerprint,
        "skipped_pairs": [list(p) for p in model.skipped_pairs],
        "pairs": [_binary_to_json(m) for m in model.pair_models],
        "ovr": None if ovr is None else [_binary_to_json(m) for m in ovr.models],
    }


def model_from_json(obj: dict, expect_schema_fingerprint: str | None = None):
    """Returns (MulticlassSvm, OvrEnsemble | None)."""
    if obj.get("format") != FORMAT:
        raise ValueError(f"not a pricegrid model file: format={obj.get('format')!r}")
    if (
        expect_schema_fingerprint is not None
        and obj.get("schema_fingerprint") != expect_schema_fingerprint
    ):
        raise FingerprintMismatchError(
            "schema", expect_schema_fingerprint, obj.get("schema_fingerprint")
        )
    config = TrainConfig.from_json(obj["config"])
    model = MulticlassSvm(
        classes=[int(c) for c in obj["classes"]],
        pair_models=[_binary_from_json(p, config.kernel) for p in obj["pairs"]],
        config=config,
        schema_fingerprint=obj.get("schema_fingerprint"),
        binning_fingerprint=obj.get("binning_fingerprint"),
        skipped_pairs=[tuple(p) for p in obj.get("skipped_pairs", [])],
    )
    ovr = None
    if obj.get("ovr"):
        ovr = OvrEnsemble(
            classes=model.classes,
            models=[_binary_from_json(p, config.kernel) for p in obj["ovr"]],
            config=config,
        )
    return model, ovr


def save_model(path, model: MulticlassSvm, ovr: OvrEnsemble | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model, ovr), fh, separators=(",", ":"))


def load_model(path, expect_schema_fingerprint: str | None = None):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh), expect_schema_fingerprint)
