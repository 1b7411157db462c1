"""Feature schema fitting and listing encoding.

The schema fixes an ordered list of feature descriptors: standardized
numerics first (including the five description keyword counts), then
one-hot blocks for the categoricals. Standardization stats come from the
corpus the schema was fitted on; encoding any listing of that corpus
yields numerics with mean 0 and population stddev 1.

A missing average rating encodes as 0 with the has_reviews indicator off;
no fake rating is imputed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import CorpusError
from ..fingerprint import fingerprint_obj
from .geo import GeoModel, kmeans_assign
from .keywords import KEYWORD_CATEGORIES, KeywordDictionary, description_vector
from .materials import MATERIAL_CATEGORIES, categorize_material
from .printers import PROCESSES, lookup_printer

NUMERIC_FEATURES = (
    "avg_rating",
    "num_reviews",
    "days_since_activation",
    "avg_response_time",
    "order_completion_days",
    "num_machines",
    "printer_cost",
    "num_sample_images",
    "resolution",
    "desc_design_services",
    "desc_logistics",
    "desc_specialties",
    "desc_experience",
    "desc_additional_services",
)

BOOL_LEVELS = ("false", "true")


@dataclass(frozen=True)
class Descriptor:
    name: str
    kind: str  # "numeric" | "onehot"
    mean: float | None = None
    std: float | None = None
    levels: tuple | None = None

    @property
    def width(self) -> int:
        return 1 if self.kind == "numeric" else len(self.levels)


@dataclass
class FeatureSchema:
    descriptors: list

    @property
    def arity(self) -> int:
        return sum(d.width for d in self.descriptors)

    def feature_names(self) -> list:
        names = []
        for d in self.descriptors:
            if d.kind == "numeric":
                names.append(d.name)
            else:
                names.extend(f"{d.name}={lv}" for lv in d.levels)
        return names

    def to_json(self) -> dict:
        out = []
        for d in self.descriptors:
            if d.kind == "numeric":
                out.append(
                    {"name": d.name, "kind": d.kind, "mean": d.mean, "std": d.std}
                )
            else:
                out.append({"name": d.name, "kind": d.kind, "levels": list(d.levels)})
        return {"descriptors": out}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        descs = []
        for d in obj["descriptors"]:
            if d["kind"] == "numeric":
                descs.append(
                    Descriptor(d["name"], "numeric", mean=d["mean"], std=d["std"])
                )
            else:
                descs.append(
                    Descriptor(d["name"], "onehot", levels=tuple(d["levels"]))
                )
        return cls(descs)

    def fingerprint(self) -> str:
        return fingerprint_obj(self.to_json())


def derive_values(listing, geo: GeoModel, printer_table, material_table,
                  keywords: KeywordDictionary) -> dict:
    """Raw numeric values and categorical levels for one listing.

    Printer lookup failures propagate; everything else is total.
    """
    info = lookup_printer(listing.printer_model, printer_table)
    counts = description_vector(listing.description_text, keywords)
    values = {
        "avg_rating": 0.0 if listing.avg_rating is None else float(listing.avg_rating),
        "num_reviews": float(listing.num_reviews),
        "days_since_activation": float(listing.days_since_activation),
        "avg_response_time": float(listing.avg_response_time),
        "order_completion_days": float(listing.order_completion_days),
        "num_machines": float(listing.num_machines),
        "printer_cost": float(info.cost),
        "num_sample_images": float(listing.num_sample_images),
        "resolution": float(listing.resolution),
    }
    for cat, cnt in zip(KEYWORD_CATEGORIES, counts):
        key = "desc_" + "".join(
            "_" + ch.lower() if ch.isupper() else ch for ch in cat
        ).lstrip("_")
        values[key] = float(cnt)
    values["registered_business"] = BOOL_LEVELS[int(listing.registered_business)]
    values["has_reviews"] = BOOL_LEVELS[int(listing.num_reviews > 0)]
    values["geo_cluster"] = str(
        kmeans_assign((listing.latitude, listing.longitude), geo)
    )
    values["process"] = info.process
    values["material_category"] = categorize_material(
        listing.material_name, material_table
    )
    return values


def fit_schema(listings, geo: GeoModel, printer_table, material_table,
               keywords: KeywordDictionary, diagnostics=None) -> FeatureSchema:
    """Fit the schema (numeric stats + categorical level lists) on a corpus.

    Constant numeric columns are dropped with a diagnostic since they
    cannot be standardized. One-hot level lists are the full enumerations
    (all 16 material categories, all 4 processes, 0..K-1 clusters), not
    just the observed levels, so encoding stays stable across corpora.
    """
    if not listings:
        raise CorpusError("cannot fit a schema on an empty corpus")
    rows = [
        derive_values(l, geo, printer_table, material_table, keywords)
        for l in listings
    ]
    descriptors = []
    for name in NUMERIC_FEATURES:
        col = np.array([r[name] for r in rows], dtype=np.float64)
        mean = float(col.mean())
        std = float(col.std())
        if std == 0.0:
            if diagnostics is not None:
                diagnostics.append(f"numeric feature {name!r} is constant; dropped")
            continue
        descriptors.append(Descriptor(name, "numeric", mean=mean, std=std))
    descriptors.append(
        Descriptor("registered_business", "onehot", levels=BOOL_LEVELS)
    )
    descriptors.append(Descriptor("has_reviews", "onehot", levels=BOOL_LEVELS))
    descriptors.append(
        Descriptor(
            "geo_cluster", "onehot", levels=tuple(str(i) for i in range(geo.k))
        )
    )
    descriptors.append(Descriptor("process", "onehot", levels=PROCESSES))
    descriptors.append(
        Descriptor("material_category", "onehot", levels=MATERIAL_CATEGORIES)
    )
    return FeatureSchema(descriptors)


def encode(listing, schema: FeatureSchema, geo: GeoModel, printer_table,
           material_table, keywords: KeywordDictionary,
           diagnostics=None) -> np.ndarray:
    """Encode one listing against a fitted schema.

    Numerics are standardized with the schema's stats; categoricals become
    one-hot blocks. A level unknown to the schema encodes as an all-zero
    block with a diagnostic.
    """
    values = derive_values(listing, geo, printer_table, material_table, keywords)
    out = np.empty(schema.arity)
    pos = 0
    for d in schema.descriptors:
        if d.kind == "numeric":
            out[pos] = (values[d.name] - d.mean) / d.std
            pos += 1
        else:
            block = np.zeros(len(d.levels))
            level = values[d.name]
            try:
                block[d.levels.index(level)] = 1.0
            except ValueError:
                if diagnostics is not None:
                    diagnostics.append(
                        f"listing {listing.listing_id}: unknown level {level!r} "
                        f"for {d.name!r}; encoded as all-zero block"
                    )
            out[pos : pos + len(d.levels)] = block
            pos += len(d.levels)
    return out


def encode_corpus(listings, schema: FeatureSchema, geo: GeoModel,
                  printer_table, material_table, keywords: KeywordDictionary,
                  diagnostics=None):
    """(matrix, listing_ids) for a whole corpus."""
    X = np.empty((len(listings), schema.arity))
    ids = []
    for i, lst in enumerate(listings):
        X[i] = encode(
            lst, schema, geo, printer_table, material_table, keywords,
            diagnostics=diagnostics,
        )
        ids.append(lst.listing_id)
    return X, ids


def save_schema(path, schema: FeatureSchema):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_json(), fh, separators=(",", ":"))


def load_schema(path) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return FeatureSchema.from_json(json.load(fh))
