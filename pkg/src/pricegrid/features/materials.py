"""Material name categorization.

346 raw material strings in the source data collapse into 16 categories;
unknown names fall into Others so the mapping is total.
"""

from __future__ import annotations

import json
from importlib import resources

from ..errors import ConfigError

MATERIAL_CATEGORIES = (
    "ABS",
    "PLA",
    "SpecialtyABS",
    "SpecialtyPLA",
    "PET",
    "SpecialtyPET",
    "PC",
    "SpecialtyPC",
    "Nylon",
    "SpecialtyNylon",
    "Flexible",
    "ASA",
    "Metals",
    "Resins",
    "Soluble",
    "Others",
)


def normalize_name(name: str) -> str:
    return " ".join(name.strip().lower().split())


def load_material_table(path=None) -> dict:
    """name -> category map; keys normalized, categories validated."""
    if path is None:
        with resources.files("pricegrid.data").joinpath("materials.json").open("r") as fh:
            raw = json.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    table = {}
    for name, cat in raw.items():
        if cat not in MATERIAL_CATEGORIES:
            raise ConfigError(f"material table maps {name!r} to unknown category {cat!r}")
        table[normalize_name(name)] = cat
    return table


def categorize_material(name: str, table: dict) -> str:
    return table.get(normalize_name(name), "Others")
