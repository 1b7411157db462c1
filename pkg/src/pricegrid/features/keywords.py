"""Supplier description keyword counts.

Descriptions are scored as five non-negative counts, one per keyword
category. Matching is case-insensitive on word boundaries and multi-word
keywords match as whole phrases.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import ConfigError

KEYWORD_CATEGORIES = (
    "DesignServices",
    "Logistics",
    "Specialties",
    "Experience",
    "AdditionalServices",
)


def _phrase_pattern(phrase: str) -> re.Pattern:
    words = [re.escape(w) for w in phrase.split()]
    return re.compile(r"\b" + r"\s+".join(words) + r"\b")


@dataclass
class KeywordDictionary:
    categories: dict  # category name -> tuple of normalized phrases
    _patterns: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen = {}
        for cat in KEYWORD_CATEGORIES:
            if cat not in self.categories:
                raise ConfigError(f"keyword dictionary missing category {cat!r}")
        norm = {}
        for cat, phrases in self.categories.items():
            if cat not in KEYWORD_CATEGORIES:
                raise ConfigError(f"unknown keyword category {cat!r}")
            cleaned = tuple(" ".join(p.lower().split()) for p in phrases)
            for p in cleaned:
                if p in seen:
                    raise ConfigError(
                        f"keyword {p!r} appears in both {seen[p]!r} and {cat!r}"
                    )
                seen[p] = cat
            norm[cat] = cleaned
        self.categories = norm
        self._patterns = {
            cat: tuple(_phrase_pattern(p) for p in phrases)
            for cat, phrases in norm.items()
        }


def load_keywords(path=None) -> KeywordDictionary:
    if path is None:
        with resources.files("pricegrid.data").joinpath("keywords.json").open("r") as fh:
            raw = json.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    return KeywordDictionary(categories={k: tuple(v) for k, v in raw.items()})


def description_vector(text: str, kd: KeywordDictionary) -> np.ndarray:
    """Per-category totals of keyword occurrences; empty text -> zeros."""
    counts = np.zeros(len(KEYWORD_CATEGORIES), dtype=np.int64)
    if not text:
        return counts
    lowered = text.lower()
    for i, cat in enumerate(KEYWORD_CATEGORIES):
        total = 0
        for pat in kd._patterns[cat]:
            total += len(pat.findall(lowered))
        counts[i] = total
    return counts
