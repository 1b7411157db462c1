from .correlation import CorrelationReport, correlation_matrix, prune_correlated
from .geo import (
    DEFAULT_K,
    GeoModel,
    kmeans_assign,
    kmeans_fit,
    load_geo,
    save_geo,
)
from .keywords import (
    KEYWORD_CATEGORIES,
    KeywordDictionary,
    description_vector,
    load_keywords,
)
from .materials import MATERIAL_CATEGORIES, categorize_material, load_material_table
from .printers import (
    PROCESSES,
    PrinterInfo,
    load_printer_table,
    lookup_printer,
)
from .schema import (
    NUMERIC_FEATURES,
    Descriptor,
    FeatureSchema,
    derive_values,
    encode,
    encode_corpus,
    fit_schema,
    load_schema,
    save_schema,
)

__all__ = [
    "CorrelationReport",
    "DEFAULT_K",
    "Descriptor",
    "FeatureSchema",
    "GeoModel",
    "KEYWORD_CATEGORIES",
    "KeywordDictionary",
    "MATERIAL_CATEGORIES",
    "NUMERIC_FEATURES",
    "PROCESSES",
    "PrinterInfo",
    "categorize_material",
    "correlation_matrix",
    "derive_values",
    "description_vector",
    "encode",
    "encode_corpus",
    "fit_schema",
    "kmeans_assign",
    "kmeans_fit",
    "load_geo",
    "load_keywords",
    "load_material_table",
    "load_printer_table",
    "load_schema",
    "lookup_printer",
    "prune_correlated",
    "save_geo",
    "save_schema",
]
