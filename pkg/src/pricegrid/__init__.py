"""Price-band prediction for 3D-printing service listings.

Pipeline: ingest or synthesize listing corpora, encode features (material
and printer categorization, k-means location clusters, description keyword
counts), bin prices into 7 quantile classes, train a class-weighted
one-vs-one kernel SVM by SMO, and evaluate with grid search,
cross-validation, learning curves, and ROC/AUC.
"""

from ._accel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
