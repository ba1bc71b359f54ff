"""Preposition sense disambiguation on word-vector geometry.

Feature extraction (context means plus an interplay eigenvector),
unsupervised clustering, supervised k-NN, corpus sense tagging, CBOW
retraining with reduced windows around tagged tokens, and relation /
paraphrase evaluations.
"""

__version__ = "0.1.0"

from .embeddings import EmbeddingTable, cosine, load_table, nearest, save_table
from .features import (
    ContextWindow,
    FeatureTriple,
    PrepInstance,
    concat_features,
    extract_window,
    feature_triple,
    interplay_feature,
    mean_feature,
)

__all__ = [
    "EmbeddingTable",
    "cosine",
    "load_table",
    "nearest",
    "save_table",
    "ContextWindow",
    "FeatureTriple",
    "PrepInstance",
    "concat_features",
    "extract_window",
    "feature_triple",
    "interplay_feature",
    "mean_feature",
    "__version__",
]
