"""Relevance-ranking benchmark engine.

Ingests prompt + four-candidate instances, trains rank classifiers under
one-hot and thermometer label encodings, runs a cosine-similarity threshold
baseline, and reports Kendall's Tau, per-class F1, and bootstrap standard
errors.
"""

__version__ = "0.1.0"

from relevbench.corpus import (
    CandidatePaper,
    Instance,
    PairRecord,
    SplitSpec,
    expand_pairs,
    parse_instances,
    split_instances,
    subsample,
)
from relevbench.embedder import EmbeddingStore, builtin_vectorize, cosine
from relevbench.metrics import bootstrap, f1_per_class, kendall_tau

__all__ = [
    "CandidatePaper",
    "Instance",
    "PairRecord",
    "SplitSpec",
    "EmbeddingStore",
    "builtin_vectorize",
    "cosine",
    "expand_pairs",
    "parse_instances",
    "split_instances",
    "subsample",
    "bootstrap",
    "f1_per_class",
    "kendall_tau",
]
