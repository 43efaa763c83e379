"""Calibration of published claim networks against experimental outcomes.

The package ingests a corpus of directed gene-interaction claims, partitions
the experimentally measured interactions into negative/neutral/positive
classes with a discontinuity-seeking threshold optimizer, derives network,
temporal and bibliometric features, trains small interpretable classifiers,
and evaluates them under leakage-safe grouped resampling.
"""

__version__ = "0.1.0"

from .corpus import (
    ClaimCorpus,
    ClaimRecord,
    CorpusError,
    InteractionKey,
    InteractionRecord,
    PublicationMeta,
    load_corpus,
    load_strengths,
)
from .partition import (
    BetaPosterior,
    ClassLabel,
    Thresholds,
    optimize_thresholds,
    partition_classes,
    percentile_thresholds,
    wasserstein_beta,
)

__all__ = [
    "ClaimCorpus",
    "ClaimRecord",
    "CorpusError",
    "InteractionKey",
    "InteractionRecord",
    "PublicationMeta",
    "load_corpus",
    "load_strengths",
    "BetaPosterior",
    "ClassLabel",
    "Thresholds",
    "optimize_thresholds",
    "partition_classes",
    "percentile_thresholds",
    "wasserstein_beta",
]
