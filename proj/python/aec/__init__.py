"""Feature-based error characterization for text classifiers."""

from ._aec import (
    AecError,
    ConfigError,
    FormatError,
    ValidationError,
    extract_features,
    gini_impurity,
    parse_conllu,
    precision_at_k,
    report,
    run,
    synth,
    uncertainty_score,
)

__all__ = [
    "AecError",
    "ConfigError",
    "FormatError",
    "ValidationError",
    "extract_features",
    "gini_impurity",
    "parse_conllu",
    "precision_at_k",
    "report",
    "run",
    "synth",
    "uncertainty_score",
]
