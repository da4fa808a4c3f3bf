"""Article-level news trust classification (native extension)."""

from ._newstrust import (
    ConfigError,
    Error,
    IoError,
    Model,
    ModelError,
    StratificationError,
    TrainingError,
    ValidationError,
    allocate,
    assess_source,
    balanced_sample,
    class_names,
    classify_article,
    clean_corpus,
    coarse_from_score,
    level_from_score,
    metrics,
    stratified_kfold,
    tokenize,
    train,
    trust_levels,
)

__all__ = [
    "ConfigError",
    "Error",
    "IoError",
    "Model",
    "ModelError",
    "StratificationError",
    "TrainingError",
    "ValidationError",
    "allocate",
    "assess_source",
    "balanced_sample",
    "class_names",
    "classify_article",
    "clean_corpus",
    "coarse_from_score",
    "level_from_score",
    "metrics",
    "stratified_kfold",
    "tokenize",
    "train",
    "trust_levels",
]

__version__ = "0.1.0"
