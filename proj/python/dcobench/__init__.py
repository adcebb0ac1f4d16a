from ._dcobench import (
    ConfigError,
    HnswSearcher,
    knn,
    recall,
    strategy_names,
    synthetic_gaussian,
)

__all__ = [
    "ConfigError",
    "HnswSearcher",
    "knn",
    "recall",
    "strategy_names",
    "synthetic_gaussian",
]
