"""Approximate sparsity-pattern recovery: bounds, estimators and Monte Carlo checks."""

from . import bounds, estimators, mathkit, sampling, sources

__version__ = "0.1.0"
__all__ = ["bounds", "estimators", "mathkit", "sampling", "sources", "__version__"]
