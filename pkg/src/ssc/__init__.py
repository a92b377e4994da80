"""Imbalanced short-text classification: corpora, features, CNN ensembles,
classical baselines, and evaluation utilities."""

__version__ = "0.1.0"
