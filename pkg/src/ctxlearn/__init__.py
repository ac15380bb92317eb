"""Classification with context-sensitive features.

Feature-role detection, contextual normalization, expansion, weighting and
classifier selection, with 1-NN and linear-regression classifiers.
"""

from ctxlearn.core import Dataset, FeatureRole, FeatureSchema, Observation, project, split_by, validate

__all__ = [
    "Dataset",
    "FeatureRole",
    "FeatureSchema",
    "Observation",
    "project",
    "split_by",
    "validate",
]

__version__ = "0.1.0"
