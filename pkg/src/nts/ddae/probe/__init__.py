"""
Representation evaluation.

Classes:
    - FeatureTable, GridCell, GridReport, EncoderClassifier

Functions:
    - extract_features, extract_pixel_features: Pooled features of a labelled set.
    - train_linear_probe, init_linear_head, fit_linear_head, head_accuracy, split_table
    - grid_search, probe_cell, select_best, split_images
    - finetune, train_from_scratch, classifier_accuracy
    - pixel_probe, random_init_probe: Baselines.
"""

from .features import FeatureTable, extract_features, extract_pixel_features
from .linear import (
    fit_linear_head,
    head_accuracy,
    init_linear_head,
    split_table,
    train_linear_probe,
)
from .grid import GridCell, GridReport, grid_search, probe_cell, select_best, split_images
from .finetune import EncoderClassifier, classifier_accuracy, finetune, train_from_scratch
from .baselines import pixel_probe, random_init_probe

__all__ = [
    "FeatureTable",
    "extract_features",
    "extract_pixel_features",
    "fit_linear_head",
    "head_accuracy",
    "init_linear_head",
    "split_table",
    "train_linear_probe",
    "GridCell",
    "GridReport",
    "grid_search",
    "probe_cell",
    "select_best",
    "split_images",
    "EncoderClassifier",
    "classifier_accuracy",
    "finetune",
    "train_from_scratch",
    "pixel_probe",
    "random_init_probe",
]
