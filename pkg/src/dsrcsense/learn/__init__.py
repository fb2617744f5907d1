"""Learners, cross-validation and grid search built on numpy.

The public surface is the model registry in :mod:`dsrcsense.learn.models`
(:func:`fit_model`, :class:`ModelSpec`) and the evaluation helpers in
:mod:`dsrcsense.learn.validation`.
"""

from .models import FittedModel, ModelSpec, fit_model, load_model, save_model, spec_with
from .validation import (
    CrossValidationResult,
    GridSearchResult,
    cross_validate,
    grid_search,
    regression_bins,
    stratified_kfold,
)

__all__ = [
    "FittedModel",
    "ModelSpec",
    "fit_model",
    "save_model",
    "load_model",
    "spec_with",
    "CrossValidationResult",
    "GridSearchResult",
    "cross_validate",
    "grid_search",
    "regression_bins",
    "stratified_kfold",
]
