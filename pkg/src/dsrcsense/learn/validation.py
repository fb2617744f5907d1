"""Stratified k-fold cross-validation and grid search.

Classification stratifies on the labels directly. Regression stratifies
on rank-based count quantile bins so each fold sees the full dynamic
range. Fold assignment gives every class its floor quota per fold and
hands remainders to the currently smallest folds, which keeps fold sizes
within one of each other and per-fold class counts within one of exact
proportionality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .. import metrics
from ..errors import ParameterError, ShapeError, StratificationError
from ..seeding import derive_seed, keyed_map
from .models import FittedModel, ModelSpec, fit_model, spec_with

DEFAULT_REGRESSION_BINS = 10


def stratified_kfold(strata: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Assign each sample a fold id in [0, k) stratified on ``strata``."""
    strata = np.asarray(strata)
    if strata.ndim != 1 or strata.size == 0:
        raise ShapeError(f"strata must be a nonempty 1-d array, got {strata.shape}")
    n = strata.size
    if k < 2:
        raise StratificationError(f"need at least 2 folds, got {k}")
    if k > n:
        raise StratificationError(f"cannot split {n} samples into {k} folds")

    rng = np.random.default_rng(seed)
    fold_id = np.empty(n, dtype=int)
    fold_sizes = np.zeros(k, dtype=int)
    for cls in np.unique(strata):
        members = np.nonzero(strata == cls)[0]
        members = members[rng.permutation(members.size)]
        base, extra = divmod(members.size, k)
        counts = np.full(k, base, dtype=int)
        for _ in range(extra):
            counts[int(np.argmin(fold_sizes + counts))] += 1
        stops = np.cumsum(counts)
        starts = stops - counts
        for f in range(k):
            fold_id[members[starts[f]:stops[f]]] = f
        fold_sizes += counts
    return fold_id


def regression_bins(values: np.ndarray, n_bins: int = DEFAULT_REGRESSION_BINS) -> np.ndarray:
    """Rank-based quantile bins used as regression strata."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ShapeError(f"values must be a nonempty 1-d array, got {values.shape}")
    if n_bins < 1:
        raise ParameterError(f"n_bins must be >= 1, got {n_bins}")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=int)
    ranks[order] = np.arange(values.size)
    return ranks * min(n_bins, values.size) // values.size


@dataclass
class CrossValidationResult:
    report: metrics.MetricsReport
    fold_id: np.ndarray
    actual: np.ndarray  # targets in sample order
    oof_prediction: np.ndarray  # out-of-fold label / count per sample
    oof_score: np.ndarray  # out-of-fold continuous score per sample


def cross_validate(
    spec: ModelSpec,
    x: np.ndarray,
    y: np.ndarray,
    k: int,
    seed: int = 0,
    workers: int = 1,
) -> CrossValidationResult:
    """k-fold cross-validation; every sample is scored exactly once."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeError(f"incompatible shapes x {x.shape}, y {y.shape}")
    classify = spec.task == "classify"
    strata = y if classify else regression_bins(y)
    fold_id = stratified_kfold(strata, k, derive_seed(seed, "folds"))

    def run_fold(f: int):
        test = fold_id == f
        model = fit_model(spec, x[~test], y[~test], derive_seed(seed, "fit", f))
        scores = model.score(x[test])
        preds = np.where(scores >= 0.5, 1, -1) if classify else scores
        if classify:
            fold = metrics.classification_metrics(y[test].astype(int), preds, scores)
        else:
            fold = metrics.regression_metrics(y[test], preds)
        return fold, test, preds, scores

    outcomes = keyed_map(run_fold, range(k), workers)
    oof_pred = np.empty(y.size)
    oof_score = np.empty(y.size)
    folds = []
    for fold, test, preds, scores in outcomes:
        folds.append(fold)
        oof_pred[test] = preds
        oof_score[test] = scores
    report = metrics.MetricsReport.from_folds("classify" if classify else "regress", folds)
    return CrossValidationResult(report=report, fold_id=fold_id, actual=y,
                                 oof_prediction=oof_pred, oof_score=oof_score)


@dataclass
class GridSearchResult:
    best_spec: ModelSpec
    best_score: float
    entries: list[tuple[ModelSpec, float]]  # in enumeration order


def grid_search(
    base_spec: ModelSpec,
    grid: dict[str, list],
    x: np.ndarray,
    y: np.ndarray,
    k: int,
    seed: int = 0,
    workers: int = 1,
) -> GridSearchResult:
    """Exhaustive search over the hyperparameter grid by k-fold score.

    Classification selects the highest mean accuracy, regression the
    lowest mean MAE. All combinations share the same fold assignment;
    ties keep the first combination in enumeration order (the product of
    grid values in their given order).
    """
    names = list(grid.keys())
    for name in names:
        if not grid[name]:
            raise ParameterError(f"grid entry {name!r} is empty")
    combos = [dict(zip(names, values))
              for values in itertools.product(*(grid[n] for n in names))]
    if not combos:
        combos = [{}]

    classify = base_spec.task == "classify"
    entries: list[tuple[ModelSpec, float]] = []
    best_idx = -1
    best_value = -np.inf
    for i, combo in enumerate(combos):
        spec = spec_with(base_spec, **combo)
        result = cross_validate(spec, x, y, k, seed=seed, workers=workers)
        score = result.report.means["accuracy" if classify else "mae"]
        entries.append((spec, float(score)))
        value = score if classify else -score
        if value > best_value:
            best_value = value
            best_idx = i
    return GridSearchResult(best_spec=entries[best_idx][0],
                            best_score=entries[best_idx][1], entries=entries)
