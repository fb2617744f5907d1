"""Metrics for two-class intensity detection and count regression.

The positive class is +1 (heavy traffic), the negative class -1. Metrics
that have no defined value for a given input (AUC with a single class
present, precision with no positive predictions, correlation of a
constant series) are reported as ``None`` and named in the ``undefined``
field rather than silently coerced to zero; cross-validation means are
taken over the folds where a metric is defined.

AUC uses the midrank formulation, which handles tied scores exactly and
equals the count of correctly ordered pairs with ties worth one half.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, MetricUndefinedError, ShapeError

CLASSIFICATION_COLUMNS = ["Algorithm", "Accuracy", "AUC", "F1"]
REGRESSION_COLUMNS = ["Algorithm", "MAE", "WMAPE", "Correlation Coef."]

CLASSIFICATION_FIELDS = ("accuracy", "precision", "recall", "f1", "auc")
REGRESSION_FIELDS = ("mae", "wmape", "pearson")


def _check_labels(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1 or values.size == 0:
        raise ShapeError(f"{name} must be a nonempty 1-d array, got shape {values.shape}")
    if not np.all(np.isin(values, (-1, 1))):
        raise DataError(f"{name} must take values in {{-1, +1}}")
    return values.astype(int)


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve via midranks."""
    labels = _check_labels(labels, "labels")
    scores = np.asarray(scores, dtype=float)
    if scores.shape != labels.shape:
        raise ShapeError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("AUC needs both classes present")
    ranks = rankdata(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(labels: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ROC curve: (fpr, tpr, thresholds), thresholds descending.

    Classification at threshold t predicts positive when ``score >= t``.
    The first point is (0, 0) with an unreachable threshold above the
    maximum score.
    """
    labels = _check_labels(labels, "labels")
    scores = np.asarray(scores, dtype=float)
    if scores.shape != labels.shape:
        raise ShapeError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tps = np.cumsum(labels[order] == 1)
    fps = np.cumsum(labels[order] == -1)
    # keep the final cumulative point of each distinct score
    last = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    tpr = np.concatenate([[0.0], tps[last] / n_pos])
    fpr = np.concatenate([[0.0], fps[last] / n_neg])
    thresholds = np.concatenate([[np.inf], sorted_scores[last]])
    return fpr, tpr, thresholds


@dataclass
class ClassificationMetrics:
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in CLASSIFICATION_FIELDS}


def classification_metrics(
    labels: np.ndarray,
    predictions: np.ndarray,
    scores: np.ndarray | None = None,
) -> ClassificationMetrics:
    labels = _check_labels(labels, "labels")
    predictions = _check_labels(predictions, "predictions")
    if predictions.shape != labels.shape:
        raise ShapeError(
            f"predictions shape {predictions.shape} != labels shape {labels.shape}"
        )
    tp = int(np.count_nonzero((labels == 1) & (predictions == 1)))
    fp = int(np.count_nonzero((labels == -1) & (predictions == 1)))
    tn = int(np.count_nonzero((labels == -1) & (predictions == -1)))
    fn = int(np.count_nonzero((labels == 1) & (predictions == -1)))

    undefined: list[str] = []
    accuracy = (tp + tn) / labels.size
    precision = recall = f1 = None
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        undefined.append("recall")
    if precision is not None and recall is not None:
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            undefined.append("f1")
    else:
        undefined.append("f1")

    auc = None
    if scores is None:
        undefined.append("auc")
    else:
        try:
            auc = roc_auc(labels, scores)
        except MetricUndefinedError:
            undefined.append("auc")
    return ClassificationMetrics(
        accuracy=accuracy, precision=precision, recall=recall, f1=f1, auc=auc,
        tp=tp, fp=fp, tn=tn, fn=fn, undefined=tuple(undefined),
    )


@dataclass
class RegressionMetrics:
    mae: float
    wmape: float | None
    pearson: float | None
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in REGRESSION_FIELDS}


def regression_metrics(actual: np.ndarray, predicted: np.ndarray) -> RegressionMetrics:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.ndim != 1 or actual.size == 0:
        raise ShapeError(f"actual must be a nonempty 1-d array, got shape {actual.shape}")
    if predicted.shape != actual.shape:
        raise ShapeError(
            f"predicted shape {predicted.shape} != actual shape {actual.shape}"
        )
    undefined: list[str] = []
    mae = float(np.mean(np.abs(actual - predicted)))
    mean_actual = float(np.mean(actual))
    wmape = mae / mean_actual if mean_actual > 0 else None
    if wmape is None:
        undefined.append("wmape")

    pearson = None
    da = actual - actual.mean()
    dp = predicted - predicted.mean()
    na = float(np.sqrt(np.sum(da * da)))
    np_ = float(np.sqrt(np.sum(dp * dp)))
    if na > 0 and np_ > 0:
        pearson = float(np.sum(da * dp) / (na * np_))
    else:
        undefined.append("pearson")
    return RegressionMetrics(mae=mae, wmape=wmape, pearson=pearson,
                             undefined=tuple(undefined))


@dataclass
class MetricsReport:
    """Per-fold metrics with cross-validation means.

    ``means[name]`` averages the folds where the metric is defined and is
    ``None`` when no fold defines it; ``defined_counts[name]`` says how
    many folds contributed.
    """

    task: str  # "classify" | "regress"
    folds: list[ClassificationMetrics] | list[RegressionMetrics]
    means: dict[str, float | None] = field(default_factory=dict)
    defined_counts: dict[str, int] = field(default_factory=dict)

    @staticmethod
    def from_folds(task: str, folds: list) -> "MetricsReport":
        if task not in ("classify", "regress"):
            raise DataError(f"unknown task {task!r}")
        if not folds:
            raise DataError("cannot aggregate zero folds")
        names = CLASSIFICATION_FIELDS if task == "classify" else REGRESSION_FIELDS
        means: dict[str, float | None] = {}
        counts: dict[str, int] = {}
        for name in names:
            values = [f.as_dict()[name] for f in folds]
            defined = [v for v in values if v is not None]
            counts[name] = len(defined)
            means[name] = float(np.mean(defined)) if defined else None
        return MetricsReport(task=task, folds=folds, means=means, defined_counts=counts)


def format_metric(value: float | None) -> str:
    return "NA" if value is None else f"{value:.4f}"


def classification_row(name: str, report: MetricsReport) -> list[str]:
    return [name, format_metric(report.means["accuracy"]),
            format_metric(report.means["auc"]), format_metric(report.means["f1"])]


def regression_row(name: str, report: MetricsReport) -> list[str]:
    return [name, format_metric(report.means["mae"]),
            format_metric(report.means["wmape"]), format_metric(report.means["pearson"])]
