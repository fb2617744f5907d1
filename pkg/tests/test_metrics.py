import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dsrcsense.errors import DataError, MetricUndefinedError, ShapeError
from dsrcsense.metrics import (
    CLASSIFICATION_COLUMNS,
    REGRESSION_COLUMNS,
    MetricsReport,
    classification_metrics,
    classification_row,
    format_metric,
    regression_metrics,
    regression_row,
    roc_auc,
    roc_points,
)


def auc_by_pair_counting(labels, scores):
    """Reference AUC: ordered positive/negative pairs, ties worth 1/2."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    pos = scores[labels == 1]
    neg = scores[labels == -1]
    credit = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
    return credit / (pos.size * neg.size)


class TestRocAuc:
    def test_matches_pair_counting_with_ties(self, rng):
        labels = rng.choice([-1, 1], size=40)
        labels[:2] = [1, -1]
        scores = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=40)
        assert roc_auc(labels, scores) == auc_by_pair_counting(labels, scores)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([-1, 1]),
                              st.sampled_from([0.0, 0.1, 0.5, 0.9, 1.0])),
                    min_size=2, max_size=25))
    def test_pair_counting_property(self, pairs):
        labels = np.array([p[0] for p in pairs])
        scores = np.array([p[1] for p in pairs])
        assume(np.any(labels == 1) and np.any(labels == -1))
        assert roc_auc(labels, scores) == auc_by_pair_counting(labels, scores)

    def test_perfect_and_inverted_ranking(self):
        labels = np.array([1, 1, -1, -1])
        assert roc_auc(labels, np.array([0.9, 0.8, 0.2, 0.1])) == 1.0
        assert roc_auc(labels, np.array([0.1, 0.2, 0.8, 0.9])) == 0.0

    def test_constant_scores_give_half(self):
        labels = np.array([1, -1, 1, -1, -1])
        assert roc_auc(labels, np.zeros(5)) == 0.5

    def test_single_class_undefined(self):
        with pytest.raises(MetricUndefinedError):
            roc_auc(np.ones(4, dtype=int), np.arange(4.0))

    def test_validation(self):
        with pytest.raises(DataError):
            roc_auc(np.array([0, 1]), np.array([0.1, 0.2]))
        with pytest.raises(ShapeError):
            roc_auc(np.array([1, -1]), np.array([0.1, 0.2, 0.3]))


class TestRocPoints:
    def test_hand_worked_curve(self):
        labels = np.array([1, -1, 1, -1])
        scores = np.array([0.9, 0.8, 0.7, 0.1])
        fpr, tpr, thresholds = roc_points(labels, scores)
        np.testing.assert_allclose(fpr, [0.0, 0.0, 0.5, 0.5, 1.0])
        np.testing.assert_allclose(tpr, [0.0, 0.5, 0.5, 1.0, 1.0])
        assert thresholds[0] == np.inf
        np.testing.assert_allclose(thresholds[1:], [0.9, 0.8, 0.7, 0.1])

    def test_tied_scores_merge_into_one_point(self):
        labels = np.array([1, -1, 1, -1])
        scores = np.array([0.5, 0.5, 0.5, 0.1])
        fpr, tpr, thresholds = roc_points(labels, scores)
        assert thresholds.size == 3  # inf, 0.5, 0.1
        np.testing.assert_allclose(fpr, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(tpr, [0.0, 1.0, 1.0])

    def test_curve_properties_and_area(self, rng):
        labels = rng.choice([-1, 1], size=60)
        labels[:2] = [1, -1]
        scores = rng.choice(np.linspace(0, 1, 7), size=60)
        fpr, tpr, thresholds = roc_points(labels, scores)
        assert fpr[0] == tpr[0] == 0.0
        assert fpr[-1] == tpr[-1] == 1.0
        assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
        assert np.all(np.diff(thresholds) < 0)
        area = np.trapezoid(tpr, fpr)
        assert area == pytest.approx(roc_auc(labels, scores), abs=1e-12)

    def test_single_class_undefined(self):
        with pytest.raises(MetricUndefinedError):
            roc_points(-np.ones(3, dtype=int), np.arange(3.0))


class TestClassificationMetrics:
    def test_hand_worked_confusion_matrix(self):
        labels = np.array([1, 1, 1, -1, -1])
        preds = np.array([1, -1, 1, 1, -1])
        m = classification_metrics(labels, preds)
        assert (m.tp, m.fp, m.tn, m.fn) == (2, 1, 1, 1)
        assert m.accuracy == pytest.approx(3 / 5)
        assert m.precision == pytest.approx(2 / 3)
        assert m.recall == pytest.approx(2 / 3)
        assert m.f1 == pytest.approx(2 / 3)
        assert m.auc is None and "auc" in m.undefined

    def test_scores_feed_auc(self):
        labels = np.array([1, -1, 1, -1])
        preds = np.array([1, -1, 1, -1])
        scores = np.array([0.9, 0.2, 0.8, 0.4])
        m = classification_metrics(labels, preds, scores)
        assert m.auc == 1.0
        assert m.undefined == ()

    def test_no_positive_predictions(self):
        labels = np.array([1, -1])
        preds = np.array([-1, -1])
        m = classification_metrics(labels, preds)
        assert m.precision is None
        assert m.recall == 0.0
        assert m.f1 is None
        assert "precision" in m.undefined and "f1" in m.undefined

    def test_zero_precision_and_recall_leave_f1_undefined(self):
        labels = np.array([1, -1])
        preds = np.array([-1, 1])
        m = classification_metrics(labels, preds)
        assert m.precision == 0.0 and m.recall == 0.0
        assert m.f1 is None and "f1" in m.undefined

    def test_single_class_scores_leave_auc_undefined(self):
        labels = np.ones(3, dtype=int)
        preds = np.ones(3, dtype=int)
        m = classification_metrics(labels, preds, scores=np.arange(3.0))
        assert m.auc is None and "auc" in m.undefined
        assert m.recall == 1.0

    def test_validation(self):
        with pytest.raises(DataError):
            classification_metrics(np.array([1, 0]), np.array([1, 1]))
        with pytest.raises(ShapeError):
            classification_metrics(np.array([1, -1]), np.array([1, -1, 1]))


class TestRegressionMetrics:
    def test_hand_worked_values(self):
        m = regression_metrics(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 2.0]))
        assert m.mae == pytest.approx(2 / 3)
        assert m.wmape == pytest.approx(1 / 3)
        assert m.pearson is None and "pearson" in m.undefined

    def test_pearson_matches_corrcoef(self, rng):
        actual = rng.uniform(0, 20, size=50)
        predicted = actual + rng.standard_normal(50)
        m = regression_metrics(actual, predicted)
        assert m.pearson == pytest.approx(np.corrcoef(actual, predicted)[0, 1],
                                          abs=1e-12)

    def test_perfect_prediction(self):
        actual = np.array([1.0, 4.0, 2.0, 7.0])
        m = regression_metrics(actual, actual.copy())
        assert m.mae == 0.0
        assert m.wmape == 0.0
        assert m.pearson == pytest.approx(1.0)

    def test_wmape_undefined_for_nonpositive_mean(self):
        m = regression_metrics(np.array([-1.0, 1.0]), np.array([0.0, 0.0]))
        assert m.wmape is None and "wmape" in m.undefined
        assert m.mae == 1.0

    def test_validation(self):
        with pytest.raises(ShapeError):
            regression_metrics(np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            regression_metrics(np.array([1.0]), np.array([1.0, 2.0]))


class TestMetricsReport:
    def test_means_skip_undefined_folds(self):
        fold_a = classification_metrics(np.array([1, -1]), np.array([1, -1]),
                                        np.array([0.8, 0.1]))
        fold_b = classification_metrics(np.ones(2, dtype=int),
                                        np.ones(2, dtype=int))  # auc undefined
        report = MetricsReport.from_folds("classify", [fold_a, fold_b])
        assert report.means["accuracy"] == pytest.approx(1.0)
        assert report.means["auc"] == pytest.approx(1.0)
        assert report.defined_counts["auc"] == 1
        assert report.defined_counts["accuracy"] == 2

    def test_all_undefined_gives_none(self):
        folds = [regression_metrics(np.array([-1.0, 1.0]), np.array([0.0, 0.0]))]
        report = MetricsReport.from_folds("regress", folds)
        assert report.means["wmape"] is None
        assert report.defined_counts["wmape"] == 0
        assert report.means["mae"] == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(DataError):
            MetricsReport.from_folds("classify", [])
        with pytest.raises(DataError):
            MetricsReport.from_folds("cluster", [regression_metrics(
                np.array([1.0]), np.array([1.0]))])


def test_formatting_and_table_rows():
    assert format_metric(None) == "NA"
    assert format_metric(0.123456) == "0.1235"
    fold = classification_metrics(np.array([1, -1]), np.array([1, -1]),
                                  np.array([0.9, 0.1]))
    report = MetricsReport.from_folds("classify", [fold])
    row = classification_row("Random Forest", report)
    assert row == ["Random Forest", "1.0000", "1.0000", "1.0000"]
    assert len(row) == len(CLASSIFICATION_COLUMNS)

    rfold = regression_metrics(np.array([2.0, 4.0]), np.array([2.0, 4.0]))
    rreport = MetricsReport.from_folds("regress", [rfold])
    rrow = regression_row("Extra Trees", rreport)
    assert rrow == ["Extra Trees", "0.0000", "0.0000", "1.0000"]
    assert len(rrow) == len(REGRESSION_COLUMNS)
