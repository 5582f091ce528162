"""Confusion-matrix accumulation and the mIoU / Acc / mAcc summary."""

import numpy as np
import pytest

from affordkit.errors import DimensionError, EmptyEvaluationError, LabelError
from affordkit.metrics import ConfusionMatrix, metrics


def _recount_oracle(gt, pred, m):
    """Independent per-class recount of all three summary statistics."""
    ious, class_accs = [], []
    for c in range(m):
        tp = np.sum((gt == c) & (pred == c))
        fp = np.sum((gt != c) & (pred == c))
        fn = np.sum((gt == c) & (pred != c))
        if tp + fp + fn > 0:
            ious.append(tp / (tp + fp + fn))
        if np.sum(gt == c) > 0:
            class_accs.append(tp / np.sum(gt == c))
    return np.mean(ious), np.mean(gt == pred), np.mean(class_accs)


class TestConfusionMatrix:
    def test_accumulates_counts(self):
        conf = ConfusionMatrix(2).accumulate([0, 0, 1, 1], [0, 1, 1, 1])
        np.testing.assert_array_equal(conf.counts, [[1, 1], [0, 2]])
        assert conf.total == 4

    def test_accumulation_is_additive(self):
        rng = np.random.default_rng(1)
        gt = rng.integers(0, 3, size=40)
        pred = rng.integers(0, 3, size=40)
        whole = ConfusionMatrix(3).accumulate(gt, pred)
        split = ConfusionMatrix(3).accumulate(gt[:17], pred[:17]).accumulate(gt[17:], pred[17:])
        np.testing.assert_array_equal(whole.counts, split.counts)

    def test_merge(self):
        a = ConfusionMatrix(2).accumulate([0], [1])
        b = ConfusionMatrix(2).accumulate([1], [1])
        a.merge(b)
        np.testing.assert_array_equal(a.counts, [[0, 1], [0, 1]])

    def test_merge_size_mismatch(self):
        with pytest.raises(DimensionError):
            ConfusionMatrix(2).merge(ConfusionMatrix(3))

    def test_empty_batch_is_noop(self):
        conf = ConfusionMatrix(2).accumulate([], [])
        assert conf.total == 0

    def test_out_of_range_labels(self):
        with pytest.raises(LabelError):
            ConfusionMatrix(2).accumulate([0, 2], [0, 0])
        with pytest.raises(LabelError):
            ConfusionMatrix(2).accumulate([0, 0], [0, -1])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            ConfusionMatrix(2).accumulate([0, 1], [0])


class TestMetrics:
    def test_perfect_prediction(self):
        conf = ConfusionMatrix(3).accumulate([0, 1, 2, 2], [0, 1, 2, 2])
        result = metrics(conf)
        assert result.miou == 1.0
        assert result.acc == 1.0
        assert result.macc == 1.0

    def test_hand_worked_example(self):
        conf = ConfusionMatrix(2).accumulate([0, 0, 1, 1], [0, 1, 1, 1])
        result = metrics(conf)
        np.testing.assert_allclose(result.miou, 7.0 / 12.0, atol=1e-12)
        np.testing.assert_allclose(result.acc, 0.75, atol=1e-12)
        np.testing.assert_allclose(result.macc, 0.75, atol=1e-12)
        np.testing.assert_allclose(result.per_class_iou, [0.5, 2.0 / 3.0], atol=1e-12)
        np.testing.assert_allclose(result.per_class_acc, [0.5, 1.0], atol=1e-12)

    def test_all_wrong(self):
        conf = ConfusionMatrix(2).accumulate([0, 1], [1, 0])
        result = metrics(conf)
        assert result.miou == 0.0
        assert result.acc == 0.0
        assert result.macc == 0.0

    def test_class_absent_everywhere_is_excluded(self):
        # class 2 never appears in ground truth or predictions: NaN slot,
        # excluded from both means rather than dragging them down
        conf = ConfusionMatrix(3).accumulate([0, 1], [0, 1])
        result = metrics(conf)
        assert result.miou == 1.0
        assert result.macc == 1.0
        assert np.isnan(result.per_class_iou[2])
        assert np.isnan(result.per_class_acc[2])

    def test_class_only_predicted_counts_in_iou_not_macc(self):
        # class 1 never occurs in ground truth but is predicted once:
        # its IoU is defined (zero), its class accuracy is not
        conf = ConfusionMatrix(2).accumulate([0, 0], [0, 1])
        result = metrics(conf)
        np.testing.assert_allclose(result.per_class_iou[1], 0.0)
        assert np.isnan(result.per_class_acc[1])
        np.testing.assert_allclose(result.macc, 0.5)

    def test_recount_oracle_over_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            m = int(rng.integers(2, 6))
            n = int(rng.integers(1, 60))
            gt = rng.integers(0, m, size=n)
            pred = rng.integers(0, m, size=n)
            result = metrics(ConfusionMatrix(m).accumulate(gt, pred))
            miou, acc, macc = _recount_oracle(gt, pred, m)
            np.testing.assert_allclose(result.miou, miou, atol=1e-12)
            np.testing.assert_allclose(result.acc, acc, atol=1e-12)
            np.testing.assert_allclose(result.macc, macc, atol=1e-12)

    def test_permutation_of_points_is_irrelevant(self):
        rng = np.random.default_rng(3)
        gt = rng.integers(0, 3, size=30)
        pred = rng.integers(0, 3, size=30)
        perm = rng.permutation(30)
        a = metrics(ConfusionMatrix(3).accumulate(gt, pred))
        b = metrics(ConfusionMatrix(3).accumulate(gt[perm], pred[perm]))
        assert a.miou == b.miou and a.acc == b.acc and a.macc == b.macc

    def test_acc_is_count_weighted_class_acc(self):
        rng = np.random.default_rng(4)
        gt = rng.integers(0, 3, size=50)
        pred = rng.integers(0, 3, size=50)
        result = metrics(ConfusionMatrix(3).accumulate(gt, pred))
        counts = np.bincount(gt, minlength=3)
        weighted = np.nansum(result.per_class_acc * counts) / counts.sum()
        np.testing.assert_allclose(result.acc, weighted, atol=1e-12)

    def test_empty_evaluation_rejected(self):
        with pytest.raises(EmptyEvaluationError):
            metrics(ConfusionMatrix(3))
