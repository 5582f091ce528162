"""Confusion-matrix segmentation metrics: mIoU, overall Acc, mAcc.

Rows index ground truth, columns predictions.  Classes whose IoU union is
empty are left out of the mIoU mean, and classes never seen in the ground
truth are left out of mAcc — both ratios are undefined there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyEvaluationError, LabelError


class ConfusionMatrix:
    """m×m integer counts; counts[y][ŷ] is incremented per evaluated point."""

    def __init__(self, num_classes: int):
        if num_classes < 1:
            raise DimensionError(f"need at least one class, got {num_classes}")
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    def accumulate(self, ground_truth, predictions) -> "ConfusionMatrix":
        gt = np.asarray(ground_truth).reshape(-1)
        pred = np.asarray(predictions).reshape(-1)
        if gt.shape != pred.shape:
            raise DimensionError(
                f"ground truth ({gt.shape[0]}) and predictions ({pred.shape[0]}) differ in length"
            )
        if gt.size == 0:
            return self
        m = self.num_classes
        if gt.min() < 0 or gt.max() >= m or pred.min() < 0 or pred.max() >= m:
            raise LabelError(f"label index out of range for {m} classes")
        np.add.at(self.counts, (gt.astype(np.int64), pred.astype(np.int64)), 1)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise DimensionError("cannot merge confusion matrices of different sizes")
        self.counts += other.counts
        return self

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsResult:
    miou: float
    acc: float
    macc: float
    per_class_iou: np.ndarray  # NaN where the union is empty
    per_class_acc: np.ndarray  # NaN where the class never occurs in ground truth


def metrics(conf: ConfusionMatrix) -> MetricsResult:
    """Summarize a confusion matrix; all reported values lie in [0, 1]."""
    if conf.total == 0:
        raise EmptyEvaluationError("no points were evaluated")
    c = conf.counts.astype(np.float64)
    tp = np.diag(c)
    gt_per_class = c.sum(axis=1)
    pred_per_class = c.sum(axis=0)
    union = gt_per_class + pred_per_class - tp

    iou = np.full(conf.num_classes, np.nan)
    has_union = union > 0
    iou[has_union] = tp[has_union] / union[has_union]

    cls_acc = np.full(conf.num_classes, np.nan)
    seen = gt_per_class > 0
    cls_acc[seen] = tp[seen] / gt_per_class[seen]

    return MetricsResult(
        miou=float(np.mean(iou[has_union])) if has_union.any() else 0.0,
        acc=float(tp.sum() / c.sum()),
        macc=float(np.mean(cls_acc[seen])) if seen.any() else 0.0,
        per_class_iou=iou,
        per_class_acc=cls_acc,
    )


@dataclass(frozen=True)
class EvalReport:
    result: MetricsResult
    labels: tuple[str, ...]
    confusion: ConfusionMatrix

    def to_dict(self) -> dict:
        """JSON-ready summary; NaN per-class entries become null."""
        def clean(x):
            return None if np.isnan(x) else float(x)

        return {
            "miou": self.result.miou,
            "acc": self.result.acc,
            "macc": self.result.macc,
            "per_class": [
                {
                    "label": label,
                    "iou": clean(self.result.per_class_iou[i]),
                    "acc": clean(self.result.per_class_acc[i]),
                }
                for i, label in enumerate(self.labels)
            ],
        }


def evaluate(clouds, bank, model) -> EvalReport:
    """Score every labeled cloud against a text bank and summarize.

    The bank may differ from the one used in training — labels resolve by
    position in this bank, which is what makes unseen-label evaluation work.
    """
    from .model import predict_cloud  # local import: model depends on nothing here

    if not clouds:
        raise EmptyEvaluationError("no clouds to evaluate")
    conf = ConfusionMatrix(bank.m)
    for i, cloud in enumerate(clouds):
        if cloud.labels is None:
            raise LabelError(f"cloud {i} has no ground-truth labels")
        conf.accumulate(cloud.labels, predict_cloud(model, cloud, bank))
    return EvalReport(result=metrics(conf), labels=bank.labels, confusion=conf)
