"""Classification metrics and the streaming-vs-single-view comparison."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import row_softmax
from .errors import InputError

__all__ = [
    "LabelSet",
    "MetricReport",
    "confusion_matrix",
    "classification_metrics",
    "predict_labels",
    "evaluate_representation",
    "accumulation_curve",
]


@dataclass
class LabelSet:
    """Node labels with disjoint train/test index sets.

    ``labels`` holds a class index in [0, c) for every node; only the
    rows in ``train_idx`` contribute to the loss and only the rows in
    ``test_idx`` are scored.
    """

    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    c: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)
        n = self.labels.shape[0]
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise InputError("train and test index sets overlap")
        for name, idx in (("train", self.train_idx), ("test", self.test_idx)):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise InputError(f"{name} indices out of range for {n} nodes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.c):
            raise InputError(f"label values must be in [0, {self.c})")

    def split_fingerprint(self) -> str:
        """Stable identifier of the train/test split, for cross-run checks."""
        return f"{self.train_idx.tobytes().hex()[:16]}-{self.test_idx.tobytes().hex()[:16]}"


@dataclass(eq=False)
class MetricReport:
    """Accuracy, macro precision/recall, macro F1, and the confusion matrix."""

    acc: float
    precision_macro: float
    recall_macro: float
    maf1: float
    confusion: np.ndarray
    split_fingerprint: Optional[str] = None


def confusion_matrix(pred, truth, c: int) -> np.ndarray:
    """c x c count matrix; entry (t, p) counts truth t predicted as p."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise InputError(
            f"prediction and truth lengths differ: {pred.shape[0]} vs {truth.shape[0]}"
        )
    if pred.size and (pred.max() >= c or truth.max() >= c or min(pred.min(), truth.min()) < 0):
        raise InputError(f"class indices must be in [0, {c})")
    m = np.zeros((c, c), dtype=np.int64)
    np.add.at(m, (truth, pred), 1)
    return m


def classification_metrics(confusion: np.ndarray) -> MetricReport:
    """Metric report from a confusion matrix.

    Per-class precision and recall substitute 0 when their denominator
    is 0, and a class's F1 is 0 when precision + recall is 0; macro
    values are unweighted class means.
    """
    confusion = np.asarray(confusion)
    total = confusion.sum()
    if total == 0:
        raise InputError("confusion matrix is empty")
    tp = np.diag(confusion).astype(np.float64)
    pred_per_class = confusion.sum(axis=0).astype(np.float64)   # column: predicted
    truth_per_class = confusion.sum(axis=1).astype(np.float64)  # row: actual

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_per_class > 0, tp / pred_per_class, 0.0)
        recall = np.where(truth_per_class > 0, tp / truth_per_class, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    return MetricReport(
        acc=float(tp.sum() / total),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        maf1=float(f1.mean()),
        confusion=confusion,
    )


def predict_labels(h_star: np.ndarray) -> np.ndarray:
    """Argmax of the row softmax; ties go to the lowest class index."""
    return np.argmax(row_softmax(h_star), axis=1)


def evaluate_representation(h_star: np.ndarray, labels: LabelSet) -> MetricReport:
    """Score a stored representation on the test split."""
    pred = predict_labels(h_star)[labels.test_idx]
    truth = labels.labels[labels.test_idx]
    report = classification_metrics(confusion_matrix(pred, truth, labels.c))
    report.split_fingerprint = labels.split_fingerprint()
    return report


def accumulation_curve(stream_reports: list, single_view_reports: list) -> list:
    """Per-view rows comparing streaming accuracy with single-view training.

    Row v holds the accuracy after ingesting views 1..v next to the
    accuracy of a model trained on view v alone. All reports must come
    from the same train/test split.
    """
    if len(stream_reports) != len(single_view_reports):
        raise InputError(
            f"got {len(stream_reports)} streaming reports but "
            f"{len(single_view_reports)} single-view reports"
        )
    fingerprints = {
        r.split_fingerprint for r in (*stream_reports, *single_view_reports)
    }
    if len(fingerprints) > 1:
        raise InputError("reports were computed on different train/test splits")
    return [
        {"view": v + 1, "streaming_acc": s.acc, "single_view_acc": b.acc}
        for v, (s, b) in enumerate(zip(stream_reports, single_view_reports))
    ]
