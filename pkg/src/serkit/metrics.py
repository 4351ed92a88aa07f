"""Confusion-matrix accounting: unweighted and weighted accuracy.

Unweighted accuracy (UA) is the mean of per-class recalls, so it is
insensitive to class imbalance; weighted accuracy (WA) is the plain
fraction of correct predictions. Confusion rows are true classes,
columns are predictions.
"""

import numpy as np

from .errors import DataError, DimensionError

NUM_CLASSES = 4


def confusion_matrix(y_true, y_pred, num_classes: int = NUM_CLASSES) -> np.ndarray:
    """Count matrix with true class on rows, predicted class on columns."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DimensionError("y_true and y_pred must be equal-length vectors")
    if y_true.size == 0:
        raise DataError("cannot build a confusion matrix from zero predictions")
    for name, arr in (("true", y_true), ("predicted", y_pred)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise DataError(f"{name} labels must lie in [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return counts


def _validated(confusion: np.ndarray) -> np.ndarray:
    confusion = np.asarray(confusion)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise DimensionError(f"confusion matrix must be square, "
                             f"got shape {confusion.shape}")
    if (confusion < 0).any():
        raise DataError("confusion counts must be non-negative")
    if confusion.sum() == 0:
        raise DataError("confusion matrix has no observations")
    return confusion


def per_class_recall(confusion: np.ndarray) -> np.ndarray:
    """Recall per class; NaN marks classes with no true examples."""
    confusion = _validated(confusion)
    support = confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        return np.where(support > 0,
                        np.diag(confusion) / np.where(support > 0, support, 1),
                        np.nan)


def unweighted_accuracy(confusion: np.ndarray) -> float:
    """Mean per-class recall over the classes that actually appear."""
    recalls = per_class_recall(confusion)
    return float(np.nanmean(recalls))


def weighted_accuracy(confusion: np.ndarray) -> float:
    """Plain accuracy: correct predictions over all predictions."""
    confusion = _validated(confusion)
    return float(np.trace(confusion) / confusion.sum())
