"""Confusion matrices, per-class recall, UA and WA against brute-force oracles."""

import numpy as np
import pytest

from serkit.errors import DataError, DimensionError
from serkit.metrics import (
    confusion_matrix,
    per_class_recall,
    unweighted_accuracy,
    weighted_accuracy,
)

from helpers import brute_force_recalls


def test_confusion_matrix_rows_are_true_classes():
    y_true = np.array([0, 0, 1, 2, 3, 3])
    y_pred = np.array([0, 1, 1, 2, 3, 0])
    cm = confusion_matrix(y_true, y_pred, 4)
    expected = np.array([
        [1, 1, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [1, 0, 0, 1],
    ])
    assert np.array_equal(cm, expected)
    assert cm.sum() == len(y_true)


def test_confusion_matrix_counts_every_pair_once():
    rng = np.random.default_rng(3)
    y_true = rng.integers(0, 4, size=500)
    y_pred = rng.integers(0, 4, size=500)
    cm = confusion_matrix(y_true, y_pred, 4)
    for k in range(4):
        assert cm[k].sum() == int((y_true == k).sum())
        assert cm[:, k].sum() == int((y_pred == k).sum())


def test_confusion_matrix_rejects_bad_inputs():
    with pytest.raises(DimensionError):
        confusion_matrix(np.array([0, 1]), np.array([0]), 4)
    with pytest.raises(DataError):
        confusion_matrix(np.array([], dtype=int), np.array([], dtype=int), 4)
    with pytest.raises(DataError):
        confusion_matrix(np.array([0, 4]), np.array([0, 0]), 4)
    with pytest.raises(DataError):
        confusion_matrix(np.array([0, 0]), np.array([0, -1]), 4)


def test_perfect_diagonal_scores_one():
    cm = np.diag([10, 10, 10, 10])
    assert unweighted_accuracy(cm) == 1.0
    assert weighted_accuracy(cm) == 1.0
    assert np.array_equal(per_class_recall(cm), np.ones(4))


def test_hand_worked_recalls():
    # Recalls 1.0, 0.5, 0.5, 0.0 regardless of how unequal the supports are.
    cm = np.array([
        [8, 0, 0, 0],
        [1, 1, 0, 0],
        [10, 0, 10, 0],
        [3, 1, 0, 0],
    ])
    recalls = per_class_recall(cm)
    assert np.allclose(recalls, [1.0, 0.5, 0.5, 0.0])
    assert unweighted_accuracy(cm) == pytest.approx(0.5)
    assert weighted_accuracy(cm) == pytest.approx(19 / 34)


def test_ua_ignores_class_support_sizes():
    # Scaling any row rescales that class's counts but not its recall.
    cm = np.array([
        [6, 2, 1, 1],
        [1, 7, 1, 1],
        [2, 2, 5, 1],
        [0, 1, 1, 8],
    ])
    scaled = cm.copy()
    scaled[1] *= 50
    scaled[3] *= 7
    assert unweighted_accuracy(scaled) == pytest.approx(
        unweighted_accuracy(cm), abs=1e-15)
    # WA, by contrast, moves toward the duplicated classes' recalls.
    assert weighted_accuracy(scaled) != pytest.approx(weighted_accuracy(cm))


def test_zero_support_class_is_left_out_of_ua():
    cm = np.array([
        [4, 0, 0, 0],
        [0, 0, 0, 0],
        [0, 0, 2, 2],
        [0, 0, 0, 4],
    ])
    recalls = per_class_recall(cm)
    assert np.isnan(recalls[1])
    assert unweighted_accuracy(cm) == pytest.approx((1.0 + 0.5 + 1.0) / 3)


def test_metrics_match_brute_force_on_random_matrices():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        cm = rng.integers(0, 30, size=(4, 4))
        if cm.sum() == 0 or (cm.sum(axis=1) == 0).any():
            cm[rng.integers(0, 4), rng.integers(0, 4)] += 1
            if (cm.sum(axis=1) == 0).any():
                continue
        recalls, ua, wa = brute_force_recalls(cm)
        assert np.array_equal(per_class_recall(cm), np.array(recalls))
        assert unweighted_accuracy(cm) == ua
        assert weighted_accuracy(cm) == wa


def test_metrics_match_brute_force_with_empty_rows():
    rng = np.random.default_rng(13)
    for _ in range(200):
        cm = rng.integers(0, 20, size=(4, 4))
        cm[rng.integers(0, 4)] = 0
        if cm.sum() == 0:
            continue
        _, ua, wa = brute_force_recalls(cm)
        assert unweighted_accuracy(cm) == ua
        assert weighted_accuracy(cm) == wa


def test_random_predictions_score_near_chance():
    uas = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        y_true = rng.integers(0, 4, size=4000)
        y_pred = rng.integers(0, 4, size=4000)
        uas.append(unweighted_accuracy(confusion_matrix(y_true, y_pred, 4)))
    assert abs(np.mean(uas) - 0.25) < 0.03


def test_validation_errors():
    with pytest.raises(DimensionError):
        unweighted_accuracy(np.zeros((3, 4)))
    with pytest.raises(DataError):
        unweighted_accuracy(np.array([[1, -1], [0, 2]]))
    with pytest.raises(DataError):
        weighted_accuracy(np.zeros((4, 4)))
