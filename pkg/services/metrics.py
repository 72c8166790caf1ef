"""
Evaluation metrics and cross-validation splits.

AUROC is the Mann-Whitney statistic computed from average ranks, so tied
scores earn half credit. Every function here is pure.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from config.constants import CAUSAL, INDEPENDENT, REVERSE
from pipelines.nepdf import base_id
from utils.errors import (
    DegenerateLabels,
    InvalidK,
    LengthMismatch,
    OutOfRange,
    TooFewGroups,
    ZeroWeightMass,
)
from utils.rng import get_rng

logger = logging.getLogger(__name__)

# Column of each label in a 3-class probability matrix.
_OVR_COLUMNS = ((CAUSAL, 0), (REVERSE, 1), (INDEPENDENT, 2))


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve for binary labels.

    Args:
        scores: Higher means more likely positive.
        labels: 1 for positive, 0 for negative.

    Returns:
        Probability that a random positive outscores a random negative,
        ties counted as 0.5.

    Raises:
        LengthMismatch: If the sequences differ in length.
        DegenerateLabels: If only one class is present.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.size} scores vs {y.size} labels")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUROC needs at least one positive and one negative")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def mean_ovr_auroc(probabilities: np.ndarray, labels: Sequence[int]) -> float:
    """Unweighted mean of the three one-vs-rest AUROCs.

    Args:
        probabilities: N x 3 rows with columns (causal, reverse, independent).
        labels: N labels in {1, -1, 0}.

    Raises:
        DegenerateLabels: If any of the three classes is missing.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels)
    missing = [label for label, _ in _OVR_COLUMNS if not np.any(y == label)]
    if missing:
        raise DegenerateLabels(f"One-vs-rest AUROC needs all three classes; missing {missing}")
    return float(np.mean([auroc(probs[:, col], y == label) for label, col in _OVR_COLUMNS]))


def combine(y_causal_prob: float, y_ind: float) -> float:
    """Signed dependence-weighted direction score ``y_ind * (2 * y_causal - 1)``.

    Raises:
        OutOfRange: If either argument lies outside [0, 1].
    """
    for name, value in (("y_causal_prob", y_causal_prob), ("y_ind", y_ind)):
        if not 0.0 <= value <= 1.0:
            raise OutOfRange(f"{name}={value} is outside [0, 1]")
    return y_ind * (2.0 * y_causal_prob - 1.0)


def bidirectional_auroc(combined_scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mean of AUROC(label 1 vs rest, y_pred) and AUROC(label -1 vs rest, -y_pred).

    Raises:
        DegenerateLabels: If labels lack 1s or -1s, or contain nothing else.
    """
    s = np.asarray(combined_scores, dtype=np.float64)
    y = np.asarray(labels)
    if not np.any(y == CAUSAL) or not np.any(y == REVERSE):
        raise DegenerateLabels("Bidirectional AUROC needs both 1 and -1 labels")
    return 0.5 * (auroc(s, y == CAUSAL) + auroc(-s, y == REVERSE))


def weighted_accuracy(
    predictions: Sequence[int], labels: Sequence[int], weights: Sequence[float]
) -> float:
    """Sum of weights of correct predictions over total weight.

    Raises:
        LengthMismatch: If the three sequences differ in length.
        ZeroWeightMass: If the weights sum to zero.
    """
    pred = np.asarray(predictions)
    y = np.asarray(labels)
    w = np.asarray(weights, dtype=np.float64)
    if not pred.shape == y.shape == w.shape:
        raise LengthMismatch("predictions, labels and weights must have equal length")
    if np.any(w < 0):
        raise ZeroWeightMass("Weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ZeroWeightMass("Weights sum to zero")
    return float(w[pred == y].sum() / total)


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    pred = np.asarray(predictions)
    return weighted_accuracy(pred, labels, np.ones(pred.shape))


def kfold_split(
    ids: Sequence[str], k: int, seed: int
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Partition sample indices into k folds that never split a pair group.

    Samples sharing a base id (a pair and its transpose twin, or all pairs
    from one simulated system) always land in the same fold. Groups are
    shuffled with ``seed`` and dealt into k folds whose group counts differ
    by at most one.

    Args:
        ids: Sample ids.
        k: Number of folds (>= 2).
        seed: Shuffle seed.

    Returns:
        List of (train_indices, test_indices) tuples.

    Raises:
        InvalidK: If k < 2.
        TooFewGroups: If there are fewer groups than folds.
    """
    if k < 2:
        raise InvalidK(f"k-fold needs k >= 2, got {k}")
    keys = [base_id(i) for i in ids]
    groups = list(dict.fromkeys(keys))
    if len(groups) < k:
        raise TooFewGroups(f"{len(groups)} pair groups cannot fill {k} folds")

    order = get_rng(seed).permutation(len(groups))
    fold_of = {}
    for fold, chunk in enumerate(np.array_split(order, k)):
        for g in chunk:
            fold_of[groups[g]] = fold

    assignment = np.array([fold_of[key] for key in keys])
    splits = []
    for fold in range(k):
        test = np.flatnonzero(assignment == fold)
        train = np.flatnonzero(assignment != fold)
        splits.append((train, test))
    logger.debug("Split %d samples (%d groups) into %d folds", len(keys), len(groups), k)
    return splits
