"""
Training and prediction for NEPDF classifiers.

Minibatch SGD with momentum, seeded per-epoch shuffling and early
stopping on validation loss. Labels in {1, -1, 0} are mapped to class
indices by the network's classifier scheme.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import DEPENDENCE_INDEX, DIRECTION_INDEX, MULTICLASS_INDEX
from pipelines.nepdf import NepdfMatrix, base_id, nepdf_stack
from services.network import Network, loss, one_hot
from utils.errors import EmptyDataset, InvalidParams, LabelOutOfRange, ShapeMismatch
from utils.rng import get_rng

logger = logging.getLogger(__name__)

Sample = Tuple[Union[NepdfMatrix, np.ndarray], int]

SCHEME_INDEX: Dict[str, Dict[int, int]] = {
    "multiclass": MULTICLASS_INDEX,
    "direction": DIRECTION_INDEX,
    "dependence": DEPENDENCE_INDEX,
}

# Class index -> label returned by predict().
SCHEME_LABELS: Dict[str, Tuple[int, ...]] = {
    "multiclass": (1, -1, 0),
    "direction": (1, -1),
    "dependence": (1, 0),
}

EVAL_BATCH = 256


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters.

    Attributes:
        learning_rate: Step size.
        momentum: Velocity decay in [0, 1).
        batch_size: Minibatch size.
        epochs: Maximum epochs.
        validation_fraction: Share of pair groups held out for early stopping.
        early_stop_patience: Epochs without validation improvement before
            stopping; 0 disables early stopping.
        seed: Shuffle and split seed.
    """

    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 30
    validation_fraction: float = 0.1
    early_stop_patience: int = 5
    seed: int = 0

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise InvalidParams("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidParams("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise InvalidParams("batch_size and epochs must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidParams("validation_fraction must lie in (0, 1)")
        if self.early_stop_patience < 0:
            raise InvalidParams("early_stop_patience must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    """Trained network and its per-epoch history."""

    network: Network
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0


def encode_labels(labels: Sequence[int], scheme: str) -> np.ndarray:
    """Map labels to class indices for a classifier scheme.

    Raises:
        LabelOutOfRange: If a label has no class in ``scheme``.
    """
    mapping = SCHEME_INDEX[scheme]
    try:
        return np.array([mapping[int(label)] for label in labels], dtype=np.int64)
    except KeyError as e:
        raise LabelOutOfRange(f"Label {e.args[0]} is not valid for a {scheme} classifier") from e


def decode_index(index: int, scheme: str) -> int:
    """Label for a class index."""
    return SCHEME_LABELS[scheme][int(index)]


def _as_inputs(items: Sequence[Union[NepdfMatrix, np.ndarray]], dtype: np.dtype) -> np.ndarray:
    if items and isinstance(items[0], NepdfMatrix):
        return nepdf_stack(items, dtype=dtype)
    return np.stack([np.asarray(m) for m in items]).astype(dtype)


def predict_proba(net: Network, inputs: np.ndarray, batch_size: int = EVAL_BATCH) -> np.ndarray:
    """Probabilities for many inputs, evaluated in fixed-size chunks."""
    if len(inputs) == 0:
        return np.zeros((0, net.n_classes))
    chunks = [net.forward(inputs[i:i + batch_size]) for i in range(0, len(inputs), batch_size)]
    return np.concatenate(chunks, axis=0)


def _validation_split(
    n: int, groups: Sequence[str], fraction: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    unique = list(dict.fromkeys(groups))
    if len(unique) < 2:
        return np.arange(n), np.zeros(0, dtype=np.int64)
    n_val = min(len(unique) - 1, max(1, int(round(fraction * len(unique)))))
    order = rng.permutation(len(unique))
    held_out = {unique[i] for i in order[:n_val]}
    mask = np.array([g in held_out for g in groups])
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def _evaluate(net: Network, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    probs = predict_proba(net, x)
    value = loss(probs, one_hot(y, net.n_classes))
    accuracy = float(np.mean(probs.argmax(axis=1) == y))
    return value, accuracy


def train(
    net: Network,
    dataset: Sequence[Sample],
    cfg: TrainConfig,
    groups: Optional[Sequence[str]] = None,
) -> TrainResult:
    """Train ``net`` in place with minibatch SGD and momentum.

    Args:
        net: Network to train; its ``scheme`` decides the label mapping.
        dataset: (matrix, label) samples.
        cfg: Hyperparameters.
        groups: Optional grouping key per sample; validation holds out
            whole groups so transpose twins never straddle the split.

    Returns:
        TrainResult with the network (best-validation parameters restored
        when early stopping is enabled) and its history.

    Raises:
        EmptyDataset: If ``dataset`` is empty.
        LabelOutOfRange: If a label is invalid for the scheme.
    """
    cfg.validate()
    if not dataset:
        raise EmptyDataset("Cannot train on an empty dataset")

    x = _as_inputs([m for m, _ in dataset], net.dtype)
    if x.shape[1:] != (net.input_size, net.input_size):
        raise ShapeMismatch(f"Inputs are {x.shape[1:]}, network expects K={net.input_size}")
    y = encode_labels([label for _, label in dataset], net.scheme)
    keys = list(groups) if groups is not None else [str(i) for i in range(len(dataset))]

    rng = get_rng(cfg.seed)
    train_idx, val_idx = _validation_split(len(dataset), keys, cfg.validation_fraction, rng)
    if val_idx.size == 0:
        val_idx = train_idx

    params = net.parameters()
    velocity = [np.zeros_like(p) for p in params]
    result = TrainResult(network=net)
    best_loss = float("inf")
    best_params = net.snapshot()
    waited = 0

    logger.info(
        "Training %s network on %d samples (%d validation), %d epochs",
        net.scheme, train_idx.size, val_idx.size, cfg.epochs,
    )

    for epoch in range(1, cfg.epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            batch_loss, grads = net.gradients(x[batch], one_hot(y[batch], net.n_classes))
            total += batch_loss * batch.size
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= cfg.learning_rate * g.astype(p.dtype, copy=False)
                p += v

        val_loss, val_accuracy = _evaluate(net, x[val_idx], y[val_idx])
        record = EpochRecord(epoch, total / order.size, val_loss, val_accuracy)
        result.history.append(record)
        logger.info(
            "Epoch %d: train_loss=%.4f val_loss=%.4f val_acc=%.4f",
            epoch, record.train_loss, val_loss, val_accuracy,
        )

        if cfg.early_stop_patience == 0:
            continue
        if val_loss < best_loss:
            best_loss, best_params, waited = val_loss, net.snapshot(), 0
            result.best_epoch = epoch
        else:
            waited += 1
            if waited >= cfg.early_stop_patience:
                logger.info("Early stopping after epoch %d (best %d)", epoch, result.best_epoch)
                break

    if cfg.early_stop_patience > 0:
        net.set_parameters(best_params)
    else:
        result.best_epoch = len(result.history)
    return result


def predict_many(net: Network, matrices: Sequence[NepdfMatrix]) -> Tuple[np.ndarray, List[int]]:
    """Probabilities and argmax labels for many matrices.

    Raises:
        ShapeMismatch: If K differs from the network's input size.
    """
    if not matrices:
        return np.zeros((0, net.n_classes)), []
    probs = predict_proba(net, nepdf_stack(matrices, dtype=net.dtype))
    return probs, [decode_index(i, net.scheme) for i in probs.argmax(axis=1)]


def predict(net: Network, m: NepdfMatrix) -> Tuple[np.ndarray, int]:
    """Class probabilities and argmax label for one matrix.

    Returns:
        Tuple of (probability vector, label in {1, -1, 0}).
    """
    probs, labels = predict_many(net, [m])
    return probs[0], labels[0]


def groups_for(ids: Sequence[str]) -> List[str]:
    """Grouping keys for sample ids."""
    return [base_id(i) for i in ids]
