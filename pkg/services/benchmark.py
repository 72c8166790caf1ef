"""
Benchmark orchestration: data source -> NEPDF -> train -> score -> metrics.

Four evaluation modes:

* ``multiclass``: one 3-class network, mean one-vs-rest AUROC.
* ``chalearn``: a direction network and a dependence network whose
  outputs are combined into a signed score, bidirectional AUROC.
* ``direction``: one binary network on +/-1 pairs, AUROC of P(label 1).
* ``dependence``: one binary network, AUROC of P(dependent).

Cross-validation folds never split a pair group, so a pair and its
transpose twin (or all pairs of one simulated system) stay together.
"""

import hashlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.constants import (
    CAUSAL,
    HISTORY_COLUMNS,
    INDEPENDENT,
    REFERENCE_CHALEARN_BIDIRECTIONAL_AUC,
    REFERENCE_TUEBINGEN_WEIGHTED_ACCURACY,
    REVERSE,
    SCORES_COLUMNS,
    TUEBINGEN_PREFIX,
)
from config.run_config import RunConfig, cell_configs
from config.settings import settings
from pipelines.nepdf import NepdfMatrix, PairSample, build_dataset, build_epdf, swap_pair
from pipelines.pair_files import read_pairs
from pipelines.simgen import SemParams, SynthPairConfig, gen_synthetic_pairs, sem_dataset
from services.baselines import bivariate_fit_score, mutual_information, pearson
from services.metrics import (
    accuracy,
    auroc,
    bidirectional_auroc,
    combine,
    kfold_split,
    mean_ovr_auroc,
    weighted_accuracy,
)
from services.network import SCHEMES, Network, init_network
from services.trainer import TrainConfig, TrainResult, groups_for, predict_many, train
from utils.errors import (
    DegenerateLabels,
    EmptyDataset,
    ShapeMismatch,
    SingularFit,
    ZeroVariance,
    ZeroWeightMass,
)
from utils.io import write_csv, write_json
from utils.rng import spawn_seeds

logger = logging.getLogger(__name__)

# Classifier name -> scheme, per evaluation mode.
MODE_CLASSIFIERS: Dict[str, Tuple[Tuple[str, str], ...]] = {
    "multiclass": (("multiclass", "multiclass"),),
    "chalearn": (("causal", "direction"), ("ind", "dependence")),
    "direction": (("direction", "direction"),),
    "dependence": (("dependence", "dependence"),),
}

MODE_METRIC: Dict[str, str] = {
    "multiclass": "mean_ovr_auroc",
    "chalearn": "bidirectional_auroc",
    "direction": "direction_auroc",
    "dependence": "dependence_auroc",
}

BASELINES: Tuple[str, ...] = ("pearson", "mutual_information", "bivariate_fit")
_FOLD_METRICS: Tuple[str, ...] = ("auroc", "accuracy", "weighted_accuracy")


# ─── Report Types ────────────────────────────────────────────────────────────


@dataclass
class ScoredPair:
    """Classifier output for one pair.

    ``score_causal`` is the conditional probability of x -> y given a
    direction, ``y_ind`` the probability that the pair is dependent and
    ``y_pred = y_ind * (2 * score_causal - 1)``. Components a mode does
    not produce are None.
    """

    id: str
    true_label: int
    predicted: int
    weight: float = 1.0
    score_causal: Optional[float] = None
    y_ind: Optional[float] = None
    y_pred: Optional[float] = None


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    auroc: Optional[float]
    accuracy: Optional[float]
    weighted_accuracy: Optional[float]
    baselines: Dict[str, Optional[float]] = field(default_factory=dict)


@dataclass
class EvalReport:
    """Per-fold and aggregate metrics with configuration provenance."""

    mode: str
    metric: str
    config: Dict[str, Any]
    config_digest: str
    dataset_digest: str
    folds: List[FoldResult] = field(default_factory=list)
    aggregate: Dict[str, Optional[float]] = field(default_factory=dict)
    reference: Dict[str, float] = field(default_factory=dict)
    scores: List[ScoredPair] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form; per-pair scores go to the scores CSV instead."""
        return {
            "mode": self.mode,
            "metric": self.metric,
            "config": self.config,
            "config_digest": self.config_digest,
            "dataset_digest": self.dataset_digest,
            "folds": [asdict(f) for f in self.folds],
            "aggregate": self.aggregate,
            "reference": self.reference,
        }


# ─── Data ────────────────────────────────────────────────────────────────────


def load_pairs(config: RunConfig) -> List[PairSample]:
    """Produce the configured dataset before augmentation."""
    if config.data is not None:
        return read_pairs(config.data.path)
    if config.simulate is not None:
        sim = config.simulate
        params = SemParams(
            structure=sim.structure,
            alpha=sim.alpha,
            beta=sim.beta,
            gamma=sim.gamma,
            steps=sim.steps,
            seed=config.seed,
            burn_in=sim.burn_in,
        )
        return sem_dataset(params, sim.systems, lag=sim.lag)
    syn = config.synth
    return gen_synthetic_pairs(
        SynthPairConfig(
            n_samples=syn.n_samples,
            m_range=syn.m_range,
            k_range=syn.k_range,
            mean_range=syn.mean_range,
            std_range=syn.std_range,
            noise_variance_range=syn.noise_variance_range,
            seed=config.seed,
            mechanism=syn.mechanism,
            heteroscedastic=syn.heteroscedastic,
        )
    )


def prepare_pairs(pairs: Sequence[PairSample], config: RunConfig) -> List[PairSample]:
    """Apply transpose augmentation and the mode's label filter."""
    out = list(pairs)
    if config.augment:
        out = out + [swap_pair(p) for p in out]
    if config.eval.mode == "direction":
        dropped = sum(p.label == INDEPENDENT for p in out)
        if dropped:
            logger.warning("Direction mode ignores %d independent pairs", dropped)
        out = [p for p in out if p.label != INDEPENDENT]
    if not out:
        raise EmptyDataset("No pairs left to evaluate")
    return out


def dataset_digest(pairs: Sequence[PairSample]) -> str:
    """SHA-256 over ids, labels, weights and observation bytes."""
    h = hashlib.sha256()
    for p in pairs:
        h.update(f"{p.id}|{p.label}|{p.weight!r}|".encode("utf-8"))
        h.update(p.x.astype("<f8").tobytes())
        h.update(p.y.astype("<f8").tobytes())
    return h.hexdigest()


def build_matrices(pairs: Sequence[PairSample], config: RunConfig) -> List[NepdfMatrix]:
    n = config.nepdf
    return build_dataset(pairs, n.k, n.log_space, n.log_transform)


# ─── Training ────────────────────────────────────────────────────────────────


def train_config(config: RunConfig, seed: int) -> TrainConfig:
    n = config.net
    return TrainConfig(
        learning_rate=n.learning_rate,
        momentum=n.momentum,
        batch_size=n.batch_size,
        epochs=n.epochs,
        validation_fraction=n.validation_fraction,
        early_stop_patience=n.early_stop_patience,
        seed=seed,
    )


def fit_models(
    config: RunConfig,
    matrices: Sequence[NepdfMatrix],
    pairs: Sequence[PairSample],
    seed: int,
) -> Dict[str, TrainResult]:
    """Train every classifier the evaluation mode needs.

    Direction classifiers only see pairs labeled +/-1.

    Returns:
        Mapping of classifier name to its TrainResult.
    """
    results: Dict[str, TrainResult] = {}
    for offset, (name, scheme) in enumerate(MODE_CLASSIFIERS[config.eval.mode]):
        keep = [
            i for i, p in enumerate(pairs)
            if scheme != "direction" or p.label != INDEPENDENT
        ]
        if not keep:
            raise EmptyDataset(f"No training pairs for the {name} classifier")
        net = init_network(
            config.nepdf.k,
            SCHEMES[scheme],
            arch=config.net.arch,
            seed=seed + offset,
            dtype=np.dtype(config.net.dtype),
            scheme=scheme,
        )
        logger.info("Training %s classifier on %d pairs", name, len(keep))
        results[name] = train(
            net,
            [(matrices[i], pairs[i].label) for i in keep],
            train_config(config, seed + offset),
            groups=groups_for([pairs[i].id for i in keep]),
        )
    return results


def check_models(config: RunConfig, models: Dict[str, Network]) -> None:
    """Verify loaded models match the mode and the configured K.

    Raises:
        ShapeMismatch: If a model's input size differs from ``nepdf.k``.
        EmptyDataset: If a classifier the mode needs is missing.
    """
    for name, scheme in MODE_CLASSIFIERS[config.eval.mode]:
        if name not in models:
            raise EmptyDataset(f"Mode {config.eval.mode} needs a {name} model")
        net = models[name]
        if net.input_size != config.nepdf.k:
            raise ShapeMismatch(
                f"{name} model expects K={net.input_size} but the configuration uses K={config.nepdf.k}"
            )
        if net.scheme != scheme:
            raise ShapeMismatch(f"{name} model is a {net.scheme} classifier, expected {scheme}")


# ─── Scoring ─────────────────────────────────────────────────────────────────


def _unit(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def score_pairs(
    mode: str,
    models: Dict[str, Network],
    matrices: Sequence[NepdfMatrix],
    pairs: Sequence[PairSample],
) -> Tuple[List[ScoredPair], Optional[np.ndarray]]:
    """Score pairs with trained classifiers.

    Returns:
        Tuple of (scored pairs, N x 3 probabilities in multiclass mode else None).
    """
    probs = {name: predict_many(net, matrices)[0] for name, net in models.items()}
    scored: List[ScoredPair] = []

    for i, p in enumerate(pairs):
        entry = ScoredPair(id=p.id, true_label=p.label, predicted=INDEPENDENT, weight=p.weight)
        if mode == "multiclass":
            p_causal, p_reverse, p_ind = probs["multiclass"][i]
            directed = p_causal + p_reverse
            entry.score_causal = _unit(p_causal / directed) if directed > 0 else 0.5
            entry.y_ind = _unit(directed)
            entry.y_pred = combine(entry.score_causal, entry.y_ind)
            best = int(np.argmax([p_causal, p_reverse, p_ind]))
            entry.predicted = (CAUSAL, REVERSE, INDEPENDENT)[best]
        elif mode == "chalearn":
            entry.score_causal = _unit(probs["causal"][i, 0])
            entry.y_ind = _unit(probs["ind"][i, 0])
            entry.y_pred = combine(entry.score_causal, entry.y_ind)
            if entry.y_ind >= 0.5:
                entry.predicted = CAUSAL if entry.score_causal >= 0.5 else REVERSE
        elif mode == "direction":
            entry.score_causal = _unit(probs["direction"][i, 0])
            entry.predicted = CAUSAL if entry.score_causal >= 0.5 else REVERSE
        else:
            entry.y_ind = _unit(probs["dependence"][i, 0])
            entry.predicted = 1 if entry.y_ind >= 0.5 else 0
        scored.append(entry)

    return scored, probs.get("multiclass")


def _target(mode: str, label: int) -> int:
    # Dependence mode predicts 1 (dependent) or 0.
    if mode == "dependence":
        return int(label != INDEPENDENT)
    return label


def _safe(metric: str, fn: Any, *args: Any) -> Optional[float]:
    try:
        return float(fn(*args))
    except (DegenerateLabels, ZeroWeightMass) as e:
        logger.warning("%s undefined for this fold: %s", metric, e)
        return None


def primary_auroc(
    mode: str, scored: Sequence[ScoredPair], probabilities: Optional[np.ndarray]
) -> Optional[float]:
    """The mode's headline AUROC, or None when a needed class is missing."""
    labels = np.array([s.true_label for s in scored])
    if mode == "multiclass":
        return _safe("mean_ovr_auroc", mean_ovr_auroc, probabilities, labels)
    if mode == "chalearn":
        return _safe("bidirectional_auroc", bidirectional_auroc, [s.y_pred for s in scored], labels)
    if mode == "direction":
        return _safe("direction_auroc", auroc, [s.score_causal for s in scored], labels == CAUSAL)
    return _safe("dependence_auroc", auroc, [s.y_ind for s in scored], labels != INDEPENDENT)


# ─── Baselines ───────────────────────────────────────────────────────────────


def _baseline_row(pair: PairSample, k: int, degree: int) -> Tuple[float, float, float]:
    try:
        r = abs(pearson(pair.x, pair.y))
    except (ZeroVariance, ValueError):
        r = 0.0
    mi = mutual_information(build_epdf(pair, k))
    try:
        fit = bivariate_fit_score(pair, degree)
    except SingularFit:
        fit = 0.0
    return r, mi, fit


def baseline_scores(pairs: Sequence[PairSample], config: RunConfig) -> Dict[str, np.ndarray]:
    """Pearson |r|, histogram MI and bivariate-fit scores for every pair."""
    k, degree = config.nepdf.k, config.eval.bivariate_degree
    workers = settings.parallel.workers
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _baseline_row(p, k, degree), pairs))
    else:
        rows = [_baseline_row(p, k, degree) for p in pairs]
    table = np.array(rows, dtype=np.float64).reshape(len(pairs), 3)
    return {name: table[:, j] for j, name in enumerate(BASELINES)}


def baseline_aurocs(scores: Dict[str, np.ndarray], labels: np.ndarray) -> Dict[str, Optional[float]]:
    """Dependence AUROC for Pearson and MI, direction AUROC for the fit score.

    A value is None when the needed classes are not both present.
    """
    dependent = labels != INDEPENDENT
    out: Dict[str, Optional[float]] = {}
    for name in ("pearson", "mutual_information"):
        out[name] = auroc(scores[name], dependent) if 0 < dependent.sum() < labels.size else None
    fit_labels = labels[dependent] == CAUSAL
    if 0 < fit_labels.sum() < fit_labels.size:
        out["bivariate_fit"] = auroc(scores["bivariate_fit"][dependent], fit_labels)
    else:
        out["bivariate_fit"] = None
    return out


# ─── Reports ─────────────────────────────────────────────────────────────────


def _fold_result(
    config: RunConfig,
    fold: int,
    n_train: int,
    scored: List[ScoredPair],
    probabilities: Optional[np.ndarray],
    baselines: Optional[Dict[str, np.ndarray]],
) -> FoldResult:
    mode = config.eval.mode
    targets = [_target(mode, s.true_label) for s in scored]
    predictions = [s.predicted for s in scored]
    result = FoldResult(
        fold=fold,
        n_train=n_train,
        n_test=len(scored),
        auroc=primary_auroc(mode, scored, probabilities),
        accuracy=_safe("accuracy", accuracy, predictions, targets),
        weighted_accuracy=_safe(
            "weighted_accuracy", weighted_accuracy, predictions, targets, [s.weight for s in scored]
        ),
    )
    if baselines is not None:
        labels = np.array([s.true_label for s in scored])
        result.baselines = baseline_aurocs(baselines, labels)
    logger.info(
        "Fold %d: %s=%s accuracy=%s (%d test pairs)",
        fold, MODE_METRIC[mode], result.auroc, result.accuracy, result.n_test,
    )
    return result


def aggregate(folds: Sequence[FoldResult]) -> Dict[str, Optional[float]]:
    """Mean and population standard deviation of each metric over folds.

    Folds where a metric is undefined are left out of that metric.
    """
    columns: Dict[str, List[Optional[float]]] = {
        m: [getattr(f, m) for f in folds] for m in _FOLD_METRICS
    }
    for name in BASELINES:
        columns[f"baseline_{name}"] = [f.baselines.get(name) for f in folds]
    out: Dict[str, Optional[float]] = {}
    for name, values in columns.items():
        defined = [v for v in values if v is not None]
        out[f"mean_{name}"] = float(np.mean(defined)) if defined else None
        out[f"std_{name}"] = float(np.std(defined)) if defined else None
    return out


def _reference(config: RunConfig, pairs: Sequence[PairSample]) -> Dict[str, float]:
    reference: Dict[str, float] = {}
    if pairs and all(p.id.startswith(TUEBINGEN_PREFIX) for p in pairs):
        reference["tuebingen_weighted_accuracy"] = REFERENCE_TUEBINGEN_WEIGHTED_ACCURACY
    if config.eval.mode == "chalearn":
        reference["chalearn_bidirectional_auc"] = REFERENCE_CHALEARN_BIDIRECTIONAL_AUC
    return reference


def _new_report(
    config: RunConfig, pairs: Sequence[PairSample], architecture: List[Dict[str, Any]]
) -> EvalReport:
    snapshot = config.to_dict()
    snapshot.pop("output_dir", None)
    snapshot["architecture"] = architecture
    return EvalReport(
        mode=config.eval.mode,
        metric=MODE_METRIC[config.eval.mode],
        config=snapshot,
        config_digest=config.digest(),
        dataset_digest=dataset_digest(pairs),
        reference=_reference(config, pairs),
    )


def run_benchmark(config: RunConfig) -> EvalReport:
    """Cross-validated evaluation of one configuration.

    Builds the dataset, splits it into ``eval.folds`` group-preserving
    folds, trains the mode's classifiers on each training part and scores
    the held-out part.

    Returns:
        EvalReport whose scores cover every pair exactly once.
    """
    pairs = prepare_pairs(load_pairs(config), config)
    matrices = build_matrices(pairs, config)
    ids = [p.id for p in pairs]
    splits = kfold_split(ids, config.eval.folds, config.seed)
    fold_seeds = spawn_seeds(config.seed, config.eval.folds)
    baselines = baseline_scores(pairs, config) if config.eval.baselines else None
    logger.info(
        "Benchmark: %d pairs, mode=%s, %d folds", len(pairs), config.eval.mode, config.eval.folds
    )

    report: Optional[EvalReport] = None
    for fold, (train_idx, test_idx) in enumerate(splits):
        train_pairs = [pairs[i] for i in train_idx]
        test_pairs = [pairs[i] for i in test_idx]
        results = fit_models(config, [matrices[i] for i in train_idx], train_pairs, fold_seeds[fold])
        models = {name: r.network for name, r in results.items()}
        if report is None:
            architecture = [s.to_dict() for s in next(iter(models.values())).specs]
            report = _new_report(config, pairs, architecture)

        scored, probabilities = score_pairs(
            config.eval.mode, models, [matrices[i] for i in test_idx], test_pairs
        )
        fold_baselines = (
            {name: values[test_idx] for name, values in baselines.items()} if baselines else None
        )
        report.folds.append(
            _fold_result(config, fold, len(train_idx), scored, probabilities, fold_baselines)
        )
        report.scores.extend(scored)

    report.aggregate = aggregate(report.folds)
    return report


def run_grid(config: RunConfig) -> List[Tuple[str, EvalReport]]:
    """One benchmark per simulation grid cell, in grid order."""
    return [(name, run_benchmark(cell)) for name, cell in cell_configs(config)]


def evaluate_models(config: RunConfig, models: Dict[str, Network]) -> EvalReport:
    """Score a whole dataset with already trained models.

    The report holds a single fold (index 0) covering every pair.
    """
    check_models(config, models)
    pairs = prepare_pairs(load_pairs(config), config)
    matrices = build_matrices(pairs, config)
    architecture = [s.to_dict() for s in next(iter(models.values())).specs]
    report = _new_report(config, pairs, architecture)
    baselines = baseline_scores(pairs, config) if config.eval.baselines else None
    scored, probabilities = score_pairs(config.eval.mode, models, matrices, pairs)
    report.folds.append(_fold_result(config, 0, 0, scored, probabilities, baselines))
    report.scores = scored
    report.aggregate = aggregate(report.folds)
    return report


def train_models(config: RunConfig) -> Dict[str, TrainResult]:
    """Train the mode's classifiers on the whole configured dataset."""
    pairs = prepare_pairs(load_pairs(config), config)
    matrices = build_matrices(pairs, config)
    return fit_models(config, matrices, pairs, config.seed)


# ─── Output Files ────────────────────────────────────────────────────────────


def model_paths(path: str, mode: str) -> Dict[str, str]:
    """Model file per classifier: ``<path>.causal``/``<path>.ind`` for chalearn."""
    names = [name for name, _ in MODE_CLASSIFIERS[mode]]
    if len(names) == 1:
        return {names[0]: path}
    return {name: f"{path}.{name}" for name in names}


def scores_frame(scored: Sequence[ScoredPair]) -> pd.DataFrame:
    rows = [{c: getattr(s, c) for c in SCORES_COLUMNS} for s in scored]
    return pd.DataFrame(rows, columns=list(SCORES_COLUMNS))


def history_frame(results: Dict[str, TrainResult]) -> pd.DataFrame:
    rows = [
        {"classifier": name, **asdict(record)}
        for name, result in results.items()
        for record in result.history
    ]
    return pd.DataFrame(rows, columns=list(HISTORY_COLUMNS))


def write_report(report: EvalReport, directory: str, stem: str = "report") -> Tuple[str, str]:
    """Write ``<stem>.json`` and ``<stem>_scores.csv`` into ``directory``.

    Returns:
        Tuple of (report path, scores path).
    """
    report_path = os.path.join(directory, f"{stem}.json")
    scores_path = os.path.join(directory, f"{stem}_scores.csv")
    write_json(report.to_dict(), report_path)
    write_csv(scores_frame(report.scores), scores_path, report.config_digest)
    return report_path, scores_path
