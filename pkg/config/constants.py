"""
Fixed constants for the NEPDF causal toolkit.

Centralizes label encodings, default hyperparameters, file-format magic
values and CSV headers used across pipelines, services and the CLI.
"""

from typing import Dict, FrozenSet, Tuple

# ─── Labels & Class Indices ──────────────────────────────────────────────────

CAUSAL: int = 1
REVERSE: int = -1
INDEPENDENT: int = 0

VALID_LABELS: FrozenSet[int] = frozenset({CAUSAL, REVERSE, INDEPENDENT})

# Label -> output column for each classifier family.
MULTICLASS_INDEX: Dict[int, int] = {CAUSAL: 0, REVERSE: 1, INDEPENDENT: 2}
DIRECTION_INDEX: Dict[int, int] = {CAUSAL: 0, REVERSE: 1}
# Column 0 is "dependent", column 1 "independent".
DEPENDENCE_INDEX: Dict[int, int] = {CAUSAL: 0, REVERSE: 0, INDEPENDENT: 1}

EVAL_MODES: Tuple[str, ...] = ("multiclass", "chalearn", "direction", "dependence")

# ─── NEPDF ───────────────────────────────────────────────────────────────────

DEFAULT_K: int = 16
MIN_K: int = 2
DEGENERATE_WIDTH: float = 1e-6
MASS_TOLERANCE: float = 1e-9
TRANSPOSE_SUFFIX: str = ":T"

# ─── Simulation ──────────────────────────────────────────────────────────────

STRUCTURES: Tuple[str, ...] = ("v", "chain", "reverse_v")
NOISE_MU_RANGE: Tuple[float, float] = (0.0, 10.0)
NOISE_SIGMA_RANGE: Tuple[float, float] = (0.0, 50.0)
DEFAULT_STEPS: int = 1000
SPLINE_KNOTS: int = 5

# Ordered pairs (a, b, label) emitted per simulated system.
STRUCTURE_LABELS: Dict[str, Tuple[Tuple[str, str, int], ...]] = {
    "v": (
        ("x", "y", CAUSAL), ("y", "x", REVERSE),
        ("x", "z", INDEPENDENT), ("z", "x", INDEPENDENT),
        ("z", "y", CAUSAL), ("y", "z", REVERSE),
    ),
    "chain": (
        ("x", "z", CAUSAL), ("z", "x", REVERSE),
        ("z", "y", CAUSAL), ("y", "z", REVERSE),
        ("x", "y", INDEPENDENT), ("y", "x", INDEPENDENT),
    ),
    # Labels follow the simulated equations (Y -> X, Y -> Z), not a copy of the V rows.
    "reverse_v": (
        ("y", "x", CAUSAL), ("x", "y", REVERSE),
        ("y", "z", CAUSAL), ("z", "y", REVERSE),
        ("x", "z", INDEPENDENT), ("z", "x", INDEPENDENT),
    ),
}

# ─── Network ─────────────────────────────────────────────────────────────────

LAYER_KINDS: Tuple[str, ...] = ("conv3x3", "maxpool2x2", "flatten", "dense", "output")
ACTIVATIONS: Tuple[str, ...] = ("relu", "none")

# Default stack for K=16: four 3x3 convolutions (a power of two) with two pools.
DEFAULT_ARCH: Tuple[Dict[str, object], ...] = (
    {"kind": "conv3x3", "units": 16, "activation": "relu"},
    {"kind": "conv3x3", "units": 16, "activation": "relu"},
    {"kind": "maxpool2x2"},
    {"kind": "conv3x3", "units": 32, "activation": "relu"},
    {"kind": "conv3x3", "units": 32, "activation": "relu"},
    {"kind": "maxpool2x2"},
    {"kind": "flatten"},
    {"kind": "dense", "units": 64, "activation": "relu"},
    {"kind": "output"},
)

PROB_FLOOR: float = 1e-12

# ─── Model File ──────────────────────────────────────────────────────────────

MODEL_MAGIC: bytes = b"NEPD"
MODEL_FORMAT_VERSION: int = 1

# ─── Evaluation ──────────────────────────────────────────────────────────────

DEFAULT_FOLDS: int = 5
DEFAULT_BIVARIATE_DEGREE: int = 3
GRADCHECK_STEP: float = 1e-4
GRADCHECK_TOLERANCE: float = 1e-4

# Published figures quoted next to user-supplied real-data runs.
REFERENCE_TUEBINGEN_WEIGHTED_ACCURACY: float = 0.784
REFERENCE_CHALEARN_BIDIRECTIONAL_AUC: float = 0.74

# Id prefix of pairs converted from a Tuebingen-style directory.
TUEBINGEN_PREFIX: str = "tuebingen-"

# ─── File Formats ────────────────────────────────────────────────────────────

PAIR_FILE_COLUMNS: Tuple[str, ...] = ("id", "label", "weight", "x", "y")
SCORES_COLUMNS: Tuple[str, ...] = ("id", "true_label", "score_causal", "y_ind", "y_pred")
HISTORY_COLUMNS: Tuple[str, ...] = (
    "classifier", "epoch", "train_loss", "val_loss", "val_accuracy",
)
