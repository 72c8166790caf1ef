"""
NEPDF construction pipeline.

Turns a paired observation vector into a K x K empirical joint density
(EPDF), normalizes it to [0, 1] (NEPDF) and provides the transpose
augmentation used to teach the classifier both causal directions.

Row index of every matrix is the x-bin, column index the y-bin. Each
axis gets its own uniform grid over that axis's observed range, in raw
or log10 space.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.constants import (
    DEFAULT_K,
    DEGENERATE_WIDTH,
    MIN_K,
    TRANSPOSE_SUFFIX,
    VALID_LABELS,
)
from config.settings import settings
from utils.errors import (
    EmptyInput,
    EmptyPair,
    InvalidK,
    InvalidLabel,
    LengthMismatch,
    NonPositiveForLog,
)

logger = logging.getLogger(__name__)


# ─── Data Model ──────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class PairSample:
    """One labeled variable pair with n joint observations.

    Attributes:
        id: Pair identifier. The part before the first ``:`` groups a pair
            with its relatives (transpose twin, same simulated system).
        x: Observations of the first variable.
        y: Observations of the second variable, same length as ``x``.
        label: 1 (x causes y), -1 (y causes x) or 0 (independent).
        weight: Nonnegative weight used by weighted accuracy.
    """

    id: str
    x: np.ndarray
    y: np.ndarray
    label: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
            raise LengthMismatch(
                f"Pair {self.id}: x has {x.size} values, y has {y.size}"
            )
        if len(x) == 0:
            raise EmptyPair(f"Pair {self.id} has no observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"Pair {self.id} contains non-finite values")
        if self.label not in VALID_LABELS:
            raise InvalidLabel(f"Pair {self.id}: label {self.label} not in {{1, -1, 0}}")
        if not self.weight >= 0 or not math.isfinite(self.weight):
            raise ValueError(f"Pair {self.id}: weight must be finite and >= 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def n_obs(self) -> int:
        """Number of joint observations."""
        return len(self.x)


@dataclass(frozen=True, eq=False)
class BinGrid:
    """Per-axis bin edges of a NEPDF."""

    edges_x: np.ndarray
    edges_y: np.ndarray
    log_space: bool = False

    @property
    def k(self) -> int:
        return len(self.edges_x) - 1


@dataclass(frozen=True, eq=False)
class NepdfMatrix:
    """K x K empirical density with its bin grid.

    Before normalization entries are multiples of 1/n_obs summing to 1.
    After normalization entries lie in [0, 1] with maximum exactly 1.
    """

    values: np.ndarray
    grid: BinGrid
    n_obs: int
    normalized: bool

    @property
    def k(self) -> int:
        return self.values.shape[0]


# ─── Operations ──────────────────────────────────────────────────────────────


def _is_missing(value: Optional[float]) -> bool:
    if value is None:
        return True
    try:
        return not math.isfinite(float(value))
    except (TypeError, ValueError):
        return True


def clean_pair(
    raw_x: Sequence[Optional[float]], raw_y: Sequence[Optional[float]]
) -> Tuple[np.ndarray, np.ndarray]:
    """Drop every position where either value is missing or non-finite.

    Args:
        raw_x: First variable, ``None``/NaN marking missing entries.
        raw_y: Second variable, same length as ``raw_x``.

    Returns:
        Tuple of float arrays (x, y) with order preserved.

    Raises:
        LengthMismatch: If the inputs differ in length.
        EmptyPair: If no complete position survives.
    """
    if len(raw_x) != len(raw_y):
        raise LengthMismatch(f"x has {len(raw_x)} values, y has {len(raw_y)}")

    keep = [
        i for i in range(len(raw_x))
        if not _is_missing(raw_x[i]) and not _is_missing(raw_y[i])
    ]
    if not keep:
        raise EmptyPair("No complete observations after removing missing values")

    x = np.array([float(raw_x[i]) for i in keep], dtype=np.float64)
    y = np.array([float(raw_y[i]) for i in keep], dtype=np.float64)
    return x, y


def _degenerate_edges(center: float, k: int) -> np.ndarray:
    eps = max(abs(center), 1.0) * DEGENERATE_WIDTH
    return np.linspace(center - eps, center + eps, k + 1)


def compute_bin_edges(values: Sequence[float], k: int, log_space: bool = False) -> np.ndarray:
    """Uniform bin edges spanning the observed range.

    Args:
        values: Finite observations of one axis.
        k: Number of bins.
        log_space: Divide the range uniformly in log10 space.

    Returns:
        Array of K+1 strictly increasing edges; first and last edge equal
        the minimum and maximum value unless the range is degenerate.

    Raises:
        EmptyInput: If ``values`` is empty.
        InvalidK: If ``k`` < 1.
        NonPositiveForLog: If ``log_space`` and any value <= 0.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("Cannot bin an empty sequence")
    if k < 1:
        raise InvalidK(f"K must be positive, got {k}")

    lo, hi = float(arr.min()), float(arr.max())

    if log_space:
        if lo <= 0:
            raise NonPositiveForLog(f"Log-space binning needs positive values, min is {lo}")
        log_lo, log_hi = math.log10(lo), math.log10(hi)
        if log_lo == log_hi:
            return np.power(10.0, _degenerate_edges(log_lo, k))
        edges = np.power(10.0, np.linspace(log_lo, log_hi, k + 1))
        edges[0], edges[-1] = lo, hi
    else:
        if lo == hi:
            return _degenerate_edges(lo, k)
        edges = np.linspace(lo, hi, k + 1)

    if np.any(np.diff(edges) <= 0):
        # Range too narrow for K distinct floats.
        center = math.log10(lo) if log_space else lo
        degenerate = _degenerate_edges(center, k)
        return np.power(10.0, degenerate) if log_space else degenerate
    return edges


def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # Half-open bins, last bin closed on the right; out-of-grid values clamp.
    k = len(edges) - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, k - 1)


def build_epdf(pair: PairSample, k: int = DEFAULT_K, log_space: bool = False) -> NepdfMatrix:
    """Count a pair's observations into a K x K mass-1 histogram.

    Args:
        pair: Cleaned pair.
        k: Bins per axis.
        log_space: Use log10-uniform bins on both axes.

    Returns:
        Un-normalized NepdfMatrix whose entries sum to 1.

    Raises:
        InvalidK: If ``k`` < 2.
    """
    if k < MIN_K:
        raise InvalidK(f"K must be >= {MIN_K}, got {k}")

    edges_x = compute_bin_edges(pair.x, k, log_space)
    edges_y = compute_bin_edges(pair.y, k, log_space)
    ix = _bin_index(pair.x, edges_x)
    iy = _bin_index(pair.y, edges_y)

    counts = np.bincount(ix * k + iy, minlength=k * k).reshape(k, k)
    values = counts.astype(np.float64) / pair.n_obs
    return NepdfMatrix(
        values=values,
        grid=BinGrid(edges_x=edges_x, edges_y=edges_y, log_space=log_space),
        n_obs=pair.n_obs,
        normalized=False,
    )


def normalize_epdf(m: NepdfMatrix, log_transform: bool = False) -> NepdfMatrix:
    """Scale an EPDF so its largest entry is exactly 1.

    Args:
        m: Un-normalized matrix.
        log_transform: Apply ln(1 + p) elementwise before scaling.

    Returns:
        Normalized copy of ``m``.
    """
    values = np.log1p(m.values) if log_transform else m.values.copy()
    peak = values.max()
    if peak > 0:
        values = values / peak
    return replace(m, values=values, normalized=True)


def build_nepdf(
    pair: PairSample,
    k: int = DEFAULT_K,
    log_space: bool = False,
    log_transform: bool = False,
) -> NepdfMatrix:
    """Build the normalized empirical density of a pair.

    Args:
        pair: Cleaned pair.
        k: Bins per axis (>= 2).
        log_space: Log10-uniform bins.
        log_transform: ln(1 + p) before max-normalization.

    Returns:
        Normalized NepdfMatrix.
    """
    return normalize_epdf(build_epdf(pair, k, log_space), log_transform)


def transpose_nepdf(m: NepdfMatrix) -> NepdfMatrix:
    """Swap the roles of x and y: transpose values and exchange grid axes."""
    return replace(
        m,
        values=m.values.T.copy(),
        grid=BinGrid(edges_x=m.grid.edges_y, edges_y=m.grid.edges_x, log_space=m.grid.log_space),
    )


def _check_label(label: int) -> int:
    if label not in VALID_LABELS:
        raise InvalidLabel(f"Label {label} not in {{1, -1, 0}}")
    return int(label)


def augment_with_transposes(
    dataset: Sequence[Tuple[NepdfMatrix, int]],
) -> List[Tuple[NepdfMatrix, int]]:
    """Append the transpose of every matrix with its label negated.

    Args:
        dataset: (matrix, label) entries.

    Returns:
        The original entries followed by their transposed twins; 0 stays 0.

    Raises:
        InvalidLabel: If any label is outside {1, -1, 0}.
    """
    originals = [(m, _check_label(label)) for m, label in dataset]
    twins = [(transpose_nepdf(m), -label if label else 0) for m, label in originals]
    return originals + twins


def swap_pair(pair: PairSample) -> PairSample:
    """The (y, x) view of a pair: axes exchanged, label negated."""
    return PairSample(
        id=f"{pair.id}{TRANSPOSE_SUFFIX}",
        x=pair.y,
        y=pair.x,
        label=-pair.label if pair.label else 0,
        weight=pair.weight,
    )


def base_id(pair_id: str) -> str:
    """Grouping key of a pair id: everything before the first ``:``."""
    return pair_id.split(":", 1)[0]


def build_dataset(
    pairs: Sequence[PairSample],
    k: int = DEFAULT_K,
    log_space: bool = False,
    log_transform: bool = False,
    threads: Optional[int] = None,
) -> List[NepdfMatrix]:
    """Build NEPDFs for many pairs concurrently, preserving input order.

    Args:
        pairs: Cleaned pairs.
        k: Bins per axis.
        log_space: Log10-uniform bins.
        log_transform: ln(1 + p) before normalization.
        threads: Worker cap; defaults to ``NEPDF_THREADS``.

    Returns:
        One normalized matrix per pair.
    """
    workers = threads if threads and threads > 0 else settings.parallel.workers
    logger.debug("Building %d NEPDFs (K=%d) with %d workers", len(pairs), k, workers)
    if workers == 1 or len(pairs) < 2:
        return [build_nepdf(p, k, log_space, log_transform) for p in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: build_nepdf(p, k, log_space, log_transform), pairs))


def nepdf_stack(matrices: Sequence[NepdfMatrix], dtype: type = np.float32) -> np.ndarray:
    """Stack matrices into a B x K x K array for the network."""
    if not matrices:
        return np.zeros((0, 0, 0), dtype=dtype)
    return np.stack([m.values for m in matrices]).astype(dtype)
