"""
Classical pair scores used as reference columns in benchmark reports.

Pearson correlation and histogram mutual information measure dependence;
the bivariate polynomial fit compares forward and backward regression
residuals to score direction.
"""

import logging
from typing import Union

import numpy as np
from scipy.special import rel_entr
from scipy.stats import pearsonr

from config.constants import DEFAULT_BIVARIATE_DEGREE, MASS_TOLERANCE
from pipelines.nepdf import NepdfMatrix, PairSample
from utils.errors import LengthMismatch, NotADistribution, SingularFit, ZeroVariance

logger = logging.getLogger(__name__)

MSE_FLOOR = 1e-12


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation coefficient.

    Raises:
        LengthMismatch: If the inputs differ in length or have fewer than 2 values.
        ZeroVariance: If either input is constant.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise LengthMismatch("pearson needs two equal-length series of at least 2 values")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ZeroVariance("Correlation is undefined for a constant series")
    r = pearsonr(a, b).statistic
    return float(np.clip(r, -1.0, 1.0))


def mutual_information(m: Union[NepdfMatrix, np.ndarray]) -> float:
    """Plug-in mutual information (nats) of a K x K joint histogram.

    Args:
        m: Pre-normalization EPDF (entries sum to 1).

    Raises:
        NotADistribution: If ``m`` is a normalized NEPDF, has negative
            entries or does not sum to 1.
    """
    if isinstance(m, NepdfMatrix):
        if m.normalized:
            raise NotADistribution("Mutual information needs the EPDF, not the normalized NEPDF")
        p = m.values
    else:
        p = np.asarray(m, dtype=np.float64)
    if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1.0) > MASS_TOLERANCE:
        raise NotADistribution("Matrix must be nonnegative and sum to 1")

    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    return max(float(rel_entr(p, px * py).sum()), 0.0)


def _standardize(v: np.ndarray) -> np.ndarray:
    std = v.std()
    if std == 0:
        raise SingularFit("Cannot fit a polynomial to a constant series")
    return (v - v.mean()) / std


def _fit_mse(u: np.ndarray, v: np.ndarray, degree: int) -> float:
    design = np.vander(u, degree + 1)
    coef, _, rank, _ = np.linalg.lstsq(design, v, rcond=None)
    if rank < degree + 1:
        raise SingularFit(f"Degree-{degree} design matrix has rank {rank}")
    residual = v - design @ coef
    return max(float(np.mean(residual**2)), MSE_FLOOR)


def bivariate_fit_score(pair: PairSample, degree: int = DEFAULT_BIVARIATE_DEGREE) -> float:
    """Direction score from polynomial regressions in both directions.

    Both variables are standardized, then ``y`` is fit on ``x`` and ``x`` on
    ``y``. The score is log(MSE of x|y) - log(MSE of y|x), so a smaller
    forward residual gives a positive score. Swapping the axes negates it.

    Args:
        pair: Pair to score.
        degree: Polynomial degree.

    Returns:
        Score; positive suggests x -> y.

    Raises:
        SingularFit: If n < degree + 2 or either design matrix is rank deficient.
    """
    if pair.n_obs < degree + 2:
        raise SingularFit(f"Degree-{degree} fit needs at least {degree + 2} observations")
    u = _standardize(pair.x)
    v = _standardize(pair.y)
    forward = _fit_mse(u, v, degree)
    backward = _fit_mse(v, u, degree)
    return float(np.log(backward) - np.log(forward))
