"""
Labeled causal-pair generators.

Two families:

* Three-variable time-series structural equation models (V, chain and
  reverse-V structures) whose six ordered variable pairs carry known
  causal labels.
* Synthetic cause-effect pairs: a Gaussian-mixture cause pushed through a
  random 5-knot cubic Hermite spline plus (optionally heteroscedastic)
  Gaussian noise.

Every generator owns a seeded ``numpy.random.Generator``; equal seeds give
bit-identical output.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Tuple

import numpy as np

from config.constants import (
    DEFAULT_STEPS,
    NOISE_MU_RANGE,
    NOISE_SIGMA_RANGE,
    REVERSE,
    SPLINE_KNOTS,
    STRUCTURE_LABELS,
    STRUCTURES,
)
from pipelines.nepdf import PairSample
from pipelines.spline import HermiteSpline
from utils.errors import InvalidParams
from utils.rng import get_rng, spawn_seeds

logger = logging.getLogger(__name__)

Range = Tuple[float, float]


# ─── Structural Equation Models ──────────────────────────────────────────────


@dataclass(frozen=True)
class SemParams:
    """Parameters of one structural equation simulation.

    Attributes:
        structure: ``"v"``, ``"chain"`` or ``"reverse_v"``.
        alpha: Persistence weight (all structures).
        beta: Parent-coupling weight (V) or persistence weight (chain, reverse-V).
        gamma: Coupling weight for chain and reverse-V; ignored for V.
        steps: Length T of the returned series.
        seed: Generator seed.
        burn_in: Leading steps simulated and then discarded.
    """

    structure: str = "v"
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.0
    steps: int = DEFAULT_STEPS
    seed: int = 0
    burn_in: int = 0

    def validate(self) -> None:
        """Check ranges and that every noise weight is nonnegative.

        Raises:
            InvalidParams: Naming the violated constraint.
        """
        if self.structure not in STRUCTURES:
            raise InvalidParams(
                f"Unknown structure {self.structure!r}; expected one of {', '.join(STRUCTURES)}"
            )
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParams(f"{name} must lie in [0, 1], got {value}")
        if self.steps < 1:
            raise InvalidParams(f"steps must be positive, got {self.steps}")
        if self.burn_in < 0:
            raise InvalidParams(f"burn_in must be >= 0, got {self.burn_in}")

        a, b, g = self.alpha, self.beta, self.gamma
        if self.structure == "v" and a + b > 1:
            raise InvalidParams(f"V structure requires alpha + beta <= 1 (got {a + b:g})")
        if self.structure == "chain":
            if a + g > 1:
                raise InvalidParams(f"Chain structure requires alpha + gamma <= 1 (got {a + g:g})")
            if b + g > 1:
                raise InvalidParams(f"Chain structure requires beta + gamma <= 1 (got {b + g:g})")
        if self.structure == "reverse_v" and b + g > 1:
            raise InvalidParams(f"Reverse-V structure requires beta + gamma <= 1 (got {b + g:g})")


@dataclass(frozen=True, eq=False)
class TripleSeries:
    """Simulated series for X, Y and Z, each of length ``params.steps``."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    params: SemParams

    def series(self, name: str) -> np.ndarray:
        return {"x": self.x, "y": self.y, "z": self.z}[name]


def step_noise(
    rng: np.random.Generator,
    mu_range: Range = NOISE_MU_RANGE,
    sigma_range: Range = NOISE_SIGMA_RANGE,
) -> float:
    """One draw of the per-step noise: fresh mu, sigma, then N(mu, sigma).

    Args:
        rng: Seeded generator.
        mu_range: Uniform range of the mean.
        sigma_range: Uniform range of the standard deviation.

    Returns:
        A single noise value.
    """
    mu = rng.uniform(*mu_range)
    sigma = rng.uniform(*sigma_range)
    return float(rng.normal(mu, sigma))


def draw_step_noise(
    rng: np.random.Generator,
    size: int,
    mu_range: Range = NOISE_MU_RANGE,
    sigma_range: Range = NOISE_SIGMA_RANGE,
) -> np.ndarray:
    """Vectorized ``step_noise``: ``size`` draws, each with its own mu, sigma."""
    mu = rng.uniform(mu_range[0], mu_range[1], size)
    sigma = rng.uniform(sigma_range[0], sigma_range[1], size)
    return rng.normal(mu, sigma)


def _init_state(params: SemParams) -> Tuple[int, Dict[str, np.ndarray]]:
    """Allocate series with step-noise initial values and per-step noise."""
    rng = get_rng(params.seed)
    total = params.steps + params.burn_in
    series = {name: np.empty(total, dtype=np.float64) for name in ("x", "y", "z")}
    for name in ("x", "y", "z"):
        series[name][0] = step_noise(rng)
    noise = {name: draw_step_noise(rng, total) for name in ("x", "y", "z")}
    return total, {**series, **{f"{k}_noise": v for k, v in noise.items()}}


def _finish(params: SemParams, state: Dict[str, np.ndarray]) -> TripleSeries:
    start = params.burn_in
    return TripleSeries(
        x=state["x"][start:].copy(),
        y=state["y"][start:].copy(),
        z=state["z"][start:].copy(),
        params=params,
    )


def simulate_v(params: SemParams) -> TripleSeries:
    """X -> Y <- Z with additive non-Gaussian noise.

    X_t = a X_{t-1} + (1-a) Xn_t
    Z_t = a Z_{t-1} + (1-a) Zn_t
    Y_t = a Y_{t-1} + (b/2)(X_{t-1} + Z_{t-1}) + (1-b-a) Yn_t

    Raises:
        InvalidParams: If alpha + beta > 1 or a value is out of range.
    """
    params = replace(params, structure="v")
    params.validate()
    total, s = _init_state(params)
    a, b = params.alpha, params.beta
    x, y, z = s["x"], s["y"], s["z"]
    xn, yn, zn = s["x_noise"], s["y_noise"], s["z_noise"]
    for t in range(1, total):
        x[t] = a * x[t - 1] + (1 - a) * xn[t]
        z[t] = a * z[t - 1] + (1 - a) * zn[t]
        y[t] = a * y[t - 1] + (b / 2) * (x[t - 1] + z[t - 1]) + (1 - b - a) * yn[t]
    return _finish(params, s)


def simulate_chain(params: SemParams) -> TripleSeries:
    """X -> Z -> Y with nonlinear couplings.

    X_t = a X_{t-1} + (1-a) Xn_t
    Z_t = b Z_{t-1} + g (X_{t-1} - 1)^2 + (1-g-a) Zn_t
    Y_t = b Z_{t-1} + (g/2)(cos Z_{t-1} + sin Z_{t-1}) + (1-b-g) Yn_t

    Raises:
        InvalidParams: If alpha + gamma > 1 or beta + gamma > 1.
    """
    params = replace(params, structure="chain")
    params.validate()
    total, s = _init_state(params)
    a, b, g = params.alpha, params.beta, params.gamma
    x, y, z = s["x"], s["y"], s["z"]
    xn, yn, zn = s["x_noise"], s["y_noise"], s["z_noise"]
    for t in range(1, total):
        x[t] = a * x[t - 1] + (1 - a) * xn[t]
        z[t] = b * z[t - 1] + g * (x[t - 1] - 1) ** 2 + (1 - g - a) * zn[t]
        zp = z[t - 1]
        y[t] = b * zp + (g / 2) * (math.cos(zp) + math.sin(zp)) + (1 - b - g) * yn[t]
    return _finish(params, s)


def simulate_reverse_v(params: SemParams) -> TripleSeries:
    """X <- Y -> Z: one common parent.

    Y_t = a Y_{t-1} + (1-a) Yn_t
    X_t = b X_{t-1} + g Y_{t-1} + (1-b-g) Xn_t
    Z_t = b Z_{t-1} + g Y_{t-1} + (1-b-g) Zn_t

    Raises:
        InvalidParams: If beta + gamma > 1.
    """
    params = replace(params, structure="reverse_v")
    params.validate()
    total, s = _init_state(params)
    a, b, g = params.alpha, params.beta, params.gamma
    x, y, z = s["x"], s["y"], s["z"]
    xn, yn, zn = s["x_noise"], s["y_noise"], s["z_noise"]
    for t in range(1, total):
        y[t] = a * y[t - 1] + (1 - a) * yn[t]
        x[t] = b * x[t - 1] + g * y[t - 1] + (1 - b - g) * xn[t]
        z[t] = b * z[t - 1] + g * y[t - 1] + (1 - b - g) * zn[t]
    return _finish(params, s)


_SIMULATORS = {
    "v": simulate_v,
    "chain": simulate_chain,
    "reverse_v": simulate_reverse_v,
}


def simulate(params: SemParams) -> TripleSeries:
    """Dispatch to the simulator for ``params.structure``."""
    params.validate()
    return _SIMULATORS[params.structure](params)


def label_pairs(ts: TripleSeries, lag: int = 0, prefix: str = "") -> List[PairSample]:
    """The six ordered variable pairs of a simulation with their labels.

    Args:
        ts: Simulated series.
        lag: Pair (a_{t-lag}, b_t) instead of contemporaneous values.
        prefix: Pair-id prefix; defaults to ``<structure>-<seed>``.

    Returns:
        Six PairSamples in the structure's published order, ids
        ``<prefix>:<A><B>``.
    """
    if lag < 0 or lag >= ts.params.steps:
        raise InvalidParams(f"lag must lie in [0, {ts.params.steps - 1}], got {lag}")
    prefix = prefix or f"{ts.params.structure}-{ts.params.seed}"
    n = ts.params.steps - lag
    pairs = []
    for a, b, label in STRUCTURE_LABELS[ts.params.structure]:
        pairs.append(
            PairSample(
                id=f"{prefix}:{a.upper()}{b.upper()}",
                x=ts.series(a)[:n],
                y=ts.series(b)[lag:],
                label=label,
            )
        )
    return pairs


def simulate_systems(params: SemParams, systems: int) -> List[TripleSeries]:
    """Simulate independent systems with seeds spawned from ``params.seed``."""
    params.validate()
    if systems < 1:
        raise InvalidParams(f"systems must be positive, got {systems}")
    seeds = spawn_seeds(params.seed, systems)
    return [simulate(replace(params, seed=s)) for s in seeds]


def sem_dataset(params: SemParams, systems: int, lag: int = 0) -> List[PairSample]:
    """Labeled pairs from ``systems`` simulations: six per system.

    Pair ids are ``<structure>-<system index>:<A><B>`` so all pairs of one
    system share a grouping key.
    """
    pairs: List[PairSample] = []
    for i, ts in enumerate(simulate_systems(params, systems)):
        pairs.extend(label_pairs(ts, lag=lag, prefix=f"{params.structure}-{i:06d}"))
    logger.info(
        "Simulated %d %s systems (T=%d) -> %d pairs", systems, params.structure, params.steps, len(pairs)
    )
    return pairs


# ─── Synthetic Cause-Effect Pairs ────────────────────────────────────────────


@dataclass(frozen=True)
class SynthPairConfig:
    """Generator settings for synthetic cause-effect pairs.

    Attributes:
        n_samples: Number of pairs.
        m_range: Inclusive range of observations per pair.
        k_range: Inclusive range of mixture components.
        mean_range: Uniform range of component means.
        std_range: Uniform range of component standard deviations.
        noise_variance_range: Uniform range of the noise variance v.
        knots: Spline knots (fixed at 5).
        seed: Base seed; pair i uses the i-th spawned child seed.
        mechanism: ``"spline"`` or ``"identity"`` (f(x) = x).
        heteroscedastic: Scale noise by a random [0, 1]-valued spline of x.
    """

    n_samples: int = 15000
    m_range: Tuple[int, int] = (100, 1000)
    k_range: Tuple[int, int] = (1, 5)
    mean_range: Range = (0.0, 5.0)
    std_range: Range = (0.0, 5.0)
    noise_variance_range: Range = (0.0, 5.0)
    knots: int = SPLINE_KNOTS
    seed: int = 0
    mechanism: str = "spline"
    heteroscedastic: bool = True

    def validate(self) -> None:
        """Raises InvalidParams when a range or setting is invalid."""
        if self.n_samples < 1:
            raise InvalidParams(f"n_samples must be positive, got {self.n_samples}")
        if self.knots != SPLINE_KNOTS:
            raise InvalidParams(f"knots is fixed at {SPLINE_KNOTS}, got {self.knots}")
        if self.mechanism not in ("spline", "identity"):
            raise InvalidParams(f"Unknown mechanism {self.mechanism!r}")
        for name in ("m_range", "k_range", "mean_range", "std_range", "noise_variance_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidParams(f"{name} lower bound exceeds upper bound: {lo} > {hi}")
        if self.m_range[0] < 1 or self.k_range[0] < 1:
            raise InvalidParams("m_range and k_range must start at 1 or more")
        if self.std_range[0] < 0 or self.noise_variance_range[0] < 0:
            raise InvalidParams("std_range and noise_variance_range must be nonnegative")


def _random_mechanism(rng: np.random.Generator, lo: float, hi: float, knots: int) -> HermiteSpline:
    knots_x = np.linspace(lo, hi, knots)
    spacing = knots_x[1] - knots_x[0]
    knots_y = rng.standard_normal(knots)
    # Tangent times spacing is standard normal, so slopes match the knot scale.
    tangents = rng.standard_normal(knots) / spacing
    return HermiteSpline(knots_x, knots_y, tangents)


def _noise_profile(rng: np.random.Generator, lo: float, hi: float, knots: int) -> HermiteSpline:
    # Zero tangents keep each segment between its knot values, so within [0, 1].
    return HermiteSpline(np.linspace(lo, hi, knots), rng.uniform(0.0, 1.0, knots), np.zeros(knots))


def _synthetic_pair(cfg: SynthPairConfig, index: int, seed: int) -> PairSample:
    rng = get_rng(seed)

    k = int(rng.integers(cfg.k_range[0], cfg.k_range[1] + 1))
    weights = rng.dirichlet(np.ones(k))
    means = rng.uniform(cfg.mean_range[0], cfg.mean_range[1], k)
    stds = rng.uniform(cfg.std_range[0], cfg.std_range[1], k)
    m = int(rng.integers(cfg.m_range[0], cfg.m_range[1] + 1))
    component = rng.choice(k, size=m, p=weights)
    x = rng.normal(means[component], stds[component])

    spread = float(x.std())
    lo, hi = float(x.min()) - spread, float(x.max()) + spread
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0

    if cfg.mechanism == "spline":
        fx = _random_mechanism(rng, lo, hi, cfg.knots)(x)
    else:
        fx = x

    variance = rng.uniform(cfg.noise_variance_range[0], cfg.noise_variance_range[1])
    e = rng.normal(0.0, math.sqrt(variance), m)
    if cfg.heteroscedastic:
        e = _noise_profile(rng, lo, hi, cfg.knots)(x) * e

    return PairSample(id=f"synth-{index:06d}", x=x, y=fx + e, label=REVERSE)


def gen_synthetic_pairs(cfg: SynthPairConfig) -> List[PairSample]:
    """Generate ``cfg.n_samples`` synthetic cause-effect pairs.

    Each pair is emitted as (cause, effect) with label -1; the (effect,
    cause) twin with label 1 comes from transpose augmentation.

    Args:
        cfg: Generator settings.

    Returns:
        List of PairSamples with ids ``synth-<index>``.
    """
    cfg.validate()
    seeds = spawn_seeds(cfg.seed, cfg.n_samples)
    pairs = [_synthetic_pair(cfg, i, s) for i, s in enumerate(seeds)]
    logger.info("Generated %d synthetic cause-effect pairs", len(pairs))
    return pairs
