"""
Finite-difference gradient checker.

Compares the analytic gradients of ``Network.gradients`` with central
differences on a small double-precision network. Probe batches that land
within a margin of a ReLU or max-pool kink are redrawn, since finite
differences straddling a kink do not estimate the derivative.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config.constants import GRADCHECK_STEP, GRADCHECK_TOLERANCE
from services.network import Network, init_network, loss, one_hot
from utils.errors import NoKinkFreeBatch
from utils.rng import get_rng

logger = logging.getLogger(__name__)

CHECK_INPUT_SIZE = 8
CHECK_BATCH = 2
CHECK_ARCH = (
    {"kind": "conv3x3", "units": 3, "activation": "relu"},
    {"kind": "maxpool2x2"},
    {"kind": "flatten"},
    {"kind": "dense", "units": 6, "activation": "relu"},
    {"kind": "output"},
)
KINK_MARGIN = 1e-3
MAX_PROBES = 200
# Gradients below this magnitude are compared in absolute terms.
ABS_FLOOR = 1e-4


@dataclass
class ParamCheck:
    """Result for one parameter array."""

    name: str
    entries: int
    max_rel_error: float
    passed: bool


@dataclass
class GradCheckReport:
    """Per-parameter results of a gradient check."""

    checks: List[ParamCheck] = field(default_factory=list)
    tolerance: float = GRADCHECK_TOLERANCE
    step: float = GRADCHECK_STEP

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


def _probe(net: Network, rng: np.random.Generator) -> tuple:
    for attempt in range(1, MAX_PROBES + 1):
        batch = rng.uniform(0.0, 1.0, size=(CHECK_BATCH, net.input_size, net.input_size))
        targets = one_hot(rng.integers(0, net.n_classes, CHECK_BATCH), net.n_classes)
        net.forward(batch)
        if net.kink_margin() > KINK_MARGIN:
            logger.debug("Accepted probe batch after %d draws", attempt)
            return batch, targets
    raise NoKinkFreeBatch(f"No kink-free input batch found in {MAX_PROBES} draws")


def gradient_check(
    seed: int = 0,
    step: float = GRADCHECK_STEP,
    tolerance: float = GRADCHECK_TOLERANCE,
    corrupt_layer: Optional[int] = None,
    net: Optional[Network] = None,
) -> GradCheckReport:
    """Compare analytic and central-difference gradients for every parameter.

    Args:
        seed: Seed for the network and the probe batch.
        step: Finite-difference step h.
        tolerance: Maximum allowed relative error.
        corrupt_layer: Index of a layer whose analytic gradients are
            deliberately perturbed; a mutation hook for tests.
        net: Network to check; defaults to a conv/pool/dense net on 8x8
            inputs. Should use float64 parameters.

    Returns:
        GradCheckReport listing each parameter array exactly once.

    Raises:
        NoKinkFreeBatch: If every drawn input batch sits near a kink.
    """
    if net is None:
        net = init_network(CHECK_INPUT_SIZE, 3, arch=CHECK_ARCH, seed=seed, dtype=np.float64)
    rng = get_rng(seed + 1)
    batch, targets = _probe(net, rng)

    _, analytic = net.gradients(batch, targets)
    report = GradCheckReport(tolerance=tolerance, step=step)

    for name, param, grad in zip(net.parameter_names(), net.parameters(), analytic):
        grad = grad.astype(np.float64)
        if corrupt_layer is not None and name.startswith(f"{corrupt_layer}:"):
            grad = grad * 1.01 + 1e-3

        numeric = np.zeros_like(grad)
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + step
            plus = loss(net.forward(batch), targets)
            param[idx] = original - step
            minus = loss(net.forward(batch), targets)
            param[idx] = original
            numeric[idx] = (plus - minus) / (2 * step)

        scale = np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), ABS_FLOOR)
        max_rel = float((np.abs(grad - numeric) / scale).max()) if grad.size else 0.0
        report.checks.append(ParamCheck(name, grad.size, max_rel, max_rel < tolerance))
        logger.debug("%s: max relative error %.3e", name, max_rel)

    return report
