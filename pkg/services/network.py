"""
Convolutional classifier over K x K NEPDF inputs.

A ``Network`` is an ordered stack of layers built from ``LayerSpec``
descriptions. It maps a batch of B x K x K matrices to B x n_classes
probabilities and computes exact gradients of the batch-mean
cross-entropy for every parameter array.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import ACTIVATIONS, DEFAULT_ARCH, LAYER_KINDS, PROB_FLOOR
from services.layers import Conv3x3, Dense, Flatten, Layer, LayerSpec, MaxPool2x2, Output
from utils.errors import BadArchitecture, ShapeMismatch
from utils.rng import get_rng

logger = logging.getLogger(__name__)

ArchLike = Sequence[Union[LayerSpec, Dict[str, Any]]]

SCHEMES: Dict[str, int] = {"multiclass": 3, "direction": 2, "dependence": 2}


class Network:
    """Layer stack with parameters.

    Attributes:
        specs: Declared layer descriptions.
        layers: Instantiated layers.
        input_size: K of the K x K input.
        n_classes: 2 (logistic head) or 3 (softmax head).
        scheme: Classifier family: ``multiclass``, ``direction`` or ``dependence``.
        seed: Initialization seed.
        dtype: Parameter precision.
    """

    def __init__(
        self,
        specs: List[LayerSpec],
        layers: List[Layer],
        input_size: int,
        n_classes: int,
        scheme: str,
        seed: int,
        dtype: Any,
    ) -> None:
        self.specs = specs
        self.layers = layers
        self.input_size = input_size
        self.n_classes = n_classes
        self.scheme = scheme
        self.seed = seed
        self.dtype = np.dtype(dtype)

    # ─── Parameters ───────────────────────────────────────────────────────

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in declaration order (live references)."""
        return [p for layer in self.layers for p in layer.params]

    def parameter_names(self) -> List[str]:
        """Names like ``0:conv3x3.weight`` aligned with ``parameters()``."""
        return [
            f"{i}:{layer.kind}.{name}"
            for i, layer in enumerate(self.layers)
            for name in layer.param_names
        ]

    def snapshot(self) -> List[np.ndarray]:
        """Copies of all parameter arrays."""
        return [p.copy() for p in self.parameters()]

    def set_parameters(self, values: Sequence[np.ndarray]) -> None:
        """Overwrite parameters in place.

        Raises:
            ShapeMismatch: If the count or any shape differs.
        """
        params = self.parameters()
        if len(values) != len(params):
            raise ShapeMismatch(f"Expected {len(params)} parameter arrays, got {len(values)}")
        for target, value in zip(params, values):
            if target.shape != np.shape(value):
                raise ShapeMismatch(f"Parameter shape {np.shape(value)} != expected {target.shape}")
            target[...] = value

    # ─── Passes ───────────────────────────────────────────────────────────

    def _prepare(self, batch: np.ndarray) -> np.ndarray:
        x = np.asarray(batch)
        k = self.input_size
        if x.ndim == 3 and x.shape[1:] == (k, k):
            x = x[:, None, :, :]
        if x.ndim != 4 or x.shape[1:] != (1, k, k):
            raise ShapeMismatch(f"Expected batch of {k}x{k} inputs, got shape {x.shape}")
        return x.astype(self.dtype, copy=False)

    def forward(self, batch: np.ndarray) -> np.ndarray:
        """Class probabilities for a B x K x K (or B x 1 x K x K) batch.

        Returns:
            B x n_classes float64 array; rows sum to 1.
        """
        x = self._prepare(batch)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def gradients(self, batch: np.ndarray, targets: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        """Loss and exact gradients of the batch-mean cross-entropy.

        Args:
            batch: Inputs.
            targets: B x n_classes one-hot rows.

        Returns:
            Tuple of (loss, gradients aligned with ``parameters()``).
        """
        probs = self.forward(batch)
        value = loss(probs, targets)
        grad = np.asarray(targets, dtype=np.float64)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return value, [g for layer in self.layers for g in layer.grads]

    def kink_margin(self) -> float:
        """Smallest distance to a ReLU or max-pool kink in the last forward pass."""
        return min(layer.kink_margin() for layer in self.layers)

    def describe(self) -> Dict[str, Any]:
        return {
            "input_size": self.input_size,
            "n_classes": self.n_classes,
            "scheme": self.scheme,
            "seed": self.seed,
            "dtype": self.dtype.name,
            "layers": [spec.to_dict() for spec in self.specs],
        }


def loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Batch-mean cross-entropy with probabilities floored at 1e-12.

    Args:
        probabilities: B x n_classes rows.
        labels: B x n_classes one-hot rows.

    Raises:
        ShapeMismatch: If the shapes differ.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    targets = np.asarray(labels, dtype=np.float64)
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeMismatch(f"Probabilities {probs.shape} vs labels {targets.shape}")
    if probs.shape[0] == 0:
        return 0.0
    per_sample = -(targets * np.log(np.maximum(probs, PROB_FLOOR))).sum(axis=1)
    return float(per_sample.mean())


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Functional alias of ``Network.forward``."""
    return net.forward(batch)


def backward(net: Network, batch: np.ndarray, labels: np.ndarray) -> List[np.ndarray]:
    """Gradients of the batch-mean cross-entropy for every parameter array."""
    return net.gradients(batch, labels)[1]


def one_hot(indices: Sequence[int], n_classes: int) -> np.ndarray:
    """One-hot rows for class indices."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.zeros((idx.size, n_classes), dtype=np.float64)
    out[np.arange(idx.size), idx] = 1.0
    return out


def _normalize_arch(arch: Optional[ArchLike]) -> List[LayerSpec]:
    raw = DEFAULT_ARCH if arch is None else arch
    specs = [s if isinstance(s, LayerSpec) else LayerSpec.from_dict(dict(s)) for s in raw]
    for spec in specs:
        if spec.kind not in LAYER_KINDS:
            raise BadArchitecture(f"Unknown layer kind {spec.kind!r}")
        if spec.activation not in ACTIVATIONS:
            raise BadArchitecture(f"Unknown activation {spec.activation!r}")
        if spec.kind in ("conv3x3", "dense") and spec.units < 1:
            raise BadArchitecture(f"{spec.kind} needs a positive unit count")
    if not specs or specs[-1].kind != "output" or sum(s.kind == "output" for s in specs) != 1:
        raise BadArchitecture("Architecture must end with exactly one output layer")
    return specs


def check_architecture(
    k: int, arch: Optional[ArchLike] = None, n_classes: int = 3
) -> List[Tuple[LayerSpec, Tuple[int, ...]]]:
    """Walk layer shapes from a 1 x K x K input without allocating weights.

    Returns:
        (layer description, input shape) for every layer.

    Raises:
        BadArchitecture: If a description is invalid, shapes do not chain
            or pooling reaches size 0.
    """
    if k < 4:
        raise BadArchitecture(f"Input size K must be >= 4, got {k}")
    specs = _normalize_arch(arch)
    shape: Tuple[int, ...] = (1, k, k)
    walked: List[Tuple[LayerSpec, Tuple[int, ...]]] = []

    for i, spec in enumerate(specs):
        walked.append((spec, shape))
        if spec.kind == "conv3x3":
            if len(shape) != 3:
                raise BadArchitecture(f"Layer {i}: conv3x3 after flatten")
            shape = (spec.units, shape[1], shape[2])
        elif spec.kind == "maxpool2x2":
            if len(shape) != 3:
                raise BadArchitecture(f"Layer {i}: maxpool2x2 after flatten")
            if shape[1] // 2 < 1 or shape[2] // 2 < 1:
                raise BadArchitecture(
                    f"Layer {i}: pooling a {shape[1]}x{shape[2]} map reaches size 0"
                )
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif spec.kind == "flatten":
            if len(shape) != 3:
                raise BadArchitecture(f"Layer {i}: flatten applied twice")
            shape = (shape[0] * shape[1] * shape[2],)
        elif spec.kind == "dense":
            if len(shape) != 1:
                raise BadArchitecture(f"Layer {i}: dense needs a flatten before it")
            shape = (spec.units,)
        else:
            if len(shape) != 1:
                raise BadArchitecture(f"Layer {i}: output needs a flatten before it")
            shape = (n_classes,)
    return walked


def init_network(
    k: int,
    n_classes: int = 3,
    arch: Optional[ArchLike] = None,
    seed: int = 0,
    dtype: Any = np.float32,
    scheme: Optional[str] = None,
) -> Network:
    """Build a network for K x K inputs with scaled-uniform weights.

    Args:
        k: Input size K (>= 4).
        n_classes: 2 or 3.
        arch: Layer descriptions; defaults to the four-convolution stack.
        seed: Initialization seed.
        dtype: Parameter precision.
        scheme: Classifier family; defaults to ``multiclass`` for 3 classes
            and ``direction`` for 2.

    Returns:
        Freshly initialized Network.

    Raises:
        BadArchitecture: If shapes do not chain or pooling reaches size 0.
    """
    if n_classes not in (2, 3):
        raise BadArchitecture(f"n_classes must be 2 or 3, got {n_classes}")
    scheme = scheme or ("multiclass" if n_classes == 3 else "direction")
    if SCHEMES.get(scheme) != n_classes:
        raise BadArchitecture(f"Scheme {scheme!r} does not use {n_classes} classes")

    walked = check_architecture(k, arch, n_classes)
    rng = get_rng(seed)
    layers: List[Layer] = []

    for spec, shape in walked:
        if spec.kind == "conv3x3":
            layers.append(Conv3x3(shape[0], spec.units, spec.activation, rng, dtype))
        elif spec.kind == "maxpool2x2":
            layers.append(MaxPool2x2())
        elif spec.kind == "flatten":
            layers.append(Flatten())
        elif spec.kind == "dense":
            layers.append(Dense(shape[0], spec.units, spec.activation, rng, dtype))
        else:
            layers.append(Output(shape[0], n_classes, rng, dtype))

    specs = [spec for spec, _ in walked]
    logger.debug("Initialized %d-layer network for K=%d (%s)", len(layers), k, scheme)
    return Network(specs, layers, k, n_classes, scheme, seed, dtype)
