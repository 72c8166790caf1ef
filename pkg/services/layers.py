"""
Network layers with explicit forward and backward passes.

Tensors use NCHW layout (batch, channels, height, width). Each layer
caches what its backward pass needs during ``forward``; ``backward``
receives dLoss/dOutput, stores parameter gradients in ``grads`` and
returns dLoss/dInput.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit, softmax

from utils.errors import BadArchitecture

Shape = Tuple[int, ...]


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer.

    Attributes:
        kind: ``conv3x3``, ``maxpool2x2``, ``flatten``, ``dense`` or ``output``.
        units: Output channels (conv3x3) or units (dense); unused otherwise.
        activation: ``relu`` or ``none``.
    """

    kind: str
    units: int = 0
    activation: str = "none"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind in ("conv3x3", "dense"):
            data["units"] = self.units
            data["activation"] = self.activation
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LayerSpec":
        """Parse a layer description.

        Raises:
            BadArchitecture: On unknown keys, a missing kind or wrong types.
        """
        unknown = sorted(set(data) - {"kind", "units", "activation"})
        if unknown:
            raise BadArchitecture(f"Unknown key(s) in layer description: {', '.join(unknown)}")
        kind = data.get("kind")
        units = data.get("units", 0)
        activation = data.get("activation", "none")
        if not isinstance(kind, str):
            raise BadArchitecture("Layer description needs a string 'kind'")
        if isinstance(units, bool) or not isinstance(units, int):
            raise BadArchitecture(f"{kind}: units must be an integer")
        if not isinstance(activation, str):
            raise BadArchitecture(f"{kind}: activation must be a string")
        return cls(kind=kind, units=units, activation=activation)


def _scaled_uniform(rng: np.random.Generator, shape: Shape, fan_in: int, dtype: Any) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base layer: no parameters, identity kink margin."""

    kind: str = ""

    def __init__(self) -> None:
        self.params: List[np.ndarray] = []
        self.grads: List[np.ndarray] = []
        self.param_names: List[str] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kink_margin(self) -> float:
        """Distance of the last forward pass from a non-differentiable point."""
        return float("inf")


class _ReluMixin:
    activation: str
    _pre: Optional[np.ndarray]

    def _activate(self, z: np.ndarray) -> np.ndarray:
        self._pre = z
        if self.activation == "relu":
            return np.maximum(z, 0)
        return z

    def _activation_grad(self, grad: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return grad * (self._pre > 0)
        return grad

    def kink_margin(self) -> float:
        if self.activation != "relu" or self._pre is None or self._pre.size == 0:
            return float("inf")
        return float(np.abs(self._pre).min())


class Conv3x3(_ReluMixin, Layer):
    """3x3 convolution, stride 1, zero "same" padding."""

    kind = "conv3x3"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        activation: str,
        rng: np.random.Generator,
        dtype: Any,
    ) -> None:
        super().__init__()
        self.activation = activation
        fan_in = in_channels * 9
        self.weight = _scaled_uniform(rng, (out_channels, in_channels, 3, 3), fan_in, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.params = [self.weight, self.bias]
        self.param_names = ["weight", "bias"]
        self._cols: Optional[np.ndarray] = None
        self._in_shape: Shape = ()
        self._pre = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        out_ch = self.weight.shape[0]
        padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        windows = sliding_window_view(padded, (3, 3), axis=(2, 3))
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, c * 9)
        z = cols @ self.weight.reshape(out_ch, c * 9).T + self.bias
        self._cols = cols
        self._in_shape = x.shape
        return self._activate(z.reshape(b, h, w, out_ch).transpose(0, 3, 1, 2))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        out_ch = self.weight.shape[0]
        g = self._activation_grad(grad).transpose(0, 2, 3, 1).reshape(b * h * w, out_ch)

        self.grads = [
            (g.T @ self._cols).reshape(self.weight.shape),
            g.sum(axis=0),
        ]

        dcols = (g @ self.weight.reshape(out_ch, c * 9)).reshape(b, h, w, c, 3, 3)
        dpadded = np.zeros((b, c, h + 2, w + 2), dtype=grad.dtype)
        for i in range(3):
            for j in range(3):
                dpadded[:, :, i:i + h, j:j + w] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dpadded[:, :, 1:-1, 1:-1]


class MaxPool2x2(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""

    kind = "maxpool2x2"

    def __init__(self) -> None:
        super().__init__()
        self._argmax: Optional[np.ndarray] = None
        self._windows: Optional[np.ndarray] = None
        self._in_shape: Shape = ()

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        ho, wo = h // 2, w // 2
        windows = (
            x[:, :, : 2 * ho, : 2 * wo]
            .reshape(b, c, ho, 2, wo, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, ho, wo, 4)
        )
        self._argmax = windows.argmax(axis=-1)
        self._windows = windows
        self._in_shape = x.shape
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        ho, wo = h // 2, w // 2
        routed = np.zeros((b, c, ho, wo, 4), dtype=grad.dtype)
        np.put_along_axis(routed, self._argmax[..., None], grad[..., None], axis=-1)
        dx = np.zeros(self._in_shape, dtype=grad.dtype)
        dx[:, :, : 2 * ho, : 2 * wo] = (
            routed.reshape(b, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, 2 * ho, 2 * wo)
        )
        return dx

    def kink_margin(self) -> float:
        if self._windows is None or self._windows.size == 0:
            return float("inf")
        top2 = np.sort(self._windows, axis=-1)[..., -2:]
        # Windows whose maximum is an exact zero hold ReLU-clamped values only.
        live = top2[..., 1] != 0
        if not np.any(live):
            return float("inf")
        return float((top2[..., 1] - top2[..., 0])[live].min())


class Flatten(Layer):
    kind = "flatten"

    def __init__(self) -> None:
        super().__init__()
        self._in_shape: Shape = ()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad.reshape(self._in_shape)


class Dense(_ReluMixin, Layer):
    """Fully connected layer."""

    kind = "dense"

    def __init__(
        self,
        in_features: int,
        units: int,
        activation: str,
        rng: np.random.Generator,
        dtype: Any,
    ) -> None:
        super().__init__()
        self.activation = activation
        self.weight = _scaled_uniform(rng, (in_features, units), in_features, dtype)
        self.bias = np.zeros(units, dtype=dtype)
        self.params = [self.weight, self.bias]
        self.param_names = ["weight", "bias"]
        self._x: Optional[np.ndarray] = None
        self._pre = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return self._activate(x @ self.weight + self.bias)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        g = self._activation_grad(grad)
        self.grads = [self._x.T @ g, g.sum(axis=0)]
        return g @ self.weight.T


class Output(Layer):
    """Classifier head: softmax over 3 classes or a logistic unit for 2.

    Probabilities are produced in float64 whatever the network precision.
    ``backward`` takes one-hot targets and returns the gradient of the
    batch-mean cross-entropy with respect to the layer input.
    """

    kind = "output"

    def __init__(self, in_features: int, n_classes: int, rng: np.random.Generator, dtype: Any) -> None:
        super().__init__()
        self.n_classes = n_classes
        logits = 1 if n_classes == 2 else n_classes
        self.weight = _scaled_uniform(rng, (in_features, logits), in_features, dtype)
        self.bias = np.zeros(logits, dtype=dtype)
        self.params = [self.weight, self.bias]
        self.param_names = ["weight", "bias"]
        self._x: Optional[np.ndarray] = None
        self._probs: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        z = (x @ self.weight + self.bias).astype(np.float64)
        if self.n_classes == 2:
            p = expit(z[:, 0])
            probs = np.stack([p, 1.0 - p], axis=1)
        else:
            probs = softmax(z, axis=1)
        self._probs = probs
        return probs

    def backward(self, targets: np.ndarray) -> np.ndarray:
        batch = targets.shape[0]
        if self.n_classes == 2:
            dz = (self._probs[:, :1] - targets[:, :1]) / batch
        else:
            dz = (self._probs - targets) / batch
        dz = dz.astype(self.weight.dtype)
        self.grads = [self._x.T @ dz, dz.sum(axis=0)]
        return dz @ self.weight.T
