"""Dense feed-forward networks: representation, forward pass and loss.

Weights of layer ``l`` are stored as an ``n_l x n_{l-1}`` matrix, so row ``i``
holds the incoming weights of neuron ``i``. Layers are a plain tuple indexed
from 0 here; user-facing layer numbers (CLI, error messages) start at 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit


class InvalidInputError(ValueError):
    """Raised when an operation receives arguments it cannot accept."""


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.IDENTITY:
            return z
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        if self is Activation.TANH:
            return np.tanh(z)
        return expit(z)

    def derivative(self, z: np.ndarray, out: np.ndarray) -> np.ndarray:
        """Derivative at pre-activation ``z``; ``out`` is the activation value f(z).

        The relu derivative at exactly 0 is 0.
        """
        if self is Activation.IDENTITY:
            return np.ones_like(z)
        if self is Activation.RELU:
            return (z > 0.0).astype(float)
        if self is Activation.TANH:
            return 1.0 - out * out
        return out * (1.0 - out)


class LossKind(str, enum.Enum):
    MEAN_SQUARED_ERROR = "mean_squared_error"


@dataclass(frozen=True, eq=False)
class LayerWeights:
    weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.bias is not None:
            b = np.array(self.bias, dtype=float)
            b.setflags(write=False)
            object.__setattr__(self, "bias", b)

    @property
    def shape(self) -> tuple:
        return self.weights.shape

    def identical(self, other: "LayerWeights") -> bool:
        """Bitwise equality, including the sign of zeros."""
        if (self.bias is None) != (other.bias is None):
            return False
        if not _bitwise_equal(self.weights, other.weights):
            return False
        return self.bias is None or _bitwise_equal(self.bias, other.bias)


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    hidden_activation: Activation = Activation.TANH
    output_activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        layers = tuple(
            l if isinstance(l, LayerWeights) else LayerWeights(*l) for l in self.layers
        )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "hidden_activation", Activation(self.hidden_activation))
        object.__setattr__(self, "output_activation", Activation(self.output_activation))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def architecture(self) -> tuple:
        """(n_0, n_1, ..., n_L) read off the weight shapes."""
        if not self.layers:
            return ()
        return (self.layers[0].shape[1],) + tuple(l.shape[0] for l in self.layers)

    @property
    def hidden_widths(self) -> tuple:
        return self.architecture[1:-1]

    def activation(self, index: int) -> Activation:
        """Activation of the layer at zero-based ``index``."""
        return self.output_activation if index == self.depth - 1 else self.hidden_activation

    def replace_layers(self, layers: Sequence[LayerWeights]) -> "Network":
        return Network(tuple(layers), self.hidden_activation, self.output_activation)

    def identical(self, other: "Network") -> bool:
        return (
            self.hidden_activation == other.hidden_activation
            and self.output_activation == other.output_activation
            and self.depth == other.depth
            and all(a.identical(b) for a, b in zip(self.layers, other.layers))
        )

    @classmethod
    def from_matrices(cls, weights, biases=None, hidden_activation="tanh",
                      output_activation="identity") -> "Network":
        if biases is None:
            biases = [None] * len(weights)
        return cls(
            tuple(LayerWeights(w, b) for w, b in zip(weights, biases)),
            Activation(hidden_activation),
            Activation(output_activation),
        )

    @classmethod
    def random(cls, architecture: Sequence[int], rng: np.random.Generator, *,
               bias: bool = True, hidden_activation="tanh",
               output_activation="identity", scale: float = 1.0) -> "Network":
        """Gaussian weights with standard deviation ``scale / sqrt(fan_in)``."""
        layers = []
        for n_in, n_out in zip(architecture[:-1], architecture[1:]):
            w = rng.normal(scale=scale / np.sqrt(n_in), size=(n_out, n_in))
            b = rng.normal(scale=scale, size=n_out) if bias else None
            layers.append(LayerWeights(w, b))
        return cls(tuple(layers), Activation(hidden_activation), Activation(output_activation))


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.array(self.inputs, dtype=float))
        y = np.atleast_2d(np.array(self.targets, dtype=float))
        if x.shape[0] == 0 or x.size == 0:
            raise InvalidInputError("dataset is empty")
        if x.shape[0] != y.shape[0]:
            raise InvalidInputError(
                f"{x.shape[0]} inputs but {y.shape[0]} targets")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @classmethod
    def from_pairs(cls, samples) -> "Dataset":
        samples = list(samples)
        if not samples:
            raise InvalidInputError("dataset is empty")
        return cls([s[0] for s in samples], [s[1] for s in samples])


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"layer {l}: {msg}" for l, msg in self.violations)


def validate(net: Network) -> ValidationReport:
    """Collect every structural violation instead of stopping at the first."""
    report = ValidationReport()
    if net.depth < 1:
        report.violations.append((0, "network has no layers"))
        return report
    for idx, layer in enumerate(net.layers, start=1):
        w = layer.weights
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            report.violations.append((idx, f"weights must be a non-empty matrix, got shape {w.shape}"))
            continue
        if not np.all(np.isfinite(w)):
            report.violations.append((idx, "non-finite weight entry"))
        if layer.bias is not None:
            if layer.bias.shape != (w.shape[0],):
                report.violations.append(
                    (idx, f"bias length {layer.bias.shape} does not match {w.shape[0]} rows"))
            elif not np.all(np.isfinite(layer.bias)):
                report.violations.append((idx, "non-finite bias entry"))
        if idx >= 2:
            prev = net.layers[idx - 2].weights
            if prev.ndim == 2 and w.shape[1] != prev.shape[0]:
                report.violations.append(
                    (idx, f"{w.shape[1]} columns but layer {idx - 1} has {prev.shape[0]} rows"))
    return report


def require_valid(net: Network) -> None:
    report = validate(net)
    if not report.ok:
        raise InvalidInputError(f"invalid network: {report}")


def matvec(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``a @ w.T`` with each dot product summed in ascending column order.

    ``a`` may carry leading batch axes. The explicit loop pins the summation
    order so results do not depend on the BLAS build.
    """
    z = a[..., 0, None] * w[:, 0]
    for k in range(1, w.shape[1]):
        z = z + a[..., k, None] * w[:, k]
    return z


def _preactivations(net: Network, x: np.ndarray):
    require_valid(net)
    x = np.asarray(x, dtype=float)
    n0 = net.architecture[0]
    if x.ndim == 0 or x.shape[-1] != n0:
        raise InvalidInputError(f"input has length {x.shape[-1] if x.ndim else 0}, expected {n0}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input contains non-finite values")
    zs, acts = [], []
    a = x
    for idx, layer in enumerate(net.layers):
        z = matvec(layer.weights, a)
        if layer.bias is not None:
            z = z + layer.bias
        a = net.activation(idx)(z)
        zs.append(z)
        acts.append(a)
    return zs, acts


def forward(net: Network, x) -> list:
    """Activation vectors a^(1) .. a^(L) for input ``x``."""
    return _preactivations(net, x)[1]


def predict(net: Network, x) -> np.ndarray:
    return forward(net, x)[-1]


def loss(net: Network, data: Dataset,
         kind: LossKind = LossKind.MEAN_SQUARED_ERROR) -> float:
    """Mean over samples of the per-sample mean squared error."""
    LossKind(kind)
    _check_dataset(net, data)
    preds = predict(net, data.inputs)
    total = 0.0
    for s in range(len(data)):
        diff = preds[s] - data.targets[s]
        total += float(np.mean(diff * diff))
    return total / len(data)


def _check_dataset(net: Network, data: Dataset) -> None:
    arch = net.architecture
    if data.inputs.shape[1] != arch[0]:
        raise InvalidInputError(
            f"dataset inputs have {data.inputs.shape[1]} columns, network expects {arch[0]}")
    if data.targets.shape[1] != arch[-1]:
        raise InvalidInputError(
            f"dataset targets have {data.targets.shape[1]} columns, network outputs {arch[-1]}")


def _bitwise_equal(a: np.ndarray, b: np.ndarray) -> bool:
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    return a.shape == b.shape and a.tobytes() == b.tobytes()
