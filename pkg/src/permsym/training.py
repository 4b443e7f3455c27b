"""Gradients, full-batch descent, and equivariance of both under relabeling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    Dataset,
    InvalidInputError,
    LayerWeights,
    LossKind,
    Network,
    _check_dataset,
    _preactivations,
    loss,
    require_valid,
)
from .symmetry import NetworkPermutation, apply_permutation, deviation, permute_layers


class TrainingDivergedError(ArithmeticError):
    def __init__(self, step: int):
        super().__init__(f"non-finite weights after step {step}")
        self.step = step


@dataclass(frozen=True, eq=False)
class GradientSet:
    """Loss derivatives laid out exactly like the network's layers."""

    layers: tuple

    def permuted(self, p: NetworkPermutation) -> "GradientSet":
        return GradientSet(permute_layers(self.layers, p))

    def flat(self) -> np.ndarray:
        parts = []
        for l in self.layers:
            parts.append(l.weights.ravel())
            if l.bias is not None:
                parts.append(l.bias.ravel())
        return np.concatenate(parts)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    steps: int = 50
    seed: int = 0
    loss: LossKind = LossKind.MEAN_SQUARED_ERROR

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be positive, got {self.learning_rate}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidInputError(f"steps must be a positive integer, got {self.steps}")


@dataclass(frozen=True)
class EquivarianceReport:
    max_gradient_deviation: float
    max_trajectory_deviation: float
    steps_compared: int


def backprop(net: Network, data: Dataset,
             kind: LossKind = LossKind.MEAN_SQUARED_ERROR) -> GradientSet:
    """Exact gradient of :func:`loss`, summed over samples in index order."""
    LossKind(kind)
    require_valid(net)
    _check_dataset(net, data)
    n_samples = len(data)
    n_out = net.architecture[-1]
    grads_w = [np.zeros_like(l.weights) for l in net.layers]
    grads_b = [np.zeros(l.weights.shape[0]) for l in net.layers]

    for s in range(n_samples):
        x = data.inputs[s]
        zs, acts = _preactivations(net, x)
        delta = 2.0 * (acts[-1] - data.targets[s]) / (n_out * n_samples)
        for idx in range(net.depth - 1, -1, -1):
            delta = delta * net.activation(idx).derivative(zs[idx], acts[idx])
            a_prev = x if idx == 0 else acts[idx - 1]
            grads_w[idx] += np.outer(delta, a_prev)
            grads_b[idx] += delta
            if idx > 0:
                w = net.layers[idx].weights
                back = delta[0] * w[0]
                for r in range(1, w.shape[0]):
                    back = back + delta[r] * w[r]
                delta = back

    return GradientSet(tuple(
        LayerWeights(gw, gb if l.bias is not None else None)
        for gw, gb, l in zip(grads_w, grads_b, net.layers)))


def finite_diff(net: Network, data: Dataset,
                kind: LossKind = LossKind.MEAN_SQUARED_ERROR,
                eps: float = 1e-6) -> GradientSet:
    """Central-difference gradient; an oracle independent of :func:`backprop`."""
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    require_valid(net)
    _check_dataset(net, data)

    def perturbed(idx, which, pos, delta):
        layers = list(net.layers)
        w = layers[idx].weights.copy()
        b = None if layers[idx].bias is None else layers[idx].bias.copy()
        if which == "w":
            w[pos] += delta
        else:
            b[pos] += delta
        layers[idx] = LayerWeights(w, b)
        return net.replace_layers(layers)

    def central(idx, which, pos):
        up = loss(perturbed(idx, which, pos, eps), data, kind)
        down = loss(perturbed(idx, which, pos, -eps), data, kind)
        return (up - down) / (2.0 * eps)

    out = []
    for idx, layer in enumerate(net.layers):
        gw = np.zeros_like(layer.weights)
        for pos in np.ndindex(gw.shape):
            gw[pos] = central(idx, "w", pos)
        gb = None
        if layer.bias is not None:
            gb = np.array([central(idx, "b", k) for k in range(layer.bias.size)])
        out.append(LayerWeights(gw, gb))
    return GradientSet(tuple(out))


def gradient_deviation(g: GradientSet, h: GradientSet) -> float:
    return deviation(g.flat(), h.flat())


def _weights_deviation(a, b) -> float:
    return gradient_deviation(GradientSet(tuple(a)), GradientSet(tuple(b)))


def sgd_train(net: Network, data: Dataset, cfg: TrainConfig) -> list:
    """Full-batch gradient descent; returns ``cfg.steps + 1`` networks starting with ``net``."""
    trajectory = [net]
    for step in range(1, cfg.steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            grad = backprop(net, data, cfg.loss)
        layers = []
        for l, g in zip(net.layers, grad.layers):
            with np.errstate(over="ignore", invalid="ignore"):
                w = l.weights - cfg.learning_rate * g.weights
                b = None if l.bias is None else l.bias - cfg.learning_rate * g.bias
            if not np.all(np.isfinite(w)) or (b is not None and not np.all(np.isfinite(b))):
                raise TrainingDivergedError(step)
            layers.append(LayerWeights(w, b))
        net = net.replace_layers(layers)
        trajectory.append(net)
    return trajectory


def equivariance_experiment(net: Network, p: NetworkPermutation, data: Dataset,
                            cfg: TrainConfig) -> EquivarianceReport:
    """Train from ``net`` and from its relabeling; measure how far the runs drift apart under ``p``."""
    permuted = apply_permutation(net, p)
    grad_dev = gradient_deviation(backprop(net, data, cfg.loss).permuted(p),
                                  backprop(permuted, data, cfg.loss))
    traj_a = sgd_train(net, data, cfg)
    traj_b = sgd_train(permuted, data, cfg)
    traj_dev = 0.0
    for a_k, b_k in zip(traj_a, traj_b):
        traj_dev = max(traj_dev, _weights_deviation(permute_layers(a_k.layers, p), b_k.layers))
    return EquivarianceReport(grad_dev, traj_dev, len(traj_a))
