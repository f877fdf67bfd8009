"""Mini-batch SGD training of the dense network plus gradient verification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .network import ActivationKind, LayerWeights, Network, predict

__all__ = [
    "TrainConfig",
    "TrainingDivergedError",
    "init_network",
    "train",
    "mse",
    "backprop_gradients",
    "grad_check",
]

_OPTIMIZERS = ("sgd", "sgd_momentum")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    batch_size: int = 256
    learning_rate: float = 0.003
    seed: int = 0
    optimizer: str = "sgd_momentum"
    momentum: float = 0.9
    init: str = "uniform_he"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in _OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {_OPTIMIZERS}, got {self.optimizer!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.init != "uniform_he":
            raise ValueError(f"unknown init scheme {self.init!r}")


class TrainingDivergedError(RuntimeError):
    pass


def init_network(layer_dims, act: ActivationKind, seed) -> Network:
    """He-uniform weights (limit sqrt(6/fan_in), fan_in counts the constant slot);
    bias column starts at zero."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    for k in range(len(layer_dims) - 1):
        fan_in = layer_dims[k] + 1
        limit = math.sqrt(6.0 / fan_in)
        w = np.zeros((layer_dims[k + 1], fan_in))
        w[:, :-1] = rng.uniform(-limit, limit, size=(layer_dims[k + 1], layer_dims[k]))
        layers.append(LayerWeights(w))
    return Network(layers, act)


def _mse_arrays(net: Network, x: np.ndarray, y: np.ndarray) -> float:
    r = predict(net, x) - y
    return float(np.mean(r * r))


def mse(net: Network, data: Dataset) -> float:
    """Mean squared error of the network's predictions on a dataset."""
    return _mse_arrays(net, data.features, data.targets)


def backprop_gradients(net: Network, x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """Exact gradients of the batch MSE with respect to every weight matrix."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = x.shape[0]
    last = net.n_layers - 1
    acts = [x]
    pres = []
    a = x
    for k, layer in enumerate(net.layers):
        z = a @ layer.values[:, :-1].T + layer.values[:, -1]
        pres.append(z)
        a = net.activation.apply(z) if k < last else z
        acts.append(a)
    delta = (2.0 / n) * (acts[-1][:, 0] - y)
    delta = delta[:, None]
    grads: list[np.ndarray] = [np.empty(0)] * net.n_layers
    ones = np.ones((n, 1))
    for k in range(net.n_layers - 1, -1, -1):
        grads[k] = delta.T @ np.hstack([acts[k], ones])
        if k > 0:
            delta = (delta @ net.layers[k].values[:, :-1]) * net.activation.deriv(pres[k - 1])
    return grads


def train(
    layer_dims,
    act: ActivationKind,
    data: Dataset,
    cfg: TrainConfig,
    val_data: Dataset | None = None,
) -> tuple[Network, list[dict]]:
    """Train a freshly initialized dense network on MSE.

    Deterministic for a fixed config seed (init and batch shuffling share one
    seeded generator). Returns the network and a per-epoch history of
    {"epoch", "train_mse", "val_mse"}; val_mse is NaN without val_data.
    Raises TrainingDivergedError naming the epoch if the loss leaves the
    finite range.
    """
    layer_dims = [int(v) for v in layer_dims]
    if layer_dims[0] != data.n_features:
        raise ValueError(f"architecture expects {layer_dims[0]} inputs, data has {data.n_features}")
    if layer_dims[-1] != 1:
        raise ValueError("regression architecture must end in width 1")
    rng = np.random.default_rng(cfg.seed)
    net = init_network(layer_dims, act, rng)
    use_momentum = cfg.optimizer == "sgd_momentum" and cfg.momentum > 0
    vel = [np.zeros_like(l.values) for l in net.layers] if use_momentum else None
    x, y = data.features, data.targets
    n = x.shape[0]
    history: list[dict] = []
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for epoch in range(cfg.epochs):
            perm = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                grads = backprop_gradients(net, x[idx], y[idx])
                for k, layer in enumerate(net.layers):
                    if use_momentum:
                        vel[k] *= cfg.momentum
                        vel[k] += grads[k]
                        layer.values -= cfg.learning_rate * vel[k]
                    else:
                        layer.values -= cfg.learning_rate * grads[k]
            train_mse = _mse_arrays(net, x, y)
            if not math.isfinite(train_mse):
                raise TrainingDivergedError(
                    f"training diverged at epoch {epoch}: train MSE is {train_mse}"
                )
            val_mse = mse(net, val_data) if val_data is not None else math.nan
            history.append({"epoch": epoch, "train_mse": train_mse, "val_mse": val_mse})
    return net, history


def grad_check(net: Network, data: Dataset, epsilon: float = 1e-5) -> float:
    """Max relative disagreement between backprop and central finite differences.

    Every weight is perturbed by +-epsilon. The relative error denominator is
    floored at max(1e-8, 1e-3 * ||g||_inf) so float noise on near-zero
    gradient entries is measured against the gradient's overall scale rather
    than blowing up.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    x, y = data.features, data.targets
    bp = backprop_gradients(net, x, y)
    scale = max((float(np.abs(g).max()) for g in bp), default=0.0)
    floor = max(1e-8, 1e-3 * scale)
    worst = 0.0
    for k, layer in enumerate(net.layers):
        w = layer.values
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                orig = w[i, j]
                w[i, j] = orig + epsilon
                m_plus = _mse_arrays(net, x, y)
                w[i, j] = orig - epsilon
                m_minus = _mse_arrays(net, x, y)
                w[i, j] = orig
                fd = (m_plus - m_minus) / (2.0 * epsilon)
                g = bp[k][i, j]
                rel = abs(g - fd) / max(abs(g), abs(fd), floor)
                worst = max(worst, rel)
    return worst
