"""Fully connected networks with the bias absorbed as a constant input neuron.

Layer k maps the previous layer's outputs plus a trailing constant 1 through a
weight matrix of shape (n_k, n_{k-1}+1). Hidden layers apply the activation;
the single output neuron is linear.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset

__all__ = [
    "ActivationKind",
    "activation",
    "LayerWeights",
    "Network",
    "ActivationTrace",
    "forward",
    "predict",
    "forward_trace",
    "count_params",
    "save_weights",
    "load_weights",
]

_LIPSCHITZ = {"relu": 1.0, "tanh": 1.0, "sigmoid": 0.25, "identity": 1.0}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class ActivationKind:
    """Activation choice plus its analytic Lipschitz constant."""

    kind: str
    lipschitz: float = math.nan

    def __post_init__(self):
        if self.kind not in _LIPSCHITZ:
            raise ValueError(f"unknown activation {self.kind!r}; choose from {sorted(_LIPSCHITZ)}")
        expected = _LIPSCHITZ[self.kind]
        if math.isnan(self.lipschitz):
            object.__setattr__(self, "lipschitz", expected)
        elif self.lipschitz != expected:
            raise ValueError(f"lipschitz constant for {self.kind!r} is {expected}, got {self.lipschitz}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "tanh":
            return np.tanh(x)
        if self.kind == "sigmoid":
            return _sigmoid(x)
        return x.copy()

    def deriv(self, x: np.ndarray) -> np.ndarray:
        # relu subgradient at 0 is taken as 0
        x = np.asarray(x, dtype=float)
        if self.kind == "relu":
            return (x > 0.0).astype(float)
        if self.kind == "tanh":
            t = np.tanh(x)
            return 1.0 - t * t
        if self.kind == "sigmoid":
            s = _sigmoid(x)
            return s * (1.0 - s)
        return np.ones_like(x)


def activation(kind: str) -> ActivationKind:
    return ActivationKind(kind)


@dataclass
class LayerWeights:
    """Weight matrix (n_out, n_in+1) plus a boolean mask of pruned slots.

    Masked entries are forced-zero: the invariant values[mask] == 0 is checked
    on construction.
    """

    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"layer weights must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] < 1 or self.values.shape[1] < 2:
            raise ValueError(f"layer weights need >=1 row and >=2 columns, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("layer weights contain NaN or Inf")
        if self.mask is None:
            self.mask = np.zeros_like(self.values, dtype=bool)
        else:
            self.mask = np.array(self.mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise ValueError("mask shape must match weight shape")
        if np.any(self.values[self.mask] != 0.0):
            raise ValueError("masked (pruned) entries must be exactly zero")

    @property
    def n_out(self) -> int:
        return self.values.shape[0]

    @property
    def n_in(self) -> int:
        return self.values.shape[1] - 1

    def copy(self) -> LayerWeights:
        return LayerWeights(self.values.copy(), self.mask.copy())


@dataclass
class Network:
    """Stack of LayerWeights with one activation for all hidden layers."""

    layers: list[LayerWeights]
    activation: ActivationKind

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for k in range(1, len(self.layers)):
            if self.layers[k].n_in != self.layers[k - 1].n_out:
                raise ValueError(
                    f"layer {k} expects {self.layers[k].n_in} inputs but layer {k - 1} "
                    f"produces {self.layers[k - 1].n_out}"
                )
        if self.layers[-1].n_out != 1:
            raise ValueError(f"regression head must have width 1, got {self.layers[-1].n_out}")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].n_in

    @property
    def layer_dims(self) -> list[int]:
        return [self.layers[0].n_in] + [l.n_out for l in self.layers]

    def copy(self) -> Network:
        return Network([l.copy() for l in self.layers], self.activation)


def forward(net: Network, x) -> float:
    """Evaluate one input vector; returns the linear output of the last layer."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != net.input_dim:
        raise ValueError(f"input has {x.shape[0]} entries, network expects {net.input_dim}")
    a = x
    last = net.n_layers - 1
    for k, layer in enumerate(net.layers):
        g = layer.values @ np.append(a, 1.0)
        a = net.activation.apply(g) if k < last else g
    return float(a[0])


def predict(net: Network, features: np.ndarray) -> np.ndarray:
    """Batched forward pass; features is (N, p), result is (N,)."""
    a = np.asarray(features, dtype=float)
    if a.ndim != 2 or a.shape[1] != net.input_dim:
        raise ValueError(f"features shape {a.shape} incompatible with input width {net.input_dim}")
    last = net.n_layers - 1
    for k, layer in enumerate(net.layers):
        z = a @ layer.values[:, :-1].T + layer.values[:, -1]
        a = net.activation.apply(z) if k < last else z
    return a[:, 0]


@dataclass
class ActivationTrace:
    """Every neuron output and pre-activation over a batch of rows.

    outputs[k] and preacts[k] are (N, n_k) for k = 1..L; index 0 holds the raw
    input features for both. `layer_inputs(k)` appends the constant column,
    giving the regression design used when re-fitting layer k's neurons.
    """

    outputs: list[np.ndarray]
    preacts: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.outputs) - 1

    @property
    def n_rows(self) -> int:
        return self.outputs[0].shape[0]

    @property
    def predictions(self) -> np.ndarray:
        return self.outputs[-1][:, 0]

    def layer_inputs(self, k: int) -> np.ndarray:
        """Design matrix (N, n_{k-1}+1) feeding layer k, constant column last."""
        if not 1 <= k <= self.n_layers:
            raise ValueError(f"layer index must be in [1, {self.n_layers}], got {k}")
        prev = self.outputs[k - 1]
        return np.hstack([prev, np.ones((prev.shape[0], 1))])

    def take(self, idx) -> ActivationTrace:
        return ActivationTrace([o[idx] for o in self.outputs], [p[idx] for p in self.preacts])


def forward_trace(net: Network, data) -> ActivationTrace:
    """Batched forward pass recording every layer's outputs and pre-activations."""
    feats = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if feats.ndim != 2 or feats.shape[1] != net.input_dim:
        raise ValueError(f"features shape {feats.shape} incompatible with input width {net.input_dim}")
    outputs = [feats]
    preacts = [feats]
    a = feats
    last = net.n_layers - 1
    for k, layer in enumerate(net.layers):
        z = a @ layer.values[:, :-1].T + layer.values[:, -1]
        a = net.activation.apply(z) if k < last else z
        preacts.append(z)
        outputs.append(a)
    return ActivationTrace(outputs, preacts)


def count_params(net: Network) -> tuple[int, int]:
    """(total weight slots, nonzero unmasked weights); constant-neuron slots count."""
    total = sum(l.values.size for l in net.layers)
    nonzero = sum(int(np.count_nonzero(l.values)) for l in net.layers)
    return total, nonzero


def save_weights(net: Network, path) -> None:
    """Serialize to JSON; float values round-trip bit-exactly via repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "activation": net.activation.kind,
        "layer_dims": net.layer_dims,
        "layers": [
            {
                "rows": l.n_out,
                "cols": l.values.shape[1],
                "values": l.values.ravel().tolist(),
                "mask": l.mask.ravel().astype(int).tolist(),
            }
            for l in net.layers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_weights(path) -> Network:
    """Load and validate a weight file written by `save_weights`."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: corrupt weight file: {e}") from None
    for key in ("activation", "layer_dims", "layers"):
        if key not in payload:
            raise ValueError(f"{path}: weight file missing field {key!r}")
    dims = payload["layer_dims"]
    if not isinstance(dims, list) or len(dims) < 2 or not all(isinstance(v, int) and v >= 1 for v in dims):
        raise ValueError(f"{path}: layer_dims must be a list of positive ints, got {dims!r}")
    entries = payload["layers"]
    if not isinstance(entries, list) or len(entries) != len(dims) - 1:
        raise ValueError(
            f"{path}: layer count mismatch: layer_dims implies {len(dims) - 1} layers, "
            f"file has {len(entries) if isinstance(entries, list) else entries!r}"
        )
    layers = []
    for k, entry in enumerate(entries):
        rows, cols = entry.get("rows"), entry.get("cols")
        if rows != dims[k + 1] or cols != dims[k] + 1:
            raise ValueError(
                f"{path}: layer {k} declares shape {rows}x{cols}, "
                f"layer_dims implies {dims[k + 1]}x{dims[k] + 1}"
            )
        values = np.asarray(entry.get("values", []), dtype=float)
        mask = np.asarray(entry.get("mask", []), dtype=float)
        if values.size != rows * cols or mask.size != rows * cols:
            raise ValueError(f"{path}: layer {k} has wrong number of values or mask entries")
        if not np.isfinite(values).all():
            raise ValueError(f"{path}: layer {k} contains non-finite weights")
        if not np.isin(mask, (0.0, 1.0)).all():
            raise ValueError(f"{path}: layer {k} mask entries must be 0 or 1")
        try:
            layers.append(LayerWeights(values.reshape(rows, cols), mask.reshape(rows, cols).astype(bool)))
        except ValueError as e:
            raise ValueError(f"{path}: layer {k}: {e}") from None
    try:
        return Network(layers, ActivationKind(payload["activation"]))
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from None
