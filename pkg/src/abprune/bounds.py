"""Numeric evaluation of the layered approximation-error bounds.

Each bound sums one term per backward approximation step s = 1..S:

    rho^(s-1) * C * (t_{L-1} * ... * t_{L-s}) * m_{L-s}^e * maxf_{L-s}

where t_k is the largest lq-norm over incoming weight vectors of layer k+1,
maxf_k the largest empirical L2 norm over layer k's neuron outputs, and the
exponent e is 1/2 - 1/q for the best-approximation form or 1 - 1/q for the
magnitude-truncation form. C is an unknown universal constant, settable and
defaulting to 1, so totals are meaningful for relative comparisons only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network, forward_trace
from .sparsity import lq_norm

__all__ = [
    "LayerStats",
    "BoundInput",
    "layer_stats",
    "approximation_error_bound",
    "magnitude_error_bound",
    "homogeneous_error_bound",
    "classification_error_bound",
    "bound_report",
]


@dataclass
class LayerStats:
    """Per-layer inputs to the bound formulas, indexed k = 0..L-1.

    The constant neuron counts as part of each layer: n[k] is the layer width
    plus one, t[k] maxes over full incoming rows (bias slot included), and
    max_f_norm[k] includes the constant's norm of exactly 1.
    """

    t: np.ndarray
    q: np.ndarray
    n: np.ndarray
    max_f_norm: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).ravel()
        self.q = np.asarray(self.q, dtype=float).ravel()
        self.n = np.asarray(self.n, dtype=int).ravel()
        self.max_f_norm = np.asarray(self.max_f_norm, dtype=float).ravel()
        sizes = {self.t.size, self.q.size, self.n.size, self.max_f_norm.size}
        if len(sizes) != 1 or self.t.size < 1:
            raise ValueError("layer stats vectors must share one positive length")
        if np.any(self.t < 0):
            raise ValueError("t values must be >= 0")
        if np.any((self.q <= 0) | (self.q > 1)):
            raise ValueError("q values must lie in (0, 1]")
        if np.any(self.n < 1):
            raise ValueError("layer widths must be >= 1")
        if np.any(self.max_f_norm < 0):
            raise ValueError("f-norms must be >= 0")

    @property
    def n_layers(self) -> int:
        return self.t.size


@dataclass
class BoundInput:
    """LayerStats plus kept counts, step count, and constants."""

    stats: LayerStats
    m: np.ndarray
    steps: int
    rho: float
    c: float = 1.0
    base_error: float = 0.0

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float).ravel()
        if self.m.size != self.stats.n_layers:
            raise ValueError(f"need one m per layer, got {self.m.size} for {self.stats.n_layers}")
        if np.any(self.m < 1):
            raise ValueError("every m_k must be >= 1")
        if np.any(self.m > self.stats.n):
            raise ValueError("every m_k must be <= the layer width n_k")
        if not 1 <= self.steps <= self.stats.n_layers:
            raise ValueError(f"steps must lie in [1, {self.stats.n_layers}], got {self.steps}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.c <= 0:
            raise ValueError(f"C must be > 0, got {self.c}")
        if self.base_error < 0:
            raise ValueError(f"base_error must be >= 0, got {self.base_error}")


def layer_stats(net: Network, data, q, surviving_only: bool = False) -> LayerStats:
    """Measure t_k, widths, and empirical f-norms on a dataset.

    q may be a scalar or a length-L sequence. The L2(mu) norms are estimated
    as sqrt(mean over rows of f^2) from the forward trace. With
    surviving_only, t_k maxes only over neurons of layer k+1 that still feed
    the next layer, i.e. whose output column carries a nonzero weight there
    (relevant after pruning; the output neuron always counts).
    """
    length = net.n_layers
    q_arr = np.asarray(q, dtype=float).ravel()
    if q_arr.size == 1:
        q_arr = np.full(length, q_arr[0])
    if q_arr.size != length:
        raise ValueError(f"need one q per layer ({length}), got {q_arr.size}")
    trace = forward_trace(net, data)
    t = np.zeros(length)
    widths = np.zeros(length, dtype=int)
    fnorm = np.zeros(length)
    for k in range(length):
        rows = net.layers[k].values
        if surviving_only and k + 1 < length:
            next_cols = net.layers[k + 1].values[:, : rows.shape[0]]
            alive = np.count_nonzero(next_cols, axis=0) > 0
            rows = rows[alive]
        t[k] = max((lq_norm(row, q_arr[k]) for row in rows), default=0.0)
        outs = trace.outputs[k]
        widths[k] = outs.shape[1] + 1  # constant neuron included
        fnorm[k] = max(float(np.sqrt(np.mean(outs**2, axis=0)).max()), 1.0)
    return LayerStats(t, q_arr, widths, fnorm)


def _step_terms(inp: BoundInput, magnitude: bool) -> list[float]:
    stats = inp.stats
    length = stats.n_layers
    c = 1.0 if magnitude else inp.c
    terms = []
    t_product = 1.0
    for s in range(1, inp.steps + 1):
        k = length - s
        t_product *= stats.t[k]
        expo = (1.0 - 1.0 / stats.q[k]) if magnitude else (0.5 - 1.0 / stats.q[k])
        terms.append(inp.rho ** (s - 1) * c * t_product * inp.m[k] ** expo * stats.max_f_norm[k])
    return terms


def approximation_error_bound(inp: BoundInput) -> float:
    """Best-sparse-approximation bound: base error plus the m^(1/2-1/q) step sum."""
    return inp.base_error + sum(_step_terms(inp, magnitude=False))


def magnitude_error_bound(inp: BoundInput) -> float:
    """Magnitude-truncation bound: exponent 1-1/q and no universal constant."""
    return inp.base_error + sum(_step_terms(inp, magnitude=True))


def homogeneous_error_bound(t, m: int, q: float, steps: int, c: float = 1.0, base_error: float = 0.0) -> float:
    """Uniform-(m, q) form with unit f-norms and rho = 1:
    C * (sum of cumulative t-products) * m^(1/2-1/q) added to the base error."""
    t = np.asarray(t, dtype=float).ravel()
    if not 1 <= steps <= t.size:
        raise ValueError(f"steps must lie in [1, {t.size}], got {steps}")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    total = 0.0
    t_product = 1.0
    for s in range(1, steps + 1):
        t_product *= t[t.size - s]
        total += t_product
    return base_error + c * total * m ** (0.5 - 1.0 / q)


def classification_error_bound(inp: BoundInput, base_l2: float) -> float:
    """Zero-one-risk version: 2 * base_l2 plus the same step sum as the
    approximation bound (inp.base_error is ignored; base_l2 plays its role)."""
    if base_l2 < 0:
        raise ValueError(f"base_l2 must be >= 0, got {base_l2}")
    return 2.0 * base_l2 + sum(_step_terms(inp, magnitude=False))


def bound_report(inp: BoundInput, variant: str = "general") -> dict:
    """JSON-ready report of the per-step terms and the total."""
    if variant not in ("general", "magnitude"):
        raise ValueError(f"variant must be 'general' or 'magnitude', got {variant!r}")
    magnitude = variant == "magnitude"
    terms = _step_terms(inp, magnitude=magnitude)
    return {
        "per_step_terms": terms,
        "total": inp.base_error + sum(terms),
        "C": 1.0 if magnitude else inp.c,
        "rho": inp.rho,
        "S": inp.steps,
        "base_error": inp.base_error,
        "variant": variant,
    }
