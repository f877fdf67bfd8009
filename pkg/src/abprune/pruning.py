"""One-shot backward pruning: per-neuron sparse refits and the fixed-proportion baseline.

Layers are processed from the output back to the input. Each neuron's incoming
weights are replaced by a sparse approximation fit against the ORIGINAL
network's activation trace: the design is the previous layer's traced outputs
plus the constant column, the response is the neuron's traced pre-activation.
Per-neuron fits are therefore independent of one another and of processing
order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .network import ActivationTrace, LayerWeights, Network, forward_trace
from .solvers import LassoConfig, gram_ols_min_norm, lasso_cd, lasso_gram, ols_min_norm
from .sparsity import achieved_tail_ratio, keep_count, top_m_indices
from .training import mse

__all__ = [
    "AbpM",
    "AbpL",
    "BaselineMag",
    "NeuronPruneRecord",
    "PruneReport",
    "PruneWorkspace",
    "build_workspace",
    "prune_abp",
    "prune_baseline",
    "approx_neuron_magnitude",
    "approx_neuron_lasso",
    "evaluate_pruned",
    "report_to_dict",
    "save_report",
    "save_records_csv",
]


@dataclass(frozen=True)
class AbpM:
    """Adaptive magnitude strategy: keep count from the sparsity index, then OLS refit."""

    q: float
    eta: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")


@dataclass(frozen=True)
class AbpL:
    """LASSO strategy: support and weights straight from an l1-penalized refit."""

    lasso: LassoConfig


@dataclass(frozen=True)
class BaselineMag:
    """Fixed-proportion magnitude baseline: zero the smallest slots, no refit."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")


@dataclass
class NeuronPruneRecord:
    """Outcome of pruning one neuron's incoming weight vector."""

    layer: int
    neuron: int
    original_nonzeros: int
    kept: int
    support: np.ndarray
    weights: np.ndarray
    refit_mse: float | None = None
    achieved_eta: float | None = None
    converged: bool = True

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=int)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.support.size != self.kept:
            raise ValueError(f"support size {self.support.size} != kept {self.kept}")
        off = np.ones(self.weights.size, dtype=bool)
        off[self.support] = False
        if np.any(self.weights[off] != 0.0):
            raise ValueError("weights must be exactly zero off the support")


@dataclass
class PruneReport:
    """All per-neuron records plus network-level totals and ratios."""

    records: list[NeuronPruneRecord]
    total_params: int
    kept_params: int
    network_compression_ratio: float
    network_pruning_ratio: float
    strategy: dict = field(default_factory=dict)


def _make_report(records: list[NeuronPruneRecord], total: int, strategy: dict) -> PruneReport:
    records = sorted(records, key=lambda r: (r.layer, r.neuron))
    kept = sum(r.kept for r in records)
    cr = math.inf if kept == 0 else total / kept
    return PruneReport(records, total, kept, cr, 1.0 - kept / total, strategy)


@dataclass
class PruneWorkspace:
    """Per-layer regression data shared across strategies for one network+dataset.

    designs[k-1] is the (N, n_{k-1}+1) design for layer k, grams/corrs the
    matching X^T X and X^T Y (Y = the layer's pre-activations), targets[k-1]
    the raw Y columns.
    """

    designs: list[np.ndarray]
    grams: list[np.ndarray]
    corrs: list[np.ndarray]
    targets: list[np.ndarray]
    n_rows: int


def build_workspace(
    net: Network,
    data,
    trace: ActivationTrace | None = None,
    rows: int | None = None,
    seed: int = 0,
) -> PruneWorkspace:
    """Trace the network and precompute per-layer Gram data.

    rows, if given, subsamples that many trace rows (seeded) for speed;
    the default uses every row.
    """
    if trace is None:
        trace = forward_trace(net, data)
    if rows is not None and rows < trace.n_rows:
        idx = np.sort(np.random.default_rng(seed).choice(trace.n_rows, size=rows, replace=False))
        trace = trace.take(idx)
    designs, grams, corrs, targets = [], [], [], []
    for k in range(1, net.n_layers + 1):
        f = trace.layer_inputs(k)
        y = trace.preacts[k]
        designs.append(f)
        grams.append(f.T @ f)
        corrs.append(f.T @ y)
        targets.append(y)
    return PruneWorkspace(designs, grams, corrs, targets, trace.n_rows)


def _magnitude_record(
    w: np.ndarray,
    q: float,
    eta: float,
    design: np.ndarray,
    gram: np.ndarray,
    corr_col: np.ndarray,
    target_col: np.ndarray,
    layer: int,
    neuron: int,
) -> NeuronPruneRecord:
    d = w.size
    nz = int(np.count_nonzero(w))
    if nz == 0:
        # dropped neuron: its original pre-activation is identically zero
        return NeuronPruneRecord(
            layer, neuron, 0, 0, np.empty(0, dtype=int), np.zeros(d),
            refit_mse=float(np.mean(target_col**2)), achieved_eta=None,
        )
    m = keep_count(w, q, eta)
    sup = top_m_indices(w, m)
    coef = gram_ols_min_norm(gram[np.ix_(sup, sup)], corr_col[sup])
    new_w = np.zeros(d)
    new_w[sup] = coef
    resid = design[:, sup] @ coef - target_col
    return NeuronPruneRecord(
        layer, neuron, nz, m, sup, new_w,
        refit_mse=float(np.mean(resid * resid)),
        achieved_eta=achieved_tail_ratio(w, m, q),
    )


def _lasso_record(
    cfg: LassoConfig,
    design: np.ndarray,
    gram: np.ndarray,
    corr_col: np.ndarray,
    target_col: np.ndarray,
    original_nonzeros: int,
    layer: int,
    neuron: int,
) -> NeuronPruneRecord:
    d = gram.shape[0]
    penalized = np.ones(d, dtype=bool)
    if not cfg.penalize_constant:
        penalized[d - 1] = False  # constant column is appended last
    fit = lasso_gram(gram, corr_col, float(target_col @ target_col), design.shape[0], cfg, penalized)
    sup = fit.support
    resid = design[:, sup] @ fit.weights[sup] - target_col
    return NeuronPruneRecord(
        layer, neuron, original_nonzeros, int(sup.size), sup, fit.weights,
        refit_mse=float(np.mean(resid * resid)),
        achieved_eta=None,
        converged=fit.converged,
    )


def prune_abp(
    net: Network,
    data,
    strategy,
    workspace: PruneWorkspace | None = None,
    rows: int | None = None,
    seed: int = 0,
    layer_hook=None,
) -> tuple[Network, PruneReport]:
    """Backward adaptive pruning of every neuron, output layer first.

    The original network is left untouched; features/targets always come from
    its trace. layer_hook(k) is invoked as each layer is processed, so tests
    can observe the back-to-front order.
    """
    if isinstance(strategy, BaselineMag):
        raise ValueError("baseline strategy has no refit step; use prune_baseline")
    if not isinstance(strategy, (AbpM, AbpL)):
        raise ValueError(f"unknown strategy {strategy!r}")
    if workspace is None:
        workspace = build_workspace(net, data, rows=rows, seed=seed)
    records: list[NeuronPruneRecord] = []
    new_layers: list[LayerWeights] = [None] * net.n_layers
    for k in range(net.n_layers, 0, -1):
        if layer_hook is not None:
            layer_hook(k)
        design = workspace.designs[k - 1]
        gram = workspace.grams[k - 1]
        corr = workspace.corrs[k - 1]
        target = workspace.targets[k - 1]
        old = net.layers[k - 1].values
        n_out, d = old.shape
        new_vals = np.zeros_like(old)
        for j in range(n_out):
            if isinstance(strategy, AbpM):
                rec = _magnitude_record(
                    old[j], strategy.q, strategy.eta, design, gram, corr[:, j], target[:, j], k, j
                )
            else:
                rec = _lasso_record(
                    strategy.lasso, design, gram, corr[:, j], target[:, j],
                    int(np.count_nonzero(old[j])), k, j,
                )
            new_vals[j] = rec.weights
            records.append(rec)
        mask = np.ones_like(new_vals, dtype=bool)
        for rec in records[-n_out:]:
            mask[rec.neuron, rec.support] = False
        new_layers[k - 1] = LayerWeights(new_vals, mask)
    total = sum(l.values.size for l in net.layers)
    if isinstance(strategy, AbpM):
        meta = {"kind": "abp_m", "q": strategy.q, "eta": strategy.eta}
    else:
        meta = {"kind": "abp_l", "lambda": strategy.lasso.lam}
    return Network(new_layers, net.activation), _make_report(records, total, meta)


def prune_baseline(net: Network, p: float) -> tuple[Network, PruneReport]:
    """Zero the floor(p*d) smallest-|w| slots of each neuron; survivors keep
    their original values (no refit)."""
    strategy = BaselineMag(p)
    records: list[NeuronPruneRecord] = []
    new_layers: list[LayerWeights] = []
    for k, layer in enumerate(net.layers, start=1):
        vals = layer.values.copy()
        mask = np.zeros_like(vals, dtype=bool)
        d = vals.shape[1]
        n_prune = int(math.floor(strategy.p * d))
        for j in range(vals.shape[0]):
            order = np.argsort(np.abs(vals[j]), kind="stable")
            drop = order[:n_prune]
            keep = np.sort(order[n_prune:])
            vals[j, drop] = 0.0
            mask[j, drop] = True
            records.append(
                NeuronPruneRecord(
                    k, j, int(np.count_nonzero(layer.values[j])), d - n_prune, keep, vals[j].copy()
                )
            )
        new_layers.append(LayerWeights(vals, mask))
    total = sum(l.values.size for l in net.layers)
    return Network(new_layers, net.activation), _make_report(records, total, {"kind": "baseline_mag", "p": p})


def approx_neuron_magnitude(
    w, features, targets, q: float, eta: float, layer: int = -1, neuron: int = -1
) -> NeuronPruneRecord:
    """Adaptive magnitude refit of one weight vector against explicit data."""
    w = np.asarray(w, dtype=float).ravel()
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float).ravel()
    if features.shape[1] != w.size:
        raise ValueError(f"{features.shape[1]} feature columns for a weight vector of length {w.size}")
    nz = int(np.count_nonzero(w))
    if nz == 0:
        return NeuronPruneRecord(
            layer, neuron, 0, 0, np.empty(0, dtype=int), np.zeros(w.size),
            refit_mse=float(np.mean(targets**2)), achieved_eta=None,
        )
    m = keep_count(w, q, eta)
    sup = top_m_indices(w, m)
    fit = ols_min_norm(features[:, sup], targets)
    new_w = np.zeros(w.size)
    new_w[sup] = fit.weights
    resid = features[:, sup] @ fit.weights - targets
    return NeuronPruneRecord(
        layer, neuron, nz, m, sup, new_w,
        refit_mse=float(np.mean(resid * resid)),
        achieved_eta=achieved_tail_ratio(w, m, q),
    )


def approx_neuron_lasso(
    features, targets, cfg: LassoConfig, constant_col: int | None = None,
    layer: int = -1, neuron: int = -1,
) -> NeuronPruneRecord:
    """LASSO refit of one neuron against explicit data; kept = support size."""
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float).ravel()
    fit = lasso_cd(features, targets, cfg, constant_col=constant_col)
    sup = fit.support
    resid = features[:, sup] @ fit.weights[sup] - targets
    return NeuronPruneRecord(
        layer, neuron, features.shape[1], int(sup.size), sup, fit.weights,
        refit_mse=float(np.mean(resid * resid)),
        achieved_eta=None,
        converged=fit.converged,
    )


def evaluate_pruned(original: Network, pruned: Network, data: Dataset):
    """(mse_original, mse_pruned, relative MSE increase) on the given data."""
    if original.layer_dims != pruned.layer_dims or original.activation != pruned.activation:
        raise ValueError("original and pruned networks must share architecture and activation")
    mse_orig = mse(original, data)
    mse_pruned = mse(pruned, data)
    if mse_orig == 0.0:
        raise ValueError("MSE increase ratio is undefined when the original MSE is zero")
    return mse_orig, mse_pruned, (mse_pruned - mse_orig) / mse_orig


def report_to_dict(report: PruneReport) -> dict:
    return {
        "strategy": report.strategy,
        "totals": {"total_params": report.total_params, "kept_params": report.kept_params},
        "network_compression_ratio": report.network_compression_ratio,
        "network_pruning_ratio": report.network_pruning_ratio,
        "records": [
            {
                "layer": r.layer,
                "neuron": r.neuron,
                "original_nonzeros": r.original_nonzeros,
                "kept": r.kept,
                "support": r.support.tolist(),
                "weights": r.weights[r.support].tolist(),
                "refit_mse": r.refit_mse,
                "achieved_eta": r.achieved_eta,
                "converged": r.converged,
            }
            for r in report.records
        ],
    }


def save_report(report: PruneReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_records_csv(report: PruneReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "neuron", "original_nonzeros", "kept", "refit_mse", "achieved_eta"])
        for r in report.records:
            writer.writerow(
                [
                    r.layer,
                    r.neuron,
                    r.original_nonzeros,
                    r.kept,
                    "" if r.refit_mse is None else repr(r.refit_mse),
                    "" if r.achieved_eta is None else repr(r.achieved_eta),
                ]
            )
