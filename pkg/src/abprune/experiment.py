"""Replicated train -> prune -> evaluate sweeps with CSV/table reporting.

One replication retrains the dense network on a fresh split, prunes it with
every configured strategy cell off a single shared activation trace, and
scores the MSE increase on the held-out test split. Cells aggregate to mean
and standard error (sample stddev / sqrt(R)) across replications.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, apply_scaler, load_csv, split, standardize
from .network import activation
from .pruning import AbpL, AbpM, build_workspace, evaluate_pruned, prune_abp, prune_baseline
from .solvers import LassoConfig
from .training import TrainConfig, train

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "strategy_cells",
    "run_replication",
    "run_experiment",
    "aggregate",
    "write_outputs",
    "format_table",
]

RESULT_COLUMNS = [
    "method",
    "params",
    "compression_ratio_mean",
    "compression_ratio_se",
    "pruning_ratio_mean",
    "pruning_ratio_se",
    "mse_increase_mean",
    "mse_increase_se",
]

REPLICATION_COLUMNS = [
    "method",
    "params",
    "replication",
    "seed",
    "compression_ratio",
    "pruning_ratio",
    "mse_orig",
    "mse_pruned",
    "mse_increase_ratio",
    "error",
]


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str = "data/california_housing.csv"
    target_column: str = "MedHouseVal"
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    hidden_dims: tuple[int, ...] = (64, 64, 64)
    activation: str = "relu"
    train: TrainConfig = field(default_factory=TrainConfig)
    q_grid: tuple[float, ...] = (0.3, 0.5, 0.7)
    eta_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3)
    lambda_grid: tuple[float, ...] = (1e-5, 1e-4, 1e-3)
    p_grid: tuple[float, ...] = (0.3, 0.5, 0.7)
    replications: int = 20
    output_dir: str = "out"
    standardize_targets: bool = False
    prune_rows: int | None = None
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 10000

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        for name in ("q_grid", "eta_grid", "lambda_grid", "p_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if not self.hidden_dims:
            raise ValueError("hidden_dims must be nonempty")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["notes"] = [
            "hidden_dims, activation init, and training hyper-parameters are "
            "toolkit defaults chosen for reproducibility, not externally given values",
            "features standardized on the train split only; targets left in raw units "
            "unless standardize_targets",
            "MSE increase ratio evaluated on the held-out test split",
        ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        d.pop("notes", None)
        if "train" in d and isinstance(d["train"], dict):
            d["train"] = TrainConfig(**d["train"])
        for name in ("fractions", "hidden_dims", "q_grid", "eta_grid", "lambda_grid", "p_grid"):
            if name in d and d[name] is not None:
                d[name] = tuple(d[name])
        return cls(**d)


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: list[dict]


def strategy_cells(cfg: ExperimentConfig) -> list[tuple[str, dict]]:
    """Canonical (method, params) grid: ABP-L by lambda, ABP-M by (q, eta), baseline by p."""
    cells: list[tuple[str, dict]] = []
    for lam in cfg.lambda_grid:
        cells.append(("abp_l", {"lambda": float(lam)}))
    for q in cfg.q_grid:
        for eta in cfg.eta_grid:
            cells.append(("abp_m", {"q": float(q), "eta": float(eta)}))
    for p in cfg.p_grid:
        cells.append(("baseline_mag", {"p": float(p)}))
    return cells


def params_label(params: dict) -> str:
    return ",".join(f"{k}={v!r}" for k, v in sorted(params.items()))


def run_replication(cfg: ExperimentConfig, dataset: Dataset, rep: int) -> list[dict]:
    """Train once, prune with every cell off one shared workspace, score on test."""
    seed = cfg.split_seed + rep
    train_set, val_set, test_set = split(dataset, cfg.fractions, seed)
    train_std, scaler = standardize(train_set)
    val_std = apply_scaler(val_set, scaler)
    test_std = apply_scaler(test_set, scaler)
    if cfg.standardize_targets:
        mu = float(train_std.targets.mean())
        sd = float(train_std.targets.std())
        sd = sd if sd > 0 else 1.0
        for ds in (train_std, val_std, test_std):
            ds.targets = (ds.targets - mu) / sd
    act = activation(cfg.activation)
    arch = [dataset.n_features, *cfg.hidden_dims, 1]
    net, _ = train(arch, act, train_std, replace(cfg.train, seed=cfg.train.seed + rep), val_data=val_std)
    workspace = build_workspace(net, train_std, rows=cfg.prune_rows, seed=seed)
    rows = []
    for method, params in strategy_cells(cfg):
        row = {
            "method": method,
            "params": params_label(params),
            "replication": rep,
            "seed": seed,
            "compression_ratio": math.nan,
            "pruning_ratio": math.nan,
            "mse_orig": math.nan,
            "mse_pruned": math.nan,
            "mse_increase_ratio": math.nan,
            "error": "",
        }
        try:
            if method == "abp_l":
                lasso = LassoConfig(lam=params["lambda"], tol=cfg.lasso_tol, max_iter=cfg.lasso_max_iter)
                pruned, report = prune_abp(net, train_std, AbpL(lasso), workspace=workspace)
            elif method == "abp_m":
                pruned, report = prune_abp(net, train_std, AbpM(params["q"], params["eta"]), workspace=workspace)
            else:
                pruned, report = prune_baseline(net, params["p"])
            mse_orig, mse_pruned, increase = evaluate_pruned(net, pruned, test_std)
            row.update(
                compression_ratio=report.network_compression_ratio,
                pruning_ratio=report.network_pruning_ratio,
                mse_orig=mse_orig,
                mse_pruned=mse_pruned,
                mse_increase_ratio=increase,
            )
        except Exception as e:  # record the failure, keep the sweep going
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None, progress=None) -> ExperimentResult:
    if dataset is None:
        dataset = load_csv(cfg.data_path, cfg.target_column)
    rows: list[dict] = []
    for rep in range(cfg.replications):
        rows.extend(run_replication(cfg, dataset, rep))
        if progress is not None:
            progress(rep)
    return ExperimentResult(rows, aggregate(rows, cfg))


def aggregate(rows: list[dict], cfg: ExperimentConfig) -> list[dict]:
    """Per-cell mean and standard error over the successful replications."""
    summary = []
    for method, params in strategy_cells(cfg):
        label = params_label(params)
        cell = [r for r in rows if r["method"] == method and r["params"] == label and not r["error"]]
        entry = {"method": method, "params": label, "n": len(cell)}
        for key, out in (
            ("compression_ratio", "compression_ratio"),
            ("pruning_ratio", "pruning_ratio"),
            ("mse_increase_ratio", "mse_increase"),
        ):
            vals = np.array([r[key] for r in cell], dtype=float)
            if vals.size == 0:
                entry[f"{out}_mean"] = math.nan
                entry[f"{out}_se"] = math.nan
            else:
                entry[f"{out}_mean"] = float(vals.mean())
                entry[f"{out}_se"] = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        summary.append(entry)
    return summary


def format_table(summary: list[dict]) -> str:
    """Fixed-width table of mean (se) per cell, matching the results CSV."""
    header = f"{'method':<14}{'params':<28}{'compress':>16}{'prune':>16}{'mse_increase':>18}"
    lines = [header, "-" * len(header)]
    for e in summary:
        cr = f"{e['compression_ratio_mean']:.2f} ({e['compression_ratio_se']:.2f})"
        pr = f"{e['pruning_ratio_mean']:.2f} ({e['pruning_ratio_se']:.2f})"
        mi = f"{e['mse_increase_mean']:.2f} ({e['mse_increase_se']:.2f})"
        lines.append(f"{e['method']:<14}{e['params']:<28}{cr:>16}{pr:>16}{mi:>18}")
    return "\n".join(lines)


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, outdir) -> dict[str, Path]:
    """Write config echo, per-replication CSV, aggregated CSV, and the table."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "config": outdir / "config.json",
        "replications": outdir / "replications.csv",
        "results": outdir / "results.csv",
        "table": outdir / "table.txt",
    }
    with open(paths["config"], "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["replications"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPLICATION_COLUMNS)
        writer.writeheader()
        for r in result.rows:
            writer.writerow({k: _fmt(r[k]) for k in REPLICATION_COLUMNS})
    with open(paths["results"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for e in result.summary:
            writer.writerow({k: _fmt(e[k]) if k in e else "" for k in RESULT_COLUMNS})
    with open(paths["table"], "w", encoding="utf-8") as fh:
        fh.write(format_table(result.summary))
        fh.write("\n")
    return paths


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
