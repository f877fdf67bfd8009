"""Tabular regression data: CSV I/O, standardization, splitting, synthetic fixtures."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "ScalerParams",
    "load_csv",
    "save_csv",
    "standardize",
    "apply_scaler",
    "invert_scaler",
    "split",
    "synth_regression",
    "synth_friedman",
    "save_synth_csv",
]


@dataclass
class Dataset:
    """An in-memory table of predictor rows plus a real-valued response column."""

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float).ravel()
        n, p = self.features.shape
        if n < 1 or p < 1:
            raise ValueError(f"dataset needs at least one row and one feature, got shape {n}x{p}")
        if self.targets.shape[0] != n:
            raise ValueError(f"got {self.targets.shape[0]} targets for {n} feature rows")
        if not self.feature_names:
            self.feature_names = tuple(f"x{j}" for j in range(p))
        self.feature_names = tuple(str(s) for s in self.feature_names)
        if len(self.feature_names) != p:
            raise ValueError(f"{len(self.feature_names)} feature names for {p} columns")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain NaN or Inf")
        if not np.isfinite(self.targets).all():
            raise ValueError("targets contain NaN or Inf")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> Dataset:
        """Row subset as a new Dataset."""
        return Dataset(self.features[idx], self.targets[idx], self.feature_names)


@dataclass
class ScalerParams:
    """Per-column location/scale from `standardize`.

    Stddevs use the population (divide-by-N) convention. Columns that are
    exactly constant are flagged and mapped to all-zeros instead of erroring.
    """

    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float).ravel()
        self.stds = np.asarray(self.stds, dtype=float).ravel()
        self.constant = np.asarray(self.constant, dtype=bool).ravel()
        if not (self.means.shape == self.stds.shape == self.constant.shape):
            raise ValueError("scaler parameter vectors must have equal length")
        if np.any(self.stds <= 0):
            raise ValueError("stddevs must be positive (constant columns store 1.0)")

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "constant": self.constant.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScalerParams:
        return cls(np.asarray(d["means"]), np.asarray(d["stds"]), np.asarray(d["constant"], dtype=bool))


def load_csv(path, target_column: str) -> Dataset:
    """Load a comma-separated, header-first, UTF-8 table of finite reals.

    The target column is removed from the features. Parse failures report the
    offending data row (1-based, header excluded) and column name.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty CSV file") from None
        if target_column not in header:
            raise ValueError(f"{path}: target column {target_column!r} not found; columns are {header}")
        if len(header) < 2:
            raise ValueError(f"{path}: need at least one feature column besides {target_column!r}")
        t_idx = header.index(target_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != t_idx)
        feats: list[list[float]] = []
        targets: list[float] = []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}")
            vals = []
            for cell, name in zip(row, header):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {rownum}, column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(f"{path}: row {rownum}, column {name!r}: non-finite value {cell!r}")
                vals.append(v)
            targets.append(vals.pop(t_idx))
            feats.append(vals)
        if not feats:
            raise ValueError(f"{path}: no data rows")
    return Dataset(np.asarray(feats), np.asarray(targets), feature_names)


def save_csv(d: Dataset, path, target_column: str = "y") -> None:
    """Write a Dataset back to CSV; values round-trip through `load_csv` exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [target_column])
        for row, t in zip(d.features, d.targets):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])


def standardize(d: Dataset) -> tuple[Dataset, ScalerParams]:
    """Center and scale each feature column to mean 0, population stddev 1.

    Exactly-constant columns become all-zeros and are flagged on the returned
    ScalerParams. Targets are left untouched.
    """
    if d.n_rows < 2:
        raise ValueError("standardize needs at least 2 rows")
    x = d.features
    constant = x.max(axis=0) == x.min(axis=0)
    means = x.mean(axis=0)
    stds = np.sqrt(np.mean((x - means) ** 2, axis=0))
    stds = np.where(constant | (stds == 0.0), 1.0, stds)
    params = ScalerParams(means, stds, constant)
    return apply_scaler(d, params), params


def apply_scaler(d: Dataset, params: ScalerParams) -> Dataset:
    """Transform features by (x - mean) / std; constant-flagged columns map to 0."""
    if params.means.shape[0] != d.n_features:
        raise ValueError(f"scaler has {params.means.shape[0]} columns, data has {d.n_features}")
    x = (d.features - params.means) / params.stds
    x[:, params.constant] = 0.0
    return Dataset(x, d.targets.copy(), d.feature_names)


def invert_scaler(d: Dataset, params: ScalerParams) -> Dataset:
    """Undo `apply_scaler`; constant columns are restored to their stored mean."""
    if params.means.shape[0] != d.n_features:
        raise ValueError(f"scaler has {params.means.shape[0]} columns, data has {d.n_features}")
    x = d.features * params.stds + params.means
    return Dataset(x, d.targets.copy(), d.feature_names)


def split(d: Dataset, fractions, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Random disjoint (train, val, test) partition of the rows.

    Part sizes are floor(f*N) for the first two fractions, remainder for the
    third. Deterministic for a fixed seed.
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr):
        raise ValueError(f"need three positive fractions, got {fractions!r}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fr)!r}")
    n = d.n_rows
    # +1e-9 guards against float dust like 1/3*3 = 0.9999999999999998
    n1 = int(math.floor(fr[0] * n + 1e-9))
    n2 = int(math.floor(fr[1] * n + 1e-9))
    if n1 < 1 or n2 < 1 or n - n1 - n2 < 1:
        raise ValueError(f"split of {n} rows with fractions {fr} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    return d.take(perm[:n1]), d.take(perm[n1 : n1 + n2]), d.take(perm[n1 + n2 :])


def synth_regression(
    n: int, p: int, sparsity: int, noise_sd: float, seed: int
) -> tuple[Dataset, dict]:
    """Gaussian design with a sparse linear response.

    Returns the dataset plus generation metadata (true coefficients and
    support) so tests can check exact recovery in the noiseless case.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= sparsity <= p:
        raise ValueError(f"sparsity must lie in [0, p], got {sparsity} with p={p}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    coef = np.zeros(p)
    support: list[int] = []
    if sparsity > 0:
        support = np.sort(rng.choice(p, size=sparsity, replace=False)).tolist()
        coef[support] = rng.uniform(0.5, 2.0, size=sparsity) * rng.choice([-1.0, 1.0], size=sparsity)
    y = x @ coef
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    info = {
        "kind": "sparse_linear",
        "coefficients": coef.tolist(),
        "support": support,
        "noise_sd": float(noise_sd),
        "seed": int(seed),
    }
    return Dataset(x, y), info


def synth_friedman(n: int, p: int = 8, noise_sd: float = 1.0, seed: int = 0) -> tuple[Dataset, dict]:
    """Nonlinear benchmark regression surface on uniform inputs.

    y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 + noise; columns
    beyond the first five are pure noise features. Used as a stand-in when a
    real housing-style CSV is not available.
    """
    if p < 5:
        raise ValueError("friedman surface needs at least 5 features")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, p))
    y = (
        10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 10.0 * x[:, 3]
        + 5.0 * x[:, 4]
    )
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    info = {"kind": "friedman", "noise_sd": float(noise_sd), "seed": int(seed), "n": int(n), "p": int(p)}
    return Dataset(x, y), info


def save_synth_csv(d: Dataset, info: dict, path, target_column: str = "y") -> Path:
    """Write a synthetic dataset as CSV plus a JSON metadata sidecar."""
    path = Path(path)
    save_csv(d, path, target_column=target_column)
    sidecar = path.with_suffix(".meta.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
