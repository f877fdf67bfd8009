#!/usr/bin/env python3
"""Fetch the California Housing dataset and write data/california_housing.csv.

Needs scikit-learn and network access (the dataset downloads on first use).
The acceptance suite and the default experiment config pick the CSV up from
data/ automatically once it exists.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from abprune import Dataset, save_csv  # noqa: E402

OUT = Path(__file__).resolve().parent.parent / "data" / "california_housing.csv"


def main() -> int:
    try:
        from sklearn.datasets import fetch_california_housing
    except ImportError:
        print("scikit-learn is required: pip install scikit-learn", file=sys.stderr)
        return 1
    try:
        bunch = fetch_california_housing()
    except Exception as e:
        print(f"download failed ({e}); check network access", file=sys.stderr)
        return 1
    d = Dataset(np.asarray(bunch.data), np.asarray(bunch.target), tuple(bunch.feature_names))
    save_csv(d, OUT, target_column="MedHouseVal")
    print(f"wrote {OUT} ({d.n_rows} rows, {d.n_features} features)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
