#!/usr/bin/env python3
"""Run the full replicated pruning experiment on the housing data.

Uses data/california_housing.csv when present (see fetch_california.py),
otherwise data/surrogate_housing.csv (generated on the fly if missing).
Writes replications.csv, results.csv, table.txt, and the effective config
under out/housing/ and prints the summary table.
"""

import argparse
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from abprune import synth_friedman  # noqa: E402
from abprune.data import save_synth_csv  # noqa: E402
from abprune.experiment import ExperimentConfig, format_table, run_experiment, write_outputs  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replications", type=int, default=20)
    ap.add_argument("--out", default=str(ROOT / "out" / "housing"))
    args = ap.parse_args()

    california = ROOT / "data" / "california_housing.csv"
    surrogate = ROOT / "data" / "surrogate_housing.csv"
    if california.exists():
        data_path, target = california, "MedHouseVal"
    else:
        if not surrogate.exists():
            d, info = synth_friedman(20640, 8, noise_sd=0.1, seed=7)
            save_synth_csv(d, info, surrogate)
            print(f"california CSV not found; generated {surrogate}")
        data_path, target = surrogate, "y"

    cfg = ExperimentConfig(
        data_path=str(data_path),
        target_column=target,
        replications=args.replications,
        output_dir=args.out,
    )
    t0 = time.time()
    result = run_experiment(cfg, progress=lambda rep: print(f"replication {rep + 1}/{cfg.replications} done", flush=True))
    paths = write_outputs(cfg, result, cfg.output_dir)
    print(format_table(result.summary))
    print(f"finished in {time.time() - t0:.0f}s; outputs in {paths['results'].parent}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
