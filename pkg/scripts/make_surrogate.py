#!/usr/bin/env python3
"""Generate data/surrogate_housing.csv: a housing-scale synthetic regression task.

Same row/feature counts as California Housing (20640 x 8) with a smooth
nonlinear response, for running the experiment pipeline offline. A JSON
sidecar records the generator settings.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from abprune import synth_friedman  # noqa: E402
from abprune.data import save_synth_csv  # noqa: E402

OUT = Path(__file__).resolve().parent.parent / "data" / "surrogate_housing.csv"


def main() -> int:
    d, info = synth_friedman(20640, 8, noise_sd=0.1, seed=7)
    sidecar = save_synth_csv(d, info, OUT)
    print(f"wrote {OUT} and {sidecar}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
