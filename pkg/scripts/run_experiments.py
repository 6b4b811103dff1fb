#!/usr/bin/env python3
"""Run every figure-family experiment config and collect the CSVs.

Usage: python3 scripts/run_experiments.py [--out results/]

The emitted files feed the companion plotting package (plots/).
"""

import argparse
import pathlib
import sys

from leaseopt.cli import main as leaseopt_main

CONFIGS = [
    "fig_trend_mu.yaml",
    "fig_mer_sweep.yaml",
    "fig_subop_mu.yaml",
    "fig_incomplete_info.yaml",
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory")
    args = parser.parse_args()
    root = pathlib.Path(__file__).resolve().parent.parent
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in CONFIGS:
        config = root / "configs" / name
        out = out_dir / (config.stem + ".csv")
        print(f"== {name}")
        code = leaseopt_main(["experiment", "--config", str(config),
                              "--out", str(out)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
