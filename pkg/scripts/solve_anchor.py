#!/usr/bin/env python3
"""Solve the eight-operator reference market and cross-check against
Monte Carlo.

Usage: python3 scripts/solve_anchor.py
"""

import pathlib
import sys

from leaseopt.cli import main as leaseopt_main


def main() -> int:
    root = pathlib.Path(__file__).resolve().parent.parent
    config = str(root / "configs" / "anchor_n8.yaml")
    code = leaseopt_main(["solve", "--config", config])
    if code != 0:
        return code
    return leaseopt_main(["validate", "--config", config, "--seed", "0",
                          "--horizon", "307"])


if __name__ == "__main__":
    sys.exit(main())
