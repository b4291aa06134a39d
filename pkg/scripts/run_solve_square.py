#!/usr/bin/env python3
"""Run the shipped solve_square scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "solve_square.cfg"

if __name__ == "__main__":
    sys.exit(main(["solve", "--config", str(CONFIG),
                   "--out", "out_solve_square", *sys.argv[1:]]))
