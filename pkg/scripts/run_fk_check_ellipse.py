#!/usr/bin/env python3
"""Run the shipped fk_check_ellipse scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "fk_check_ellipse.cfg"

if __name__ == "__main__":
    sys.exit(main(["fk-check", "--config", str(CONFIG),
                   "--out", "out_fk_check_ellipse", *sys.argv[1:]]))
