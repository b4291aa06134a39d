#!/usr/bin/env python3
"""Run the shipped symmetry_check_annulus scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "symmetry_check_annulus.cfg"

if __name__ == "__main__":
    sys.exit(main(["symmetry-check", "--config", str(CONFIG),
                   "--out", "out_symmetry_check_annulus", *sys.argv[1:]]))
