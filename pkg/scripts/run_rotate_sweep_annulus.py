#!/usr/bin/env python3
"""Run the shipped rotate_sweep_annulus scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "rotate_sweep_annulus.cfg"

if __name__ == "__main__":
    sys.exit(main(["rotate-sweep", "--config", str(CONFIG),
                   "--out", "out_rotate_sweep_annulus", *sys.argv[1:]]))
