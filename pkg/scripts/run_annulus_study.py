#!/usr/bin/env python3
"""Run the shipped annulus_study scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "annulus_study.cfg"

if __name__ == "__main__":
    sys.exit(main(["annulus-study", "--config", str(CONFIG),
                   "--out", "out_annulus_study", *sys.argv[1:]]))
