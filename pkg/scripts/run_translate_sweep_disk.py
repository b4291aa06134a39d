#!/usr/bin/env python3
"""Run the shipped translate_sweep_disk scenario; extra CLI flags pass through."""

import sys
from pathlib import Path

from polarlap.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "translate_sweep_disk.cfg"

if __name__ == "__main__":
    sys.exit(main(["translate-sweep", "--config", str(CONFIG),
                   "--out", "out_translate_sweep_disk", *sys.argv[1:]]))
