#!/usr/bin/env python3
"""Perturbative spectrum report: per-photon frequency pulls and the
dispersive-window summary at the close-detuned operating point."""
import sys
from pathlib import Path

from zreadout.cli import main

CONFIG = (Path(__file__).resolve().parent.parent
          / "configs" / "sw_window.toml")

if __name__ == "__main__":
    sys.exit(main(["sw-report", "--config", str(CONFIG), *sys.argv[1:]]))
