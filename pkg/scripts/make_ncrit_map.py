#!/usr/bin/env python3
"""Critical-photon-number map over the (E_J/E_C, detuning) plane.

Single-process this takes a couple of minutes; pass --workers N or set
ZREADOUT_WORKERS to parallelize over grid points.
"""
import sys
from pathlib import Path

from zreadout.cli import main

CONFIG = (Path(__file__).resolve().parent.parent
          / "configs" / "ncrit_band.toml")

if __name__ == "__main__":
    sys.exit(main(["ncrit-map", "--config", str(CONFIG), *sys.argv[1:]]))
