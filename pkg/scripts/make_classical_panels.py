#!/usr/bin/env python3
"""Pendulum phase portraits, stroboscopic sections under both drive
couplings, and orbit-deviation curves locating the chaos onset."""
import sys
from pathlib import Path

from zreadout.cli import main

CONFIG = (Path(__file__).resolve().parent.parent
          / "configs" / "classical_chaos.toml")

if __name__ == "__main__":
    sys.exit(main(["classical", "--config", str(CONFIG), *sys.argv[1:]]))
