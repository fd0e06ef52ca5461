#!/usr/bin/env python3
"""Branch spectra, swap tables, and critical photon numbers for the
close- and far-detuned operating points."""
import sys
from pathlib import Path

from zreadout.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

if __name__ == "__main__":
    for name in ("spectrum_close", "spectrum_far"):
        code = main(["spectrum", "--config", str(CONFIGS / f"{name}.toml"),
                     *sys.argv[1:]])
        if code != 0:
            sys.exit(code)
