#!/usr/bin/env python3
"""Assignment-error curves versus integration time for several pulse
amplitudes, with Wilson intervals and the matched-filter Gaussian bound.

2000 trajectories per qubit state and amplitude; pass --workers N or set
ZREADOUT_WORKERS to spread trajectory batches over processes.
"""
import sys
from pathlib import Path

from zreadout.cli import main

CONFIG = (Path(__file__).resolve().parent.parent
          / "configs" / "readout_error.toml")

if __name__ == "__main__":
    sys.exit(main(["readout", "--config", str(CONFIG), *sys.argv[1:]]))
