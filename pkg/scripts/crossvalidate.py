#!/usr/bin/env python3
"""Cross-validate the chain solver against the closed forms (CI gate).

Exit status 0 when the maximum relative deviation over the random grid stays
below 1e-9, 3 otherwise.

Usage:
    python scripts/crossvalidate.py [--count N] [--seed S]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from aoi_csma.cli import main as cli_main  # noqa: E402

if __name__ == "__main__":
    sys.exit(cli_main(["crossvalidate", *sys.argv[1:]]))
