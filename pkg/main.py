#!/usr/bin/env python3
"""
swipeauth - swipe-gesture continuous authentication

Runs the command line without installing the package.

Usage:
    python main.py synth --seed 7 --users 20 --out data/synthetic
    python main.py experiment table1 --data data/synthetic --out results/
"""

import sys
from pathlib import Path

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from swipeauth.cli import main


if __name__ == "__main__":
    if sys.version_info < (3, 8):
        print("ERROR: Python 3.8 or higher is required")
        sys.exit(1)
    sys.exit(main())
