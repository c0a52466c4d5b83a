#!/usr/bin/env python3
"""
Run a pointspec experiment

Usage:
    python start_lab.py spectrum --alpha 2 --beta 1 --h 0.3
    python start_lab.py verify --sweep default --out reports/verify.json
    POINTSPEC_LOG=debug python start_lab.py evolve --config runs/beat.json
"""

import os
import sys

# Add the current directory to the path so we can import pointspec
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pointspec.main import main

if __name__ == "__main__":
    sys.exit(main())
