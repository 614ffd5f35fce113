"""Coherency-constrained controlled islanding of power networks."""

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"

__version__ = "0.1.0"
