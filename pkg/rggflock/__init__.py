"""Flocking on random geometric graphs: simulation and numerical checks."""
from __future__ import annotations

__version__ = "0.1.0"  # x-release-please-version
