"""Test fixtures for the rggflock toolkit."""

import json
import os
import sys

import numpy as np
import pytest

# Add the project root directory to the Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from rggflock.kernel import Kernel
from rggflock.kernels import KernelFamily


def pytest_configure(config):
    """Register the marker for long-running statistical tests."""
    config.addinivalue_line("markers", "slow: long-running statistical test")


@pytest.fixture
def indicator_kernel():
    """Indicator kernel with a small radius, so the radial formula applies."""
    return Kernel(family=KernelFamily.INDICATOR, radius=0.1, amplitude=0.5)


@pytest.fixture
def triangular_kernel():
    """Triangular kernel with the same radius as the indicator fixture."""
    return Kernel(family=KernelFamily.TRIANGULAR, radius=0.1, amplitude=0.5)


@pytest.fixture
def line_positions():
    """Three agents on a horizontal line, spacing 0.1."""
    return np.array([[0.1, 0.5], [0.2, 0.5], [0.3, 0.5]])


@pytest.fixture
def sim_config_data():
    """A small half-split experiment that flocks quickly."""
    return {
        "schema_version": 1,
        "kind": "simulate",
        "n": 40,
        "d": 2,
        "alpha": 3.0,
        "kernel": {"family": "triangular", "amplitude": 0.025},
        "velocity": {"mode": "halfsplit", "v0": 1e-6},
        "t_max": 2000,
        "flock_tol": 1e-3,
        "seed": 11,
    }


@pytest.fixture
def sim_config_file(tmp_path, sim_config_data):
    """The small experiment written to a JSON file."""
    path = tmp_path / "simulate.json"
    path.write_text(json.dumps(sim_config_data, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def sweep_config_data(sim_config_data):
    """A two by two phase sweep on the small experiment."""
    base = {
        key: value for key, value in sim_config_data.items() if key != "velocity"
    }
    base.pop("kind")
    base["n"] = 30
    base["t_max"] = 1000
    base["flock_tol"] = 1e-2
    return {
        "kind": "sweep",
        "base": base,
        "alphas": [2.0, 3.0],
        "vprimes": [0.01, 1000.0],
        "trials": 2,
        "seed": 5,
    }
