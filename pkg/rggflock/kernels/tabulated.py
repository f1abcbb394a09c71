"""User supplied kernel profile, linearly interpolated between samples."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..errors import InvalidKernel
from .base import KernelFamily, KernelFamilyDetails


def _grid(samples: Sequence[float]) -> NDArray[np.float64]:
    return np.linspace(0.0, 1.0, len(samples))


def validate_samples(samples: Sequence[float] | None) -> tuple[float, ...]:
    """Check a sampled profile on an equally spaced grid over [0, r].

    Args:
        samples: Kernel values at u = 0, 1/(m-1), ..., 1.

    Returns:
        The samples as a tuple of floats.

    Raises:
        InvalidKernel: If the samples are not a valid bounded-support profile.
    """
    if samples is None or len(samples) < 2:
        raise InvalidKernel("tabulated kernel needs at least two samples", "samples")
    values = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidKernel("tabulated samples must be finite", "samples")
    if np.any(values < 0.0):
        raise InvalidKernel("tabulated samples must be nonnegative", "samples")
    if np.any(np.diff(values) > 0.0):
        raise InvalidKernel("tabulated samples must be non-increasing", "samples")
    if values[-1] != 0.0:
        raise InvalidKernel("final tabulated sample must be 0", "samples")
    if np.any(values[:-1] <= 0.0):
        raise InvalidKernel(
            "tabulated samples must stay positive before the final sample", "samples"
        )
    return tuple(float(v) for v in values)


class Tabulated(KernelFamilyDetails):
    """Piecewise linear profile through samples[k] / samples[0]."""

    family = KernelFamily.TABULATED
    uses_samples = True

    @staticmethod
    def profile(
        u: NDArray[np.float64], gamma: float, samples: Sequence[float] | None
    ) -> NDArray[np.float64]:
        assert samples is not None
        values = np.asarray(samples, dtype=float) / samples[0]
        return np.interp(u, _grid(samples), values, right=0.0)

    @staticmethod
    def plateau(gamma: float, samples: Sequence[float] | None) -> float:
        assert samples is not None
        grid = _grid(samples)
        below = np.flatnonzero(np.asarray(samples) < samples[0])
        return float(grid[below[0] - 1])

    @staticmethod
    def breakpoints(gamma: float, samples: Sequence[float] | None) -> list[float]:
        assert samples is not None
        return [float(u) for u in _grid(samples)[1:-1]]

    @staticmethod
    def c0_closed_form(d: int, gamma: float) -> float | None:
        return None

    @staticmethod
    def default_amplitude(n: int, d: int, alpha: float, cprime: float) -> float:
        raise InvalidKernel(
            "tabulated kernels have no prescribed amplitude", "amplitude"
        )
