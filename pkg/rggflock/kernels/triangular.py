"""Triangular kernel: weight decays linearly to zero at the radius."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..geometry import unit_ball_volume
from .base import KernelFamily, KernelFamilyDetails


class Triangular(KernelFamilyDetails):
    """f(x) = b (1 - x / r) for x < r, else 0.

    The phase-diagram runs use b = 1 / (alpha pi_d log n).
    """

    family = KernelFamily.TRIANGULAR
    uses_samples = False

    @staticmethod
    def profile(
        u: NDArray[np.float64], gamma: float, samples: Sequence[float] | None
    ) -> NDArray[np.float64]:
        return np.clip(1.0 - u, 0.0, 1.0)

    @staticmethod
    def plateau(gamma: float, samples: Sequence[float] | None) -> float:
        return 0.0

    @staticmethod
    def breakpoints(gamma: float, samples: Sequence[float] | None) -> list[float]:
        return []

    @staticmethod
    def c0_closed_form(d: int, gamma: float) -> float | None:
        return 1.0 / (d * (d + 1))

    @staticmethod
    def default_amplitude(n: int, d: int, alpha: float, cprime: float) -> float:
        return 1.0 / (alpha * unit_ball_volume(d) * math.log(n))
