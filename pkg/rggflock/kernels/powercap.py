"""Power-cap kernel c_n (1 - (x / r)^gamma)."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..geometry import unit_ball_volume
from .base import KernelFamily, KernelFamilyDetails


class PowerCap(KernelFamilyDetails):
    family = KernelFamily.POWER_CAP
    uses_samples = False

    @staticmethod
    def profile(
        u: NDArray[np.float64], gamma: float, samples: Sequence[float] | None
    ) -> NDArray[np.float64]:
        inside = np.minimum(u, 1.0)
        return 1.0 - np.power(inside, gamma)

    @staticmethod
    def plateau(gamma: float, samples: Sequence[float] | None) -> float:
        return 0.0

    @staticmethod
    def breakpoints(gamma: float, samples: Sequence[float] | None) -> list[float]:
        return []

    @staticmethod
    def c0_closed_form(d: int, gamma: float) -> float | None:
        return gamma / (d * (gamma + d))

    @staticmethod
    def default_amplitude(n: int, d: int, alpha: float, cprime: float) -> float:
        # c' / (pi_d log^{d beta} n) with log^{d beta} n = n r^d = alpha log n
        return cprime / (unit_ball_volume(d) * alpha * math.log(n))
