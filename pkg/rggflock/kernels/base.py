from __future__ import annotations

from enum import StrEnum
from typing import Protocol, Sequence

import numpy as np
from numpy.typing import NDArray


class KernelFamily(StrEnum):
    INDICATOR = "indicator"
    TRIANGULAR = "triangular"
    POWER_CAP = "powercap"
    TABULATED = "tabulated"


class KernelFamilyDetails(Protocol):
    """Shape of one kernel family.

    A family describes the unit-amplitude profile g on the normalized
    distance u = x / r, so that f(x) = amplitude * g(x / r). Profiles satisfy
    g(0) = 1, are non-increasing, positive on [0, 1) and zero on [1, inf).
    """

    family: KernelFamily
    uses_samples: bool

    @staticmethod
    def profile(
        u: NDArray[np.float64], gamma: float, samples: Sequence[float] | None
    ) -> NDArray[np.float64]:
        """Evaluate the unit-amplitude profile at normalized distances u >= 0."""
        ...

    @staticmethod
    def plateau(gamma: float, samples: Sequence[float] | None) -> float:
        """Largest u such that the profile equals 1 on [0, u)."""
        ...

    @staticmethod
    def breakpoints(gamma: float, samples: Sequence[float] | None) -> list[float]:
        """Interior points of [0, 1] where the profile is not smooth."""
        ...

    @staticmethod
    def c0_closed_form(d: int, gamma: float) -> float | None:
        """Closed form of the integral of g(y) y^(d-1) over [0, 1], if known."""
        ...

    @staticmethod
    def default_amplitude(n: int, d: int, alpha: float, cprime: float) -> float:
        """Amplitude prescribed for this family when n r^d = alpha log n."""
        ...
