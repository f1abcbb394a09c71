"""Interaction kernels f_n and their shifted variants f_{n,delta}."""
from __future__ import annotations

import logging
import math
import numbers
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, overload

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DegenerateKernel,
    DomainError,
    InvalidKernel,
    KernelFamilyNotSupportedException,
)
from .kernels import (
    KERNEL_FAMILIES,
    KernelFamily,
    KernelFamilyDetails,
    validate_samples,
)
from .numerics import integrate_1d

_LOGGER = logging.getLogger(__name__)


def resolve_family(family: KernelFamily | str) -> type[KernelFamilyDetails]:
    """Look up the family details class.

    Raises:
        KernelFamilyNotSupportedException: If the family is unknown.
    """
    try:
        key = KernelFamily(family)
    except ValueError:
        raise KernelFamilyNotSupportedException(
            f"Kernel family {family} is not supported"
        ) from None
    if key not in KERNEL_FAMILIES:
        raise KernelFamilyNotSupportedException(
            f"Kernel family {family} is not supported"
        )
    return KERNEL_FAMILIES[key]


@dataclass(frozen=True)
class Kernel:
    """Radial interaction weight f(x) = amplitude * g(max(0, x - shift r) / r).

    Instances are immutable and can be shared between threads.

    Attributes:
        family: Kernel family tag.
        radius: Interaction radius r (> 0).
        amplitude: f(0), called b, b_n or c_n depending on the family (> 0).
        gamma: Exponent of the power-cap family (> 0).
        shift: Outward shift delta in units of r (>= 0); 0 for f_n itself.
        samples: Profile samples on an even grid over [0, r] (tabulated only).
    """

    family: KernelFamily
    radius: float
    amplitude: float
    gamma: float = 1.0
    shift: float = 0.0
    samples: tuple[float, ...] | None = None
    details: type[KernelFamilyDetails] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        details = resolve_family(self.family)
        object.__setattr__(self, "family", details.family)
        object.__setattr__(self, "details", details)
        for name in ("radius", "amplitude", "gamma"):
            value = getattr(self, name)
            if not (
                isinstance(value, numbers.Real)
                and not isinstance(value, bool)
                and math.isfinite(value)
                and value > 0
            ):
                raise InvalidKernel(
                    f"{name} must be a positive number, got {value!r}", name
                )
            object.__setattr__(self, name, float(value))
        if not (math.isfinite(self.shift) and self.shift >= 0):
            raise InvalidKernel(
                f"shift must be nonnegative, got {self.shift!r}", "shift"
            )
        object.__setattr__(self, "shift", float(self.shift))
        if details.uses_samples:
            object.__setattr__(self, "samples", validate_samples(self.samples))
        elif self.samples is not None:
            raise InvalidKernel(
                f"samples are only accepted by the tabulated family, not {self.family}",
                "samples",
            )

    @property
    def f0(self) -> float:
        """Plateau value f(0)."""
        return self.amplitude

    @property
    def support_end(self) -> float:
        """Distance (1 + delta) r beyond which the weight vanishes."""
        return (1.0 + self.shift) * self.radius

    @property
    def plateau_end(self) -> float:
        """Distance up to which the weight stays at f(0)."""
        plateau = self.details.plateau(self.gamma, self.samples)
        return (self.shift + plateau) * self.radius

    @overload
    def eval(self, x: float) -> float: ...

    @overload
    def eval(self, x: NDArray[np.float64]) -> NDArray[np.float64]: ...

    def eval(self, x: ArrayLike) -> Any:
        """Evaluate the kernel at nonnegative distances.

        Args:
            x: A distance or an array of distances.

        Returns:
            A float for scalar input, otherwise an array of weights.

        Raises:
            DomainError: If any distance is negative or NaN.
        """
        distances = np.asarray(x, dtype=float)
        if np.any(np.isnan(distances)) or np.any(distances < 0.0):
            raise DomainError("kernel distances must be nonnegative")
        inner = np.maximum(distances - self.shift * self.radius, 0.0)
        values = self.amplitude * self.details.profile(
            inner / self.radius, self.gamma, self.samples
        )
        values = np.where(distances >= self.support_end, 0.0, values)
        if values.ndim == 0:
            return float(values)
        return values

    def shifted(self, delta: float) -> Kernel:
        """Return f_{n,delta}, equal to f(0) on [0, delta r] and shifted by delta r.

        Raises:
            DomainError: If delta < 0 or the kernel is already shifted.
        """
        if not (math.isfinite(delta) and delta >= 0):
            raise DomainError(f"shift must be nonnegative, got {delta!r}")
        if self.shift != 0.0:
            raise DomainError("kernel is already shifted")
        if delta == 0:
            return self
        return replace(self, shift=float(delta))

    def unshifted(self) -> Kernel:
        return replace(self, shift=0.0)

    def c0_integral(self, d: int) -> float:
        """(1/f(0)) times the integral of f(r y) y^(d-1) over [0, 1].

        Raises:
            DomainError: If the kernel is shifted or d < 2.
            DegenerateKernel: If f(0) = 0.
        """
        if self.shift != 0.0:
            raise DomainError("c0 is defined for the unshifted kernel")
        if d < 2:
            raise DomainError(f"dimension must be at least 2, got {d}")
        if self.f0 == 0.0:
            raise DegenerateKernel("f(0) = 0")

        def integrand(y: float) -> float:
            return float(
                self.details.profile(np.asarray(y), self.gamma, self.samples)
            ) * y ** (d - 1)

        kinks = self.details.breakpoints(self.gamma, self.samples)
        return integrate_1d(integrand, 0.0, 1.0, points=kinks)

    def breakpoints(self) -> list[float]:
        """Distances in [0, support_end] where the weight has kinks or jumps."""
        points = [
            (self.shift + u) * self.radius
            for u in self.details.breakpoints(self.gamma, self.samples)
        ]
        if self.shift > 0.0:
            points.append(self.shift * self.radius)
        return sorted(points)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "family": str(self.family),
            "radius": self.radius,
            "amplitude": self.amplitude,
            "gamma": self.gamma,
            "shift": self.shift,
        }
        if self.samples is not None:
            data["samples"] = list(self.samples)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Kernel:
        samples = data.get("samples")
        return cls(
            family=data["family"],
            radius=data["radius"],
            amplitude=data["amplitude"],
            gamma=data.get("gamma", 1.0),
            shift=data.get("shift", 0.0),
            samples=tuple(samples) if samples is not None else None,
        )
