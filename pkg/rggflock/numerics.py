"""Quadrature and bracketed root finding shared by the large-deviation solvers."""
from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .const import (
    MAX_DOUBLINGS,
    QUAD_ATOL,
    QUAD_LIMIT,
    QUAD_RTOL,
    ROOT_XTOL,
)
from .errors import ConvergenceError, QuadratureError

_LOGGER = logging.getLogger(__name__)

# quad reports an error estimate, not a guarantee; beyond this we give up
_QUAD_HARD_LIMIT = 1e-6


def integrate_1d(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    points: Sequence[float] | None = None,
    rtol: float = QUAD_RTOL,
    atol: float = QUAD_ATOL,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``func`` over [a, b].

    Args:
        func: Scalar integrand.
        a: Lower limit.
        b: Upper limit.
        points: Interior points where the integrand has kinks or jumps.
        rtol: Relative tolerance.
        atol: Absolute tolerance for integrands that are identically small.

    Returns:
        The integral value.

    Raises:
        QuadratureError: If the error estimate is far above the tolerance.
    """
    interior = [p for p in (points or ()) if a < p < b]
    result = integrate.quad(
        func,
        a,
        b,
        epsabs=atol,
        epsrel=rtol,
        limit=QUAD_LIMIT,
        points=interior or None,
        full_output=1,
    )
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        scale = max(1.0, abs(value))
        if not math.isfinite(value) or abserr > _QUAD_HARD_LIMIT * scale:
            raise QuadratureError(
                f"quadrature on [{a}, {b}] stopped at error {abserr:.3e}: {result[3]}"
            )
        _LOGGER.debug(
            "Quadrature on [%s, %s] reached error %.3e only: %s",
            a,
            b,
            abserr,
            result[3],
        )
    return value


def expand_bracket(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    max_doublings: int = MAX_DOUBLINGS,
) -> tuple[float, float]:
    """Double the upper end of [lo, hi] until ``func`` changes sign.

    The lower end moves up to the last upper end that kept the sign of
    ``func(lo)``. Non-finite values are treated as the far side of the root
    and the bracket is shrunk back by halving until ``func`` is finite.

    Returns:
        A bracket (lo, hi) with finite values of opposite sign at its ends.

    Raises:
        ConvergenceError: If no sign change appears after ``max_doublings``.
    """
    f_lo = func(lo)
    if f_lo == 0.0:
        return lo, lo
    sign = math.copysign(1.0, f_lo)
    for doubling in range(max_doublings + 1):
        f_hi = func(hi)
        if not math.isfinite(f_hi):
            hi = _shrink_to_finite(func, lo, hi)
            f_hi = func(hi)
        if f_hi == 0.0 or math.copysign(1.0, f_hi) != sign:
            _LOGGER.debug("Bracket [%s, %s] after %d doublings", lo, hi, doubling)
            return lo, hi
        lo, hi = hi, 2.0 * hi
    raise ConvergenceError(
        f"no sign change after {max_doublings} doublings (last bracket end {hi})"
    )


def _shrink_to_finite(func: Callable[[float], float], lo: float, hi: float) -> float:
    for _ in range(MAX_DOUBLINGS):
        hi = 0.5 * (lo + hi)
        if math.isfinite(func(hi)):
            return hi
    raise ConvergenceError("function is not finite anywhere above the bracket start")


def find_root(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = ROOT_XTOL,
    max_doublings: int = MAX_DOUBLINGS,
) -> float:
    """Root of a monotone ``func`` above ``lo`` by bracket doubling then Brent."""
    lo, hi = expand_bracket(func, lo, hi, max_doublings=max_doublings)
    if lo == hi:
        return lo
    if func(hi) == 0.0:
        return hi
    return float(
        optimize.brentq(
            func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500
        )
    )


def bisect_root(
    func: Callable[[float], float], lo: float, hi: float, *, xtol: float
) -> float:
    """Plain bisection for a sign change already known to lie in [lo, hi]."""
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    return float(
        optimize.bisect(
            func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400
        )
    )
