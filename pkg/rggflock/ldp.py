"""Large-deviation quantities of the total interaction weight of one agent.

For a kernel f and an agent at the cube center, xi = f(|X - x0|) with X
uniform in [0, 1]^d. The rate function

    I(x) = sup_{theta > 0} { theta x - (n - 1) log E[exp(theta xi)] }

governs the upper tail of the weighted degree, and kbar is the level above
(n - 1) E[xi] where I(kbar) = log n.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .const import (
    GRID_RESOLUTION,
    GRID_RESOLUTION_DEFAULT,
    H_INV_TOL,
    MAX_DOUBLINGS,
    RADIAL_FORMULA_LIMIT,
    ROOT_RTOL,
)
from .errors import (
    ConvergenceError,
    DegenerateKernel,
    DomainError,
    RadialFormulaInvalid,
)
from .geometry import unit_ball_volume
from .kernel import Kernel
from .numerics import bisect_root, find_root, integrate_1d

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentTriple:
    """E[exp(theta xi)], E[xi exp(theta xi)] and E[xi].

    ``excess`` holds m0 - 1 computed without cancellation so that
    ``log_m0`` stays accurate when m0 is close to 1.
    """

    m0: float
    m1: float
    mean: float
    excess: float
    fallback: bool = False

    @property
    def log_m0(self) -> float:
        return math.log1p(self.excess)

    @property
    def tilted_mean(self) -> float:
        return self.m1 / self.m0


@dataclass(frozen=True)
class RateSolution:
    """Solution (kbar, thetabar) of the level equation I(kbar) = log n."""

    kbar: float
    thetabar: float | None
    mean_xi: float
    degenerate: bool
    n: int
    residuals: tuple[float, float] = (0.0, 0.0)
    fallback: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "kbar": self.kbar,
            "thetabar": self.thetabar,
            "mean_xi": self.mean_xi,
            "degenerate": self.degenerate,
            "fallback": self.fallback,
            "residuals": {
                "tilted_mean": self.residuals[0],
                "level": self.residuals[1],
            },
        }


class AsymptoticEstimate(NamedTuple):
    kbar: float
    theta: float


def is_degenerate(kernel: Kernel, d: int) -> bool:
    """True when xi is almost surely constant, i.e. Var(xi) = 0.

    That happens when the plateau of f covers the whole cube as seen from
    its center, whose farthest corner sits at sqrt(d) / 2.
    """
    return kernel.plateau_end >= math.sqrt(d) / 2.0


def _grid_moments(kernel: Kernel, d: int, theta: float) -> MomentTriple:
    resolution = GRID_RESOLUTION.get(d, GRID_RESOLUTION_DEFAULT)
    axis = (np.arange(resolution) + 0.5) / resolution - 0.5
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    distances = np.sqrt(sum(component**2 for component in mesh)).ravel()
    xi = kernel.eval(distances)
    with np.errstate(over="ignore"):
        tilt = np.exp(theta * xi)
        triple = MomentTriple(
            m0=float(tilt.mean()),
            m1=float((xi * tilt).mean()),
            mean=float(xi.mean()),
            excess=float(np.expm1(theta * xi).mean()),
            fallback=True,
        )
    if not (math.isfinite(triple.m0) and math.isfinite(triple.m1)):
        raise ConvergenceError(f"exponential tilt overflows at theta={theta:.6g}")
    return triple


def _grid_plateau_mass(kernel: Kernel, d: int) -> float:
    resolution = GRID_RESOLUTION.get(d, GRID_RESOLUTION_DEFAULT)
    axis = (np.arange(resolution) + 0.5) / resolution - 0.5
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    distances = np.sqrt(sum(component**2 for component in mesh)).ravel()
    return float(np.mean(distances <= kernel.plateau_end))


def plateau_mass(kernel: Kernel, d: int, *, allow_fallback: bool = False) -> float:
    """P(xi = f(0)), the mass of the ball where the kernel sits at its peak.

    Raises:
        RadialFormulaInvalid: If the plateau leaves the cube and no fallback
            is allowed.
    """
    if kernel.plateau_end <= 0.0:
        return 0.0
    if kernel.plateau_end <= RADIAL_FORMULA_LIMIT:
        return unit_ball_volume(d) * kernel.plateau_end**d
    if not allow_fallback:
        raise RadialFormulaInvalid(
            f"plateau radius {kernel.plateau_end:.6g} exceeds {RADIAL_FORMULA_LIMIT}"
        )
    return _grid_plateau_mass(kernel, d)


def moments(
    kernel: Kernel, d: int, theta: float, *, allow_fallback: bool = False
) -> MomentTriple:
    """Moments of xi under exponential tilting by theta.

    Uses the radial formula over the support ball, valid while the ball of
    radius R = (1 + delta) r around the cube center stays inside the cube:

        m0 = 1 + d pi_d R^d * int_0^1 (exp(theta f(R y)) - 1) y^(d-1) dy

    Args:
        kernel: Interaction kernel, shifted or not.
        d: Dimension (>= 2).
        theta: Tilt parameter (>= 0).
        allow_fallback: Use tensor-grid cubature when R > 1/2.

    Returns:
        The moment triple.

    Raises:
        RadialFormulaInvalid: If R > 1/2 and no fallback is allowed.
        ConvergenceError: If exp(theta f) overflows.
    """
    if d < 2:
        raise DomainError(f"dimension must be at least 2, got {d}")
    if not theta >= 0:
        raise DomainError(f"theta must be nonnegative, got {theta}")
    support = kernel.support_end
    if support > RADIAL_FORMULA_LIMIT:
        if not allow_fallback:
            raise RadialFormulaInvalid(
                f"support radius {support:.6g} exceeds {RADIAL_FORMULA_LIMIT}"
            )
        _LOGGER.warning(
            "Support radius %.4g exceeds %.2f, using grid cubature",
            support,
            RADIAL_FORMULA_LIMIT,
        )
        return _grid_moments(kernel, d, theta)

    scale = d * unit_ball_volume(d) * support**d
    points = [p / support for p in kernel.breakpoints()]

    def weight(y: float) -> float:
        return kernel.eval(support * y)

    def excess_integrand(y: float) -> float:
        return math.expm1(theta * weight(y)) * y ** (d - 1)

    def tilted_integrand(y: float) -> float:
        value = weight(y)
        return value * math.exp(theta * value) * y ** (d - 1)

    def mean_integrand(y: float) -> float:
        return weight(y) * y ** (d - 1)

    try:
        excess = scale * integrate_1d(excess_integrand, 0.0, 1.0, points=points)
        mean = scale * integrate_1d(mean_integrand, 0.0, 1.0, points=points)
        if theta == 0.0:
            m1 = mean
        else:
            m1 = scale * integrate_1d(tilted_integrand, 0.0, 1.0, points=points)
    except OverflowError as err:
        raise ConvergenceError(
            f"exponential tilt overflows at theta={theta:.6g}"
        ) from err
    if not (math.isfinite(excess) and math.isfinite(m1)):
        raise ConvergenceError(f"exponential tilt overflows at theta={theta:.6g}")
    return MomentTriple(m0=1.0 + excess, m1=m1, mean=mean, excess=excess)


def _tilted_moments(
    kernel: Kernel, d: int, theta: float, allow_fallback: bool
) -> MomentTriple | None:
    """Moments at theta, or None once the tilt overflows."""
    try:
        return moments(kernel, d, theta, allow_fallback=allow_fallback)
    except ConvergenceError:
        return None


def rate_function(
    kernel: Kernel, n: int, d: int, x: float, *, allow_fallback: bool = False
) -> float:
    """I(x) = sup_{theta > 0} { theta x - (n - 1) log m0(theta) }.

    The objective is strictly concave in theta, so the supremum sits at the
    root of x - (n - 1) m1 / m0. Levels at or below (n - 1) E[xi] give 0 and
    levels above (n - 1) f(0) are unreachable and give infinity. At exactly
    (n - 1) f(0) every agent must sit on the plateau, so
    I = -(n - 1) log P(xi = f(0)), which is infinite when the plateau is a
    single point.

    Raises:
        DegenerateKernel: If Var(xi) = 0.
    """
    if not x >= 0:
        raise DomainError(f"level must be nonnegative, got {x}")
    if is_degenerate(kernel, d):
        raise DegenerateKernel("rate function undefined for a constant weight")
    base = moments(kernel, d, 0.0, allow_fallback=allow_fallback)
    if x <= (n - 1) * base.mean:
        return 0.0
    peak = (n - 1) * kernel.f0
    if math.isclose(x, peak, rel_tol=1e-12):
        mass = plateau_mass(kernel, d, allow_fallback=allow_fallback)
        return -(n - 1) * math.log(mass) if mass > 0.0 else math.inf
    if x > peak:
        return math.inf

    def stationarity(theta: float) -> float:
        tilted = _tilted_moments(kernel, d, theta, allow_fallback)
        if tilted is None:
            return math.inf
        return (n - 1) * tilted.tilted_mean - x

    theta = find_root(stationarity, 0.0, 1.0 / kernel.f0)
    tilted = moments(kernel, d, theta, allow_fallback=allow_fallback)
    return theta * x - (n - 1) * tilted.log_m0


def solve_kbar(
    kernel: Kernel, n: int, d: int, *, allow_fallback: bool = False
) -> RateSolution:
    """Solve for (kbar, thetabar).

    thetabar is the unique root of

        theta (n - 1) m1 / m0 - (n - 1) log m0 - log n = 0,

    found by doubling the bracket (0, 1 / f(0)] until the sign changes, and
    kbar = (n - 1) m1(thetabar) / m0(thetabar). A degenerate kernel gives
    kbar = (n - 1) f(0) with no thetabar.

    The left side increases towards -(n - 1) log P(xi = f(0)) - log n, so a
    kernel whose plateau carries too much mass has no root.

    Raises:
        ConvergenceError: If the level equation has no root, the bracket does
            not close or residuals exceed the acceptance tolerance.
    """
    if n < 2:
        raise DomainError(f"need at least two agents, got {n}")
    if is_degenerate(kernel, d):
        _LOGGER.debug("Degenerate kernel, kbar = (n - 1) f(0)")
        return RateSolution(
            kbar=(n - 1) * kernel.f0,
            thetabar=None,
            mean_xi=kernel.f0,
            degenerate=True,
            n=n,
        )
    log_n = math.log(n)
    base = moments(kernel, d, 0.0, allow_fallback=allow_fallback)
    mass = plateau_mass(kernel, d, allow_fallback=allow_fallback)
    if mass > 0.0 and -(n - 1) * math.log(mass) <= log_n:
        raise ConvergenceError(
            f"level equation has no root: the rate at (n - 1) f(0) is "
            f"{-(n - 1) * math.log(mass):.6g}, below log n = {log_n:.6g}"
        )

    def level_gap(theta: float) -> float:
        tilted = _tilted_moments(kernel, d, theta, allow_fallback)
        if tilted is None:
            return math.inf
        return theta * (n - 1) * tilted.tilted_mean - (n - 1) * tilted.log_m0 - log_n

    thetabar = find_root(level_gap, 0.0, 1.0 / kernel.f0)
    tilted = moments(kernel, d, thetabar, allow_fallback=allow_fallback)
    kbar = (n - 1) * tilted.tilted_mean
    tilted_residual = abs((n - 1) * tilted.m1 / tilted.m0 - kbar) / kbar
    level_residual = abs((log_n + (n - 1) * tilted.log_m0) / thetabar - kbar) / kbar
    if max(tilted_residual, level_residual) > ROOT_RTOL:
        raise ConvergenceError(
            f"kbar residuals ({tilted_residual:.2e}, {level_residual:.2e}) "
            f"exceed {ROOT_RTOL}"
        )
    _LOGGER.debug("kbar=%.6g thetabar=%.6g for n=%d", kbar, thetabar, n)
    return RateSolution(
        kbar=kbar,
        thetabar=thetabar,
        mean_xi=base.mean,
        degenerate=False,
        n=n,
        residuals=(tilted_residual, level_residual),
        fallback=tilted.fallback,
    )


def H(a: float) -> float:
    """H(a) = 1 - a + a log a, with H(0) = 1."""
    if not a >= 0:
        raise DomainError(f"H is defined on [0, inf), got {a}")
    if a == 0:
        return 1.0
    return 1.0 - a + a * math.log(a)


def H_minus_inv(y: float) -> float:
    """Inverse of H on [0, 1], mapping [0, 1] onto [0, 1]."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"H_minus_inv is defined on [0, 1], got {y}")
    if y == 1.0:
        return 0.0
    if y == 0.0:
        return 1.0
    return bisect_root(lambda a: H(a) - y, 0.0, 1.0, xtol=H_INV_TOL)


def H_plus_inv(y: float) -> float:
    """Inverse of H on [1, inf), mapping [0, inf) onto [1, inf)."""
    if not (y >= 0 and math.isfinite(y)):
        raise DomainError(f"H_plus_inv is defined on [0, inf), got {y}")
    if y == 0.0:
        return 1.0
    hi = 2.0
    for _ in range(MAX_DOUBLINGS):
        if H(hi) >= y:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"no bracket for H_plus_inv({y})")
    return bisect_root(lambda a: H(a) - y, 1.0, hi, xtol=H_INV_TOL)


def example2_asymptotic(c: float, b_n: float, d: int, n: float) -> AsymptoticEstimate:
    """Leading-order kbar and theta for the indicator kernel.

    Radius law r = c n^(-1/d) (log n)^(1/d), amplitude b_n:

        kbar ~ H_+^{-1}(1 / (pi_d c^d)) pi_d c^d b_n log n
        theta ~ log(H_+^{-1}(1 / (pi_d c^d))) / b_n
    """
    if c <= 0 or b_n <= 0:
        raise DomainError("c and b_n must be positive")
    ball = unit_ball_volume(d) * c**d
    root = H_plus_inv(1.0 / ball)
    return AsymptoticEstimate(
        kbar=root * ball * b_n * math.log(n), theta=math.log(root) / b_n
    )


@dataclass(frozen=True)
class TriangularAsymptotic:
    """Leading-order kbar for the triangular kernel, with the inner root x*."""

    kbar: float
    theta: float
    x_star: float
    residual: float = field(default=0.0)


def _triangular_integrals(x: float, d: int) -> tuple[float, float]:
    first = integrate_1d(lambda y: y * math.exp(x * y) * (1 - y) ** (d - 1), 0.0, 1.0)
    zeroth = integrate_1d(lambda y: math.exp(x * y) * (1 - y) ** (d - 1), 0.0, 1.0)
    return first, zeroth


def example3_asymptotic(c: float, b_n: float, d: int, n: float) -> TriangularAsymptotic:
    """Leading-order kbar and theta for the triangular kernel.

    x* solves x int y e^{xy}(1-y)^{d-1} dy - int e^{xy}(1-y)^{d-1} dy
    = 1 / (d pi_d c^d) - 1/d, and

        kbar ~ d pi_d c^d b_n log n int y e^{x* y} (1 - y)^{d-1} dy
        theta ~ x* / b_n
    """
    if c <= 0 or b_n <= 0:
        raise DomainError("c and b_n must be positive")
    ball = unit_ball_volume(d) * c**d
    target = 1.0 / (d * ball) - 1.0 / d

    def equation(x: float) -> float:
        first, zeroth = _triangular_integrals(x, d)
        return x * first - zeroth - target

    x_star = find_root(equation, 0.0, 1.0)
    first, _ = _triangular_integrals(x_star, d)
    return TriangularAsymptotic(
        kbar=d * ball * b_n * math.log(n) * first,
        theta=x_star / b_n,
        x_star=x_star,
        residual=abs(equation(x_star)),
    )


def example1_mean(cprime: float, gamma: float, d: int, n: int, beta: float) -> float:
    """E[xi] for the power-cap kernel with r = n^(-1/d) log^beta n.

    With c_n = c' / (pi_d log^(d beta) n) this is gamma c' / ((gamma + d) n).
    """
    radius = n ** (-1.0 / d) * math.log(n) ** beta
    amplitude = cprime / (unit_ball_volume(d) * math.log(n) ** (d * beta))
    return gamma * amplitude * unit_ball_volume(d) * radius**d / (gamma + d)


def example1_bound(gamma: float, d: int) -> float:
    """Limit 1 - d / (2 (gamma + d)) that kbar of the power-cap family stays below."""
    return 1.0 - d / (2.0 * (gamma + d))


@dataclass(frozen=True)
class Proposition1Row:
    n: int
    kbar: float
    radius: float
    f0: float
    mean_xi: float
    degree_ratio: float
    mean_ratio: float
    shift_slopes: dict[float, float]


@dataclass(frozen=True)
class Proposition1Report:
    """Scaling checks of kbar along an n-grid.

    ``degree_ratio`` is kbar / (n r^d f(0)), expected to stay in a bounded
    band; ``mean_ratio`` is kbar / (n E[xi]), expected to approach 1 when
    n r^d / log n grows; ``shift_slopes`` holds (kbar_delta / kbar - 1) / delta.
    """

    d: int
    rows: list[Proposition1Row]

    @property
    def band_factor(self) -> float:
        ratios = [row.degree_ratio for row in self.rows]
        return max(ratios) / min(ratios)

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "band_factor": self.band_factor,
            "rows": [
                {
                    "n": row.n,
                    "kbar": row.kbar,
                    "radius": row.radius,
                    "f0": row.f0,
                    "mean_xi": row.mean_xi,
                    "degree_ratio": row.degree_ratio,
                    "mean_ratio": row.mean_ratio,
                    "shift_slopes": {str(k): v for k, v in row.shift_slopes.items()},
                }
                for row in self.rows
            ],
        }


def proposition1_checks(
    kernel_for_n: Callable[[int], Kernel],
    d: int,
    n_grid: Sequence[int],
    deltas: Sequence[float] = (0.05, 0.1, 0.2),
) -> Proposition1Report:
    """Tabulate the kbar scaling ratios and shift slopes across ``n_grid``."""
    if list(n_grid) != sorted(n_grid):
        raise DomainError("n_grid must be increasing")
    rows = []
    for n in n_grid:
        kernel = kernel_for_n(n)
        solution = solve_kbar(kernel, n, d)
        slopes = {}
        for delta in deltas:
            shifted = solve_kbar(kernel.shifted(delta), n, d)
            slopes[float(delta)] = (shifted.kbar / solution.kbar - 1.0) / delta
        rows.append(
            Proposition1Row(
                n=n,
                kbar=solution.kbar,
                radius=kernel.radius,
                f0=kernel.f0,
                mean_xi=solution.mean_xi,
                degree_ratio=solution.kbar / (n * kernel.radius**d * kernel.f0),
                mean_ratio=solution.kbar / (n * solution.mean_xi),
                shift_slopes=slopes,
            )
        )
        _LOGGER.info("n=%d kbar=%.6g", n, solution.kbar)
    return Proposition1Report(d=d, rows=rows)
