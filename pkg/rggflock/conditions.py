"""Literal evaluation of the flocking hypotheses and adversarial instances.

The sufficient conditions carry constants (c, c1) that are only known to
exist, so every check reports the right-hand side with the constant factored
out and a verdict at an overridable value that defaults to 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Callable, Sequence

import numpy as np

from .config import SimConfig, VelocitySpec
from .const import (
    FLOCK_FREQUENCY,
    MONOTONE_NOISE,
    NO_FLOCK_FREQUENCY,
    REGIME_RTOL,
    VTHRESHOLD_ITERATIONS,
)
from .dynamics import (
    L_functional,
    L_upper_bound,
    SwarmState,
    max_weighted_degree,
    simulate,
)
from .errors import DomainError
from .geometry import critical_alpha, critical_radius, sample_positions
from .kernel import Kernel
from .ldp import RateSolution, solve_kbar
from .trials import run_trials, run_trials_capturing
from .velocities import (
    VelocityMode,
    adversarial_velocities,
    certify_isolated_split,
    find_isolated_cluster,
)

__all__ = [
    "Branch",
    "ConditionReport",
    "Corollary3Report",
    "DegreeTailResult",
    "KbarTrend",
    "Regime",
    "Theorem2Report",
    "VThresholdResult",
    "adversarial_velocities",
    "branch_for",
    "certify_isolated_split",
    "check_corollary1",
    "check_corollary3",
    "check_theorem1",
    "check_theorem2",
    "classify_kbar_trend",
    "classify_regime",
    "degree_tail_frequency",
    "estimate_v_threshold",
    "find_isolated_cluster",
    "theorem2_grid",
]

_LOGGER = logging.getLogger(__name__)

# |slope| of log kbar against log n below which kbar counts as bounded
TREND_SLOPE = 0.05
DEFAULT_TAIL_SLACK = 0.1


class Regime(StrEnum):
    SUB_CRITICAL = "sub_critical"
    SUPER_CRITICAL = "super_critical"
    AT_THRESHOLD = "at_threshold"


class Branch(StrEnum):
    THM1_I = "i"
    THM1_II = "ii"


class KbarTrend(StrEnum):
    BOUNDED = "theta_one"
    VANISHING = "o_one"
    GROWING = "growing"
    UNKNOWN = "unknown"


def classify_regime(alpha: float, d: int) -> Regime:
    """Compare alpha with the connectivity threshold 2^(d-1) / (d pi_d)."""
    threshold = critical_alpha(d)
    if math.isclose(alpha, threshold, rel_tol=REGIME_RTOL):
        return Regime.AT_THRESHOLD
    return Regime.SUB_CRITICAL if alpha < threshold else Regime.SUPER_CRITICAL


def branch_for(alpha: float, eps: float, d: int) -> Branch:
    """Branch (i) when alpha eps^d <= (d + 3)^(d/2), else branch (ii)."""
    if alpha * eps**d <= (d + 3) ** (d / 2):
        return Branch.THM1_I
    return Branch.THM1_II


def _log_power(n: int, d: int) -> float:
    return math.log(n) ** (2 * d / (d - 1))


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one sufficient-condition check.

    Attributes:
        condition: Name of the checked condition set.
        regime: Position of alpha relative to the connectivity threshold.
        branch: Which of the two alternatives the instance falls in.
        kbar_delta: kbar of the (shifted) kernel used by the condition.
        epsilon_feasible: Whether kbar_delta <= 1 - eps.
        lhs: L(V(0)).
        lhs_bound: The logarithmic upper bound on L(V(0)).
        rhs_over_c: Right-hand side with the constant c factored out.
        one_minus_lambda_star_over_c: Spectral-gap lower bound over c.
        drift_budget: (1 - lambda*) delta r / (4 sqrt(d)) at ``c``.
        c: Constant used for the verdict.
        satisfied_at_c: Verdict with that constant; False when inapplicable.
        applicable: Whether the non-velocity hypotheses hold.
        notes: Reasons the condition is inapplicable.
    """

    condition: str
    n: int
    d: int
    alpha: float
    delta: float
    eps: float
    regime: Regime
    branch: Branch
    kbar_delta: float
    epsilon_feasible: bool
    lhs: float
    lhs_bound: float
    rhs_over_c: float
    one_minus_lambda_star_over_c: float
    drift_budget: float
    c: float
    satisfied_at_c: bool
    applicable: bool
    notes: list[str] = field(default_factory=list)

    @property
    def lhs_over_rhs(self) -> float:
        if self.rhs_over_c == 0.0:
            return math.inf if self.lhs > 0 else 0.0
        return self.lhs / self.rhs_over_c

    def to_dict(self) -> dict[str, Any]:
        return {
            "condition": self.condition,
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "delta": self.delta,
            "eps": self.eps,
            "regime": str(self.regime),
            "branch": str(self.branch),
            "kbar_delta": self.kbar_delta,
            "epsilon_feasible": self.epsilon_feasible,
            "lhs": self.lhs,
            "lhs_bound": self.lhs_bound,
            "rhs_over_c": self.rhs_over_c,
            "lhs_over_rhs": self.lhs_over_rhs,
            "one_minus_lambda_star_over_c": self.one_minus_lambda_star_over_c,
            "drift_budget": self.drift_budget,
            "c": self.c,
            "satisfied_at_c": self.satisfied_at_c,
            "applicable": self.applicable,
            "notes": list(self.notes),
        }


def _report(
    condition: str,
    kernel: Kernel,
    n: int,
    d: int,
    alpha: float,
    delta: float,
    eps: float,
    kbar: RateSolution,
    V0: np.ndarray,
    gap_over_c: float,
    rhs_over_c: float,
    c: float,
    notes: list[str],
) -> ConditionReport:
    regime = classify_regime(alpha, d)
    feasible = kbar.kbar <= 1.0 - eps
    if regime is not Regime.SUPER_CRITICAL:
        notes.append("alpha is not above the connectivity threshold")
    if not feasible:
        notes.append(f"kbar = {kbar.kbar:.6g} exceeds 1 - eps = {1.0 - eps:.6g}")
    applicable = not notes
    lhs = L_functional(V0)
    drift_budget = c * gap_over_c * delta * kernel.radius / (4.0 * math.sqrt(d))
    return ConditionReport(
        condition=condition,
        n=n,
        d=d,
        alpha=alpha,
        delta=delta,
        eps=eps,
        regime=regime,
        branch=branch_for(alpha, eps, d),
        kbar_delta=kbar.kbar,
        epsilon_feasible=feasible,
        lhs=lhs,
        lhs_bound=L_upper_bound(V0),
        rhs_over_c=rhs_over_c,
        one_minus_lambda_star_over_c=gap_over_c,
        drift_budget=drift_budget,
        c=c,
        satisfied_at_c=applicable and lhs <= c * rhs_over_c,
        applicable=applicable,
        notes=notes,
    )


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def check_theorem1(
    kernel: Kernel,
    n: int,
    d: int,
    alpha: float,
    delta: float,
    eps: float,
    V0: np.ndarray,
    c_override: float = 1.0,
) -> ConditionReport:
    """Evaluate the delta-shifted sufficient condition for flocking.

    With s = (delta + eps) r, branch (i) bounds L(V(0)) by

        c delta n^2 r min{ r^(2d+2) f(s)^2, f(R_c + s)^2 / (log n)^(2d/(d-1)) }

    and branch (ii) by c delta f(s)^2 n^2 r min{ r^(2d+2), 1 }. The
    hypothesis kbar_{n,delta} <= 1 - eps is solved on the shifted kernel.
    """
    _check_positive(delta=delta, eps=eps)
    kbar = solve_kbar(kernel.shifted(delta), n, d)
    r = kernel.radius
    reach = (delta + eps) * r
    near = kernel.eval(reach) ** 2
    branch = branch_for(alpha, eps, d)
    if branch is Branch.THM1_I:
        far = kernel.eval(critical_radius(n, d) + reach) ** 2 / _log_power(n, d)
        gap = n**2 * min(r ** (2 * d + 2) * near, far)
    else:
        gap = n**2 * near * min(r ** (2 * d + 2), 1.0)
    rhs = delta * r * gap
    return _report(
        "theorem1", kernel, n, d, alpha, delta, eps, kbar, V0, gap, rhs, c_override, []
    )


def check_corollary1(
    kernel: Kernel,
    n: int,
    d: int,
    alpha: float,
    eps: float,
    V0: np.ndarray,
    c_override: float = 1.0,
    c1_override: float = 1.0,
) -> ConditionReport:
    """Evaluate the unshifted sufficient condition, which needs c0 > 0.

    The reach is c1 eps r; branch (i) has the same shape as the shifted
    condition without the delta factor and branch (ii) is
    c n^2 r^(2d+3) f(c1 eps r)^2.
    """
    _check_positive(eps=eps, c1=c1_override)
    notes: list[str] = []
    c0 = kernel.c0_integral(d)
    if not c0 > 0:
        notes.append("c0 = 0, the weight decays too fast")
    kbar = solve_kbar(kernel, n, d)
    r = kernel.radius
    reach = c1_override * eps * r
    near = kernel.eval(reach) ** 2
    if branch_for(alpha, eps, d) is Branch.THM1_I:
        far = kernel.eval(critical_radius(n, d) + reach) ** 2 / _log_power(n, d)
        gap = n**2 * min(r ** (2 * d + 2) * near, far)
    else:
        gap = n**2 * r ** (2 * d + 2) * near
    rhs = r * gap
    return _report(
        "corollary1",
        kernel,
        n,
        d,
        alpha,
        0.0,
        eps,
        kbar,
        V0,
        gap,
        rhs,
        c_override,
        notes,
    )


@dataclass(frozen=True)
class Corollary3Report:
    """Small-velocity flocking hypotheses and the guaranteed velocity scale.

    ``v_scale_over_c`` is r^3 / log n; velocities up to c times that flock.
    """

    n: int
    d: int
    alpha: float
    eps: float
    regime: Regime
    kbar: float
    kbar_in_band: bool
    plateau_condition: bool
    far_weight_condition: bool
    v_scale_over_c: float

    @property
    def applicable(self) -> bool:
        return (
            self.regime is Regime.SUPER_CRITICAL
            and self.kbar_in_band
            and self.plateau_condition
            and self.far_weight_condition
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "eps": self.eps,
            "regime": str(self.regime),
            "kbar": self.kbar,
            "kbar_in_band": self.kbar_in_band,
            "plateau_condition": self.plateau_condition,
            "far_weight_condition": self.far_weight_condition,
            "v_scale_over_c": self.v_scale_over_c,
            "applicable": self.applicable,
        }


def check_corollary3(
    kernel: Kernel, n: int, d: int, alpha: float, eps: float
) -> Corollary3Report:
    """Check eps <= kbar <= 1 - eps, f(eps r) > eps f(0) and the far-weight bound.

    The far-weight bound is f(R_c + eps r) > r^2 (log n)^(2d/(d-1)) n^-2.
    """
    _check_positive(eps=eps)
    r = kernel.radius
    kbar = solve_kbar(kernel, n, d).kbar
    far_floor = r**2 * _log_power(n, d) / n**2
    return Corollary3Report(
        n=n,
        d=d,
        alpha=alpha,
        eps=eps,
        regime=classify_regime(alpha, d),
        kbar=kbar,
        kbar_in_band=eps <= kbar <= 1.0 - eps,
        plateau_condition=kernel.eval(eps * r) > eps * kernel.f0,
        far_weight_condition=kernel.eval(critical_radius(n, d) + eps * r) > far_floor,
        v_scale_over_c=r**3 / math.log(n),
    )


@dataclass(frozen=True)
class Theorem2Report:
    """Necessary-condition classification of one instance.

    Sub-critical instances cannot reach v-flocking for any v. Otherwise the
    two adversarial scales 2^(-d-1) kbar r (bounded kbar below 2^d) and
    kbar r / 2 (vanishing kbar) are reported; which applies needs an n-grid.
    """

    n: int
    d: int
    alpha: float
    regime: Regime
    radius: float
    kbar: float | None
    kbar_below_2d: bool | None
    v_scale_bounded: float | None
    v_scale_vanishing: float | None

    @property
    def no_flocking_for_any_v(self) -> bool:
        return self.regime is Regime.SUB_CRITICAL

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "regime": str(self.regime),
            "radius": self.radius,
            "kbar": self.kbar,
            "kbar_below_2d": self.kbar_below_2d,
            "v_scale_bounded": self.v_scale_bounded,
            "v_scale_vanishing": self.v_scale_vanishing,
            "no_flocking_for_any_v": self.no_flocking_for_any_v,
        }


def check_theorem2(kernel: Kernel, n: int, d: int, alpha: float) -> Theorem2Report:
    regime = classify_regime(alpha, d)
    r = kernel.radius
    if regime is Regime.SUB_CRITICAL:
        return Theorem2Report(n, d, alpha, regime, r, None, None, None, None)
    kbar = solve_kbar(kernel, n, d).kbar
    return Theorem2Report(
        n=n,
        d=d,
        alpha=alpha,
        regime=regime,
        radius=r,
        kbar=kbar,
        kbar_below_2d=kbar < 2**d,
        v_scale_bounded=2.0 ** (-d - 1) * kbar * r,
        v_scale_vanishing=0.5 * kbar * r,
    )


def classify_kbar_trend(n_grid: Sequence[int], kbars: Sequence[float]) -> KbarTrend:
    """Bounded or vanishing kbar from the least-squares slope of log kbar vs log n."""
    if len(n_grid) < 2 or any(k <= 0 for k in kbars):
        return KbarTrend.UNKNOWN
    slope = float(np.polyfit(np.log(n_grid), np.log(kbars), 1)[0])
    if abs(slope) <= TREND_SLOPE:
        return KbarTrend.BOUNDED
    return KbarTrend.VANISHING if slope < 0 else KbarTrend.GROWING


def theorem2_grid(
    kernel_for_n: Callable[[int], Kernel],
    d: int,
    alpha: float,
    n_grid: Sequence[int],
) -> tuple[list[Theorem2Report], KbarTrend]:
    """Non-flocking reports along an n-grid and the trend of kbar."""
    reports = [check_theorem2(kernel_for_n(n), n, d, alpha) for n in n_grid]
    kbars = [report.kbar for report in reports if report.kbar is not None]
    if len(kbars) != len(reports):
        return reports, KbarTrend.UNKNOWN
    return reports, classify_kbar_trend(n_grid, kbars)


@dataclass(frozen=True)
class DegreeTailResult:
    """How often Delta_{n,delta} <= kbar_{n,delta} (1 + slack) over random positions."""

    n: int
    d: int
    delta: float
    kbar: float
    slack: float
    trials: int
    within: int
    max_degrees: list[float]

    @property
    def frequency(self) -> float:
        return self.within / self.trials

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "delta": self.delta,
            "kbar": self.kbar,
            "slack": self.slack,
            "trials": self.trials,
            "within": self.within,
            "frequency": self.frequency,
        }


def degree_tail_frequency(
    kernel: Kernel,
    n: int,
    d: int,
    delta: float,
    trials: int,
    seed: int,
    *,
    slack: float = DEFAULT_TAIL_SLACK,
    threads: int = 1,
) -> DegreeTailResult:
    """Monte Carlo frequency of the weighted-degree bound at t = 0."""
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")
    shifted = kernel.shifted(delta)
    kbar = solve_kbar(shifted, n, d).kbar

    def trial(key: tuple[int, ...]) -> float:
        positions = sample_positions(n, d, (seed, *key))
        state = SwarmState(t=0, X=positions.X, V=np.zeros_like(positions.X))
        return max_weighted_degree(state, shifted)

    degrees = run_trials(trial, [(k,) for k in range(trials)], threads=threads)
    within = sum(1 for value in degrees if value <= kbar * (1.0 + slack))
    return DegreeTailResult(n, d, delta, kbar, slack, trials, within, degrees)


@dataclass(frozen=True)
class VThresholdResult:
    """Empirical flocking threshold over one adversarial velocity family.

    ``interval`` brackets the speed where the flocking frequency drops from
    at least 0.9 to at most 0.1. It bounds the true critical speed from above
    only for the tested family, since v-flocking asks for every assignment.
    """

    mode: VelocityMode
    trials: int
    seed: int
    interval: tuple[float, float] | None
    curve: list[tuple[float, int, int]]
    warning: str | None = None
    label: str = "upper bound on v_c restricted to the tested velocity family"

    def curve_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "v": v,
                "flocked": flocked,
                "trials": trials,
                "frequency": flocked / trials if trials else float("nan"),
            }
            for v, flocked, trials in sorted(self.curve)
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": str(self.mode),
            "trials": self.trials,
            "seed": self.seed,
            "interval": list(self.interval) if self.interval else None,
            "warning": self.warning,
            "label": self.label,
        }


def _is_monotone(curve: list[tuple[float, int, int]]) -> bool:
    frequencies = [f / t for _, f, t in sorted(curve) if t]
    return all(
        later - earlier <= MONOTONE_NOISE
        for earlier, later in zip(frequencies, frequencies[1:])
    )


def estimate_v_threshold(
    base_config: SimConfig,
    v_lo: float,
    v_hi: float,
    trials: int,
    mode: VelocityMode | str = VelocityMode.HALF_SPLIT,
    *,
    iterations: int = VTHRESHOLD_ITERATIONS,
    threads: int = 1,
) -> VThresholdResult:
    """Bisect on the speed v in log scale using flocking frequencies.

    Trial k always uses positions keyed by ``(seed, k)``, so every speed
    sees the same instances. Midpoints whose frequency lies strictly between
    0.1 and 0.9 are kept as interior points and the bisection continues on
    the wider remaining gap. Failed trials (for example no certifiable
    isolated cluster) are left out of the counts.
    """
    if not 0 < v_lo < v_hi:
        raise DomainError(f"need 0 < v_lo < v_hi, got {v_lo}, {v_hi}")
    mode = VelocityMode(mode)
    if mode is VelocityMode.EXPLICIT:
        raise DomainError("explicit velocities have no speed to bisect on")
    seed = base_config.seed
    log = _LOGGER.getChild(f"vthreshold-{seed}")
    curve: dict[float, tuple[float, int, int]] = {}

    def frequency(v: float) -> float:
        config = base_config.with_velocity(VelocitySpec(mode=mode, v0=v))

        def trial(key: tuple[int]) -> bool:
            return simulate(config, seed=(seed, *key)).flocked

        outcomes = run_trials_capturing(
            trial, [(k,) for k in range(trials)], threads=threads
        )
        done = [value for value in outcomes.values() if isinstance(value, bool)]
        flocked = sum(done)
        curve[v] = (v, flocked, len(done))
        value = flocked / len(done) if done else 0.0
        log.info("v=%.4e flocked in %d of %d trials", v, flocked, len(done))
        return value

    def result(
        interval: tuple[float, float] | None, warning: str | None = None
    ) -> VThresholdResult:
        if warning:
            log.warning(warning)
        return VThresholdResult(
            mode=mode,
            trials=trials,
            seed=seed,
            interval=interval,
            curve=sorted(curve.values()),
            warning=warning,
        )

    f_lo, f_hi = frequency(v_lo), frequency(v_hi)
    if f_lo <= NO_FLOCK_FREQUENCY:
        return result((v_lo, v_lo), "no flocking even at v_lo, interval collapsed")
    if f_hi >= FLOCK_FREQUENCY:
        return result((v_hi, v_hi), "flocking even at v_hi, threshold lies above")
    lo, hi = v_lo, v_hi
    interior: list[float] = []
    for _ in range(iterations):
        low_gap = (lo, interior[0]) if interior else (lo, hi)
        high_gap = (interior[-1], hi) if interior else (lo, hi)
        a, b = max(low_gap, high_gap, key=lambda gap: math.log(gap[1] / gap[0]))
        mid = math.sqrt(a * b)
        value = frequency(mid)
        if value >= FLOCK_FREQUENCY:
            lo = mid
        elif value <= NO_FLOCK_FREQUENCY:
            hi = mid
        else:
            interior.append(mid)
        interior = sorted(v for v in interior if lo < v < hi)
    if not _is_monotone(list(curve.values())):
        return result(None, "flocking frequency is not monotone in v")
    return result((lo, hi))
