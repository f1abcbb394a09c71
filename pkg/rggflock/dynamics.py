"""Discrete-time flocking dynamics X(t+1) = X(t) + V(t), V(t+1) = P(t) V(t).

P(t) carries f(|X_i(t) - X_j(t)|) off the diagonal and one minus the
weighted degree on it, so rows sum to one. It is stochastic exactly when the
maximum weighted degree Delta_n(t) <= 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Any, Iterator, NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .const import (
    EARLY_STOP_EVERY,
    EXACT_PAIR_LIMIT,
    FLOCK_TOL,
    PAIR_AUDIT_SAMPLES,
    T_MAX,
)
from .errors import DomainError
from .kernel import Kernel
from .rng import SeedKey, make_generator, seed_entropy

if TYPE_CHECKING:
    from .config import SimConfig
    from .spectral import SpectralSeries

_LOGGER = logging.getLogger(__name__)

# extra entropy word separating the pair-audit stream from the position stream
_AUDIT_STREAM = 1


class DriftMode(StrEnum):
    AUTO = "auto"
    EXACT = "exact"
    SAMPLED = "sampled"
    OFF = "off"


@dataclass(frozen=True)
class Diagnostics:
    """Optional per-step diagnostics of a run.

    Attributes:
        spectral: Record eigenvalues, Cheeger values and the contraction check.
        drift: How the maximum relative displacement is tracked.
        early_stop: Stop once a separating hyperplane splits the swarm while
            every applied P(t) was stochastic. The split is only proven up to
            the stopping step.
        log_every: Emit a DEBUG line every this many steps.
    """

    spectral: bool = False
    drift: DriftMode = DriftMode.AUTO
    early_stop: bool = True
    log_every: int = 100

    def to_dict(self) -> dict[str, Any]:
        return {
            "spectral": self.spectral,
            "drift": str(self.drift),
            "early_stop": self.early_stop,
            "log_every": self.log_every,
        }


@dataclass(frozen=True, eq=False)
class SwarmState:
    """Positions and velocities of the swarm at step t."""

    t: int
    X: NDArray[np.float64]
    V: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.t < 0:
            raise DomainError(f"step index must be nonnegative, got {self.t}")
        if self.X.ndim != 2 or self.X.shape != self.V.shape:
            raise DomainError(
                f"positions {self.X.shape} and velocities {self.V.shape} disagree"
            )

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric weight matrix P stored as sparse off-diagonal part plus diagonal.

    The diagonal is defined as 1 minus the off-diagonal row sum.
    """

    offdiag: sparse.csr_matrix
    diag: NDArray[np.float64]

    @classmethod
    def from_offdiag(cls, offdiag: sparse.spmatrix) -> WeightMatrix:
        matrix = sparse.csr_matrix(offdiag, dtype=float)
        matrix.setdiag(0.0)
        matrix.eliminate_zeros()
        degrees = np.asarray(matrix.sum(axis=1)).ravel()
        return cls(offdiag=matrix, diag=1.0 - degrees)

    @classmethod
    def from_dense(cls, matrix: NDArray[np.float64]) -> WeightMatrix:
        """Wrap a dense matrix, keeping its off-diagonal entries."""
        dense = np.array(matrix, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DomainError(f"weight matrix must be square, got {dense.shape}")
        np.fill_diagonal(dense, 0.0)
        return cls.from_offdiag(sparse.csr_matrix(dense))

    @property
    def n(self) -> int:
        return int(self.diag.shape[0])

    @property
    def max_weighted_degree(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.asarray(self.offdiag.sum(axis=1)).ravel(), initial=0.0))

    @property
    def is_stochastic(self) -> bool:
        return bool(np.all(self.diag >= 0.0))

    def row_sums(self) -> NDArray[np.float64]:
        return self.dense().sum(axis=1)

    def apply(self, V: NDArray[np.float64]) -> NDArray[np.float64]:
        """Return P V."""
        return self.offdiag @ V + self.diag[:, None] * V

    def dense(self) -> NDArray[np.float64]:
        matrix = self.offdiag.toarray()
        matrix[np.diag_indices(self.n)] = self.diag
        return matrix


def weighted_adjacency(X: NDArray[np.float64], kernel: Kernel) -> sparse.csr_matrix:
    """Symmetric sparse matrix of f(|X_i - X_j|) over pairs within the support."""
    n = X.shape[0]
    if n < 2:
        return sparse.csr_matrix((n, n))
    pairs = cKDTree(X).query_pairs(kernel.support_end, output_type="ndarray")
    if pairs.size == 0:
        return sparse.csr_matrix((n, n))
    distances = np.linalg.norm(X[pairs[:, 0]] - X[pairs[:, 1]], axis=1)
    weights = kernel.eval(distances)
    keep = weights > 0.0
    rows = np.concatenate([pairs[keep, 0], pairs[keep, 1]])
    cols = np.concatenate([pairs[keep, 1], pairs[keep, 0]])
    data = np.concatenate([weights[keep], weights[keep]])
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def weight_matrix(state: SwarmState, kernel: Kernel) -> WeightMatrix:
    """Weight matrix P(t) of the current positions.

    Raises:
        DomainError: If the kernel is shifted.
    """
    if kernel.shift != 0.0:
        raise DomainError("the dynamics use the unshifted kernel")
    return WeightMatrix.from_offdiag(weighted_adjacency(state.X, kernel))


def max_weighted_degree(state: SwarmState, kernel: Kernel) -> float:
    """Delta_n(t), the largest off-diagonal row sum of P(t).

    Accepts shifted kernels so that Delta_{n,delta} can be evaluated at t = 0.
    """
    adjacency = weighted_adjacency(state.X, kernel)
    if adjacency.shape[0] == 0:
        return 0.0
    return float(np.max(np.asarray(adjacency.sum(axis=1)).ravel(), initial=0.0))


def _advance(state: SwarmState, kernel: Kernel) -> tuple[SwarmState, WeightMatrix]:
    matrix = weight_matrix(state, kernel)
    moved = SwarmState(t=state.t + 1, X=state.X + state.V, V=matrix.apply(state.V))
    return moved, matrix


def step(state: SwarmState, kernel: Kernel) -> SwarmState:
    """One update: positions move with V(t), then V(t+1) = P(t) V(t)."""
    moved, _ = _advance(state, kernel)
    return moved


class VelocitySpread(NamedTuple):
    a_t: float
    max_pair: float
    exact: bool


def _max_pair_distance(
    points: NDArray[np.float64],
    exact: bool,
    audit: NDArray[np.intp] | None,
) -> float:
    if points.shape[0] < 2:
        return 0.0
    if exact:
        return float(pdist(points).max())
    assert audit is not None
    gaps = points[audit[:, 0]] - points[audit[:, 1]]
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", gaps, gaps))))


def _audit_pairs(n: int, seed: SeedKey, samples: int) -> NDArray[np.intp]:
    generator = make_generator([*seed_entropy(seed), _AUDIT_STREAM])
    first = generator.integers(0, n, size=samples)
    second = (first + generator.integers(1, n, size=samples)) % n
    return np.stack([first, second], axis=1).astype(np.intp)


def velocity_spread(
    state: SwarmState,
    *,
    exact: bool | None = None,
    audit: NDArray[np.intp] | None = None,
) -> VelocitySpread:
    """Coordinatewise spread a(t) and the largest pairwise velocity gap.

    a(t) = sqrt(sum_j (max_i V_ij - min_i V_ij)^2) bounds every pairwise gap.
    For n above the exact-pair limit the pairwise maximum is only audited on
    the given sample of pairs unless ``exact`` is set.
    """
    V = state.V
    if state.n == 0:
        return VelocitySpread(0.0, 0.0, True)
    ranges = V.max(axis=0) - V.min(axis=0)
    a_t = float(np.sqrt(ranges @ ranges))
    use_exact = exact if exact is not None else state.n <= EXACT_PAIR_LIMIT
    if not use_exact and audit is None:
        audit = _audit_pairs(state.n, 0, PAIR_AUDIT_SAMPLES)
    return VelocitySpread(a_t, _max_pair_distance(V, use_exact, audit), use_exact)


def L_functional(V0: NDArray[np.float64]) -> float:
    """L(V(0)) = M (log(F / M) + 1) for the deviation from the mean row.

    M is the largest absolute deviation entry and F the Frobenius norm of the
    deviation; L = 0 when every row equals the mean.
    """
    deviation = V0 - V0.mean(axis=0)
    largest = float(np.max(np.abs(deviation), initial=0.0))
    if largest == 0.0:
        return 0.0
    frobenius = float(np.linalg.norm(deviation))
    return largest * (math.log(frobenius / largest) + 1.0)


def L_upper_bound(V0: NDArray[np.float64]) -> float:
    """Logarithmic bound (log(n d) / 2 + 1) max|V - mean| on L(V(0))."""
    deviation = V0 - V0.mean(axis=0)
    largest = float(np.max(np.abs(deviation), initial=0.0))
    return (0.5 * math.log(V0.size) + 1.0) * largest


@dataclass
class Trajectory:
    """Recorded states of one run, starting at t = 0."""

    kernel: Kernel
    states: list[SwarmState] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[SwarmState]:
        return iter(self.states)

    def __getitem__(self, t: int) -> SwarmState:
        return self.states[t]

    @property
    def initial(self) -> SwarmState:
        return self.states[0]

    def append(self, state: SwarmState) -> None:
        self.states.append(state)


def drift(traj: Trajectory, i: int, j: int, t: int) -> float:
    """d_ij(t) = |X_i(t) - X_j(t) - X_i(0) + X_j(0)|."""
    start, now = traj.initial.X, traj[t].X
    return float(np.linalg.norm(now[i] - now[j] - start[i] + start[j]))


def max_drift(
    traj: Trajectory,
    *,
    exact: bool | None = None,
    audit: NDArray[np.intp] | None = None,
) -> float:
    """Largest relative displacement over all recorded steps and pairs."""
    start = traj.initial.X
    n = start.shape[0]
    use_exact = exact if exact is not None else n <= EXACT_PAIR_LIMIT
    if not use_exact and audit is None:
        audit = _audit_pairs(n, 0, PAIR_AUDIT_SAMPLES)
    return max(
        (_max_pair_distance(state.X - start, use_exact, audit) for state in traj),
        default=0.0,
    )


def separation_series(traj: Trajectory, agent: int) -> list[float]:
    """Distance from ``agent`` to its nearest other agent at every step."""
    series = []
    for state in traj:
        gaps = np.linalg.norm(state.X - state.X[agent], axis=1)
        gaps[agent] = np.inf
        series.append(float(gaps.min()))
    return series


def separation_certificate(state: SwarmState, kernel: Kernel) -> bool:
    """Whether a hyperplane splits the swarm into two groups that cannot meet.

    Candidate normals are the coordinate axes and the main direction of
    velocity disagreement. A split certifies when the groups are more than
    the kernel support apart along the normal, every velocity of the upper
    group projects at least as high as every velocity of the lower group, and
    the group means differ. While each group's averaging stays stochastic,
    projections stay inside their current ranges, the gap never closes and
    the conserved group means keep the velocities apart.
    """
    X, V = state.X, state.V
    if state.n < 2:
        return False
    deviation = V - V.mean(axis=0)
    normals = list(np.eye(state.d))
    if np.any(deviation):
        _, _, right = np.linalg.svd(deviation, full_matrices=False)
        normals.append(right[0])
    for normal in normals:
        projected = X @ normal
        order = np.argsort(projected, kind="stable")
        gaps = np.diff(projected[order])
        for cut in np.flatnonzero(gaps > kernel.support_end):
            lower, upper = order[: cut + 1], order[cut + 1 :]
            low_speed, high_speed = V[lower] @ normal, V[upper] @ normal
            if high_speed.min() >= low_speed.max() and (
                high_speed.mean() > low_speed.mean()
            ):
                return True
    return False


@dataclass
class RunReport:
    """Outcome and diagnostic series of one run.

    ``spread_series`` and ``max_pair_series`` hold a(t) and the pairwise
    velocity gap for t = 0..steps; ``delta_series`` holds Delta_n(t) for the
    matrices P(0)..P(steps - 1) that were applied.
    ``separation_certified_until_stop`` means the run stopped on a separating
    hyperplane with P(t) stochastic up to that step; later steps are not
    checked.
    """

    flocked: bool
    T_flock: int | None
    steps: int
    tolerance: float
    initial_spread: float
    final_spread: float
    final_a: float
    spread_series: list[float]
    max_pair_series: list[float]
    delta_series: list[float]
    max_drift: float | None
    stochastic_throughout: bool
    separation_certified_until_stop: bool
    pairs_exact: bool
    seed: list[int]
    spectral: SpectralSeries | None = None
    trajectory: Trajectory | None = field(default=None, repr=False)

    def series_records(self) -> Iterator[dict[str, Any]]:
        """One record per recorded step, in step order."""
        lambdas = self.spectral.lambda_bar_series() if self.spectral else []
        for t, (a_t, pair) in enumerate(zip(self.spread_series, self.max_pair_series)):
            record: dict[str, Any] = {"t": t, "a_t": a_t, "max_pair": pair}
            applied = t < len(self.delta_series)
            record["delta"] = self.delta_series[t] if applied else None
            if self.spectral is not None:
                record["lambda_bar"] = lambdas[t] if t < len(lambdas) else None
            yield record

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "flocked": self.flocked,
            "T_flock": self.T_flock,
            "steps": self.steps,
            "tolerance": self.tolerance,
            "initial_spread": self.initial_spread,
            "final_spread": self.final_spread,
            "final_a": self.final_a,
            "max_drift": self.max_drift,
            "max_delta": max(self.delta_series, default=0.0),
            "stochastic_throughout": self.stochastic_throughout,
            "separation_certified_until_stop": self.separation_certified_until_stop,
            "pairs_exact": self.pairs_exact,
            "seed": self.seed,
        }
        if self.spectral is not None:
            data["spectral"] = self.spectral.summary()
        return data


def run_dynamics(
    state: SwarmState,
    kernel: Kernel,
    *,
    t_max: int = T_MAX,
    flock_tol: float = FLOCK_TOL,
    diagnostics: Diagnostics | None = None,
    seed: SeedKey = 0,
    record_trajectory: bool = False,
) -> RunReport:
    """Iterate the dynamics until flocking, certified separation or t_max.

    Flocking is declared at the first t where the largest pairwise velocity
    gap drops below ``flock_tol`` times its initial value (or below
    ``flock_tol`` itself when the initial gap is 0). When pairs are only
    audited the bound a(t) is used instead, which can only delay the verdict.
    """
    from .spectral import SpectralSeries

    options = diagnostics or Diagnostics()
    log = _LOGGER.getChild("run-" + "-".join(str(s) for s in seed_entropy(seed)))
    n = state.n
    pairs_exact = n <= EXACT_PAIR_LIMIT
    audit = None if pairs_exact else _audit_pairs(n, seed, PAIR_AUDIT_SAMPLES)
    drift_mode = options.drift
    if drift_mode is DriftMode.AUTO:
        drift_mode = DriftMode.EXACT if pairs_exact else DriftMode.SAMPLED
    drift_audit = audit
    if drift_mode is DriftMode.SAMPLED and drift_audit is None:
        drift_audit = _audit_pairs(n, seed, PAIR_AUDIT_SAMPLES)

    spread = velocity_spread(state, exact=pairs_exact, audit=audit)
    initial_gap = spread.max_pair
    tolerance = flock_tol * initial_gap if initial_gap > 0.0 else flock_tol
    spread_series = [spread.a_t]
    pair_series = [spread.max_pair]
    delta_series: list[float] = []
    start = state.X
    worst_drift = 0.0 if drift_mode is not DriftMode.OFF else None
    stochastic = True
    separated = False
    spectral = SpectralSeries.start(state.V) if options.spectral else None
    trajectory = None
    if record_trajectory:
        trajectory = Trajectory(kernel=kernel, states=[state])

    def measure(current: VelocitySpread) -> float:
        return current.max_pair if current.exact else current.a_t

    log.info("Starting run n=%d d=%d t_max=%d tol=%.3e", n, state.d, t_max, tolerance)
    flocked = measure(spread) < tolerance
    T_flock: int | None = 0 if flocked else None
    while not flocked and state.t < t_max:
        state, matrix = _advance(state, kernel)
        delta = matrix.max_weighted_degree
        delta_series.append(delta)
        if not matrix.is_stochastic:
            if stochastic:
                log.warning("P(%d) is not stochastic (Delta=%.4f)", state.t - 1, delta)
            stochastic = False
        if spectral is not None:
            spectral.observe(state.t - 1, matrix, state.V)
        spread = velocity_spread(state, exact=pairs_exact, audit=audit)
        spread_series.append(spread.a_t)
        pair_series.append(spread.max_pair)
        if worst_drift is not None:
            worst_drift = max(
                worst_drift,
                _max_pair_distance(
                    state.X - start, drift_mode is DriftMode.EXACT, drift_audit
                ),
            )
        if trajectory is not None:
            trajectory.append(state)
        if options.log_every and state.t % options.log_every == 0:
            log.debug(
                "t=%d a=%.3e max_pair=%.3e Delta=%.4f", state.t, spread.a_t,
                spread.max_pair, delta,
            )
        if measure(spread) < tolerance:
            flocked = True
            T_flock = state.t
            break
        if (
            options.early_stop
            and stochastic
            and state.t % EARLY_STOP_EVERY == 0
            and separation_certificate(state, kernel)
        ):
            separated = True
            log.info("Separation certified up to t=%d, stopping early", state.t)
            break

    if flocked:
        log.info("Flocked at t=%s", T_flock)
    else:
        log.info("No flocking after %d steps (spread %.3e)", state.t, spread.max_pair)
    if spectral is not None:
        spectral.finish()
    return RunReport(
        flocked=flocked,
        T_flock=T_flock,
        steps=state.t,
        tolerance=tolerance,
        initial_spread=initial_gap,
        final_spread=spread.max_pair,
        final_a=spread.a_t,
        spread_series=spread_series,
        max_pair_series=pair_series,
        delta_series=delta_series,
        max_drift=worst_drift,
        stochastic_throughout=stochastic,
        separation_certified_until_stop=separated,
        pairs_exact=pairs_exact,
        seed=seed_entropy(seed),
        spectral=spectral,
        trajectory=trajectory,
    )


def simulate(
    config: SimConfig,
    *,
    seed: SeedKey | None = None,
    record_trajectory: bool = False,
) -> RunReport:
    """Run the configured experiment once.

    Args:
        config: Validated experiment configuration.
        seed: Seed key overriding ``config.seed`` (used for split trial seeds).
        record_trajectory: Keep every state on the report.

    Returns:
        The run report; divergent runs report ``flocked = False``.
    """
    key = config.seed if seed is None else seed
    kernel = config.build_kernel()
    state = config.initial_state(key)
    return run_dynamics(
        state,
        kernel,
        t_max=config.t_max,
        flock_tol=config.flock_tol,
        diagnostics=config.diagnostics,
        seed=key,
        record_trajectory=record_trajectory,
    )
