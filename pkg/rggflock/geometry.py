"""Initial positions, neighbor graphs and connectivity of random geometric graphs."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .rng import SeedKey, make_generator, seed_entropy
from .trials import run_trials

_LOGGER = logging.getLogger(__name__)


def unit_ball_volume(d: int) -> float:
    """Volume pi^(d/2) / Gamma(d/2 + 1) of the unit ball in R^d."""
    if d < 1:
        raise DomainError(f"dimension must be at least 1, got {d}")
    return float(math.pi ** (d / 2) / gamma_fn(d / 2 + 1))


def critical_alpha(d: int) -> float:
    """Connectivity threshold 2^(d-1) / (d pi_d) on alpha = n r^d / log n."""
    return 2 ** (d - 1) / (d * unit_ball_volume(d))


def critical_radius(n: float, d: int) -> float:
    """Critical connectivity radius R_c = (2^(d-1) log n / (d pi_d n))^(1/d).

    ``n`` may be any real > 1 so that the formula can be evaluated at
    non-integer points.
    """
    if n <= 1:
        raise DomainError(f"critical radius needs n > 1, got {n}")
    return float((critical_alpha(d) * math.log(n) / n) ** (1.0 / d))


def radius_from_alpha(n: int, d: int, alpha: float) -> float:
    """Interaction radius (alpha log n / n)^(1/d)."""
    if n < 2:
        raise DomainError(f"radius law needs n >= 2, got {n}")
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return float((alpha * math.log(n) / n) ** (1.0 / d))


def radius_from_beta(n: int, d: int, beta: float) -> float:
    """Interaction radius n^(-1/d) (log n)^beta of the growing-degree regime."""
    if n < 2:
        raise DomainError(f"radius law needs n >= 2, got {n}")
    return float(n ** (-1.0 / d) * math.log(n) ** beta)


def alpha_from_radius(n: int, d: int, radius: float) -> float:
    """Inverse of the radius law: alpha = n r^d / log n."""
    return float(n * radius**d / math.log(n))


@dataclass(frozen=True, eq=False)
class PositionSample:
    """Initial positions of n agents, uniform in [0, 1]^d."""

    n: int
    d: int
    seed: SeedKey
    X: NDArray[np.float64]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "seed": seed_entropy(self.seed),
            "X": self.X.tolist(),
        }


def sample_positions(n: int, d: int, seed: SeedKey) -> PositionSample:
    """Draw n i.i.d. uniform points in the unit cube.

    Args:
        n: Number of agents (>= 1).
        d: Dimension (>= 2).
        seed: Master seed or index tuple; identical keys give identical samples.

    Returns:
        The position sample.
    """
    if n < 1:
        raise DomainError(f"need at least one agent, got {n}")
    if d < 2:
        raise DomainError(f"dimension must be at least 2, got {d}")
    generator = make_generator(seed)
    positions = generator.random((n, d))
    return PositionSample(n=n, d=d, seed=seed, X=positions)


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected graph joining agents at distance <= radius.

    Attributes:
        n: Number of vertices.
        radius: Connection radius.
        edges: (m, 2) array of pairs i < j, sorted lexicographically.
    """

    n: int
    radius: float
    edges: NDArray[np.intp]

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbor list of every vertex."""
        neighbors: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges.tolist():
            neighbors[i].append(j)
            neighbors[j].append(i)
        return tuple(tuple(sorted(row)) for row in neighbors)

    @cached_property
    def matrix(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix."""
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(rows.shape[0], dtype=float)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def degrees(self) -> NDArray[np.int64]:
        counts = np.bincount(self.edges.ravel(), minlength=self.n)
        return counts.astype(np.int64)


def _pairs_within(points: NDArray[np.float64], radius: float) -> NDArray[np.intp]:
    if points.shape[0] < 2:
        return np.empty((0, 2), dtype=np.intp)
    tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        return np.empty((0, 2), dtype=np.intp)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order].astype(np.intp)


def build_graph(
    positions: PositionSample | NDArray[np.float64], radius: float
) -> NeighborGraph:
    """Build G(X; r) with a k-d tree, so only pairs within the radius are visited.

    Args:
        positions: Position sample or an (n, d) array.
        radius: Connection radius (> 0); pairs at distance exactly r are joined.

    Returns:
        The neighbor graph.
    """
    if radius <= 0:
        raise DomainError(f"radius must be positive, got {radius}")
    points = positions.X if isinstance(positions, PositionSample) else positions
    points = np.asarray(points, dtype=float)
    return NeighborGraph(
        n=points.shape[0], radius=float(radius), edges=_pairs_within(points, radius)
    )


def components(graph: NeighborGraph) -> NDArray[np.int32]:
    """Connected component label of every vertex."""
    if graph.n == 0:
        return np.empty(0, dtype=np.int32)
    _, labels = csgraph.connected_components(graph.matrix, directed=False)
    return labels.astype(np.int32)


def is_connected(graph: NeighborGraph) -> bool:
    """True iff the graph has exactly one connected component."""
    if graph.n < 1:
        raise DomainError("graph has no vertices")
    if graph.n == 1:
        return True
    count, _ = csgraph.connected_components(graph.matrix, directed=False)
    return bool(count == 1)


def component_members(graph: NeighborGraph) -> list[NDArray[np.intp]]:
    """Vertex sets of the components, ordered by size then smallest vertex."""
    labels = components(graph)
    groups = [np.flatnonzero(labels == label) for label in np.unique(labels)]
    return sorted(groups, key=lambda members: (members.size, int(members[0])))


@dataclass(frozen=True)
class ConnectivityResult:
    """Monte Carlo estimate of the probability that G(X_n; r_n) is connected."""

    n: int
    d: int
    alpha: float
    radius: float
    trials: int
    connected_count: int

    @property
    def frequency(self) -> float:
        return self.connected_count / self.trials

    def as_row(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "radius": self.radius,
            "trials": self.trials,
            "connected_count": self.connected_count,
            "frequency": self.frequency,
        }


def connectivity_probability(
    n: int,
    d: int,
    alpha: float | None,
    trials: int,
    seed: int,
    *,
    radius: float | None = None,
    threads: int = 1,
) -> ConnectivityResult:
    """Fraction of random instances whose initial neighbor graph is connected.

    Trial k uses positions keyed by ``(seed, k)``; the count is reduced in
    trial order, so the result does not depend on ``threads``.

    Args:
        n: Number of agents.
        d: Dimension.
        alpha: Radius law parameter, r = (alpha log n / n)^(1/d).
        trials: Number of independent instances (>= 1).
        seed: Master seed.
        radius: Explicit radius overriding ``alpha``.
        threads: Worker threads.

    Returns:
        The connectivity estimate.
    """
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")
    if radius is None:
        if alpha is None:
            raise DomainError("either alpha or radius is required")
        radius = radius_from_alpha(n, d, alpha)
    elif alpha is None:
        alpha = alpha_from_radius(n, d, radius) if n >= 2 else float("nan")
    assert alpha is not None
    log = _LOGGER.getChild(f"connectivity-{seed}")
    log.info(
        "Estimating connectivity n=%d d=%d alpha=%.4f r=%.5f", n, d, alpha, radius
    )

    if radius >= math.sqrt(d):
        # every pair of points in the unit cube is within the cube diameter
        return ConnectivityResult(n, d, alpha, radius, trials, trials)

    def trial(index: tuple[int, ...]) -> bool:
        positions = sample_positions(n, d, (seed, *index))
        return is_connected(build_graph(positions, radius))

    outcomes = run_trials(trial, [(k,) for k in range(trials)], threads=threads)
    connected = sum(1 for value in outcomes if value)
    log.info("Connected in %d of %d trials", connected, trials)
    return ConnectivityResult(n, d, alpha, radius, trials, connected)
