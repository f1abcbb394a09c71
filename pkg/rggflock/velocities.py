"""Initial velocity constructions, including the adversarial families."""
from __future__ import annotations

import logging
import math
from enum import StrEnum
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError
from .geometry import PositionSample, build_graph, component_members

_LOGGER = logging.getLogger(__name__)


class VelocityMode(StrEnum):
    EXPLICIT = "explicit"
    HALF_SPLIT = "halfsplit"
    NEAREST_ORIGIN = "nearest_origin"
    ISOLATED_CLUSTER = "isolated_cluster"


def halfsplit_scale(n: int, vprime: float) -> float:
    """Velocity magnitude v' n^(-3/2) (log n)^(1/2) of the phase-diagram runs."""
    return vprime * n ** (-1.5) * math.sqrt(math.log(n))


def isolated_direction(d: int) -> NDArray[np.float64]:
    """Unit vector (0, -1, ..., -1) / sqrt(d - 1)."""
    direction = -np.ones(d)
    direction[0] = 0.0
    return direction / math.sqrt(d - 1)


def _points(positions: PositionSample | NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(positions, PositionSample):
        return positions.X
    return np.asarray(positions, dtype=float)


def adversarial_velocities(
    positions: PositionSample | NDArray[np.float64],
    mode: VelocityMode | str,
    v0: float,
    *,
    cluster: Sequence[int] | NDArray[np.intp] | None = None,
) -> NDArray[np.float64]:
    """Build V(0) for one of the adversarial velocity families.

    Args:
        positions: Initial positions.
        mode: ``nearest_origin`` gives the agent closest to the origin (lowest
            index on ties) the vector -v0/sqrt(d) (1, ..., 1) and everyone else
            its negation; ``halfsplit`` gives -v0 e1 to agents with first
            coordinate <= 1/2 and +v0 e1 to the rest; ``isolated_cluster`` gives
            the agents of ``cluster`` v0 (0, -1, ..., -1)/sqrt(d - 1) and
            everyone else its negation.
        v0: Speed of every agent (> 0).
        cluster: Agents of the isolated component (isolated_cluster only).

    Returns:
        An (n, d) velocity matrix whose rows all have norm v0.
    """
    if not v0 > 0:
        raise DomainError(f"v0 must be positive, got {v0}")
    points = _points(positions)
    n, d = points.shape
    mode = VelocityMode(mode)
    if mode is VelocityMode.NEAREST_ORIGIN:
        chosen = int(np.argmin(np.linalg.norm(points, axis=1)))
        velocity = np.full((n, d), v0 / math.sqrt(d))
        velocity[chosen] = -velocity[chosen]
        return velocity
    if mode is VelocityMode.HALF_SPLIT:
        velocity = np.zeros((n, d))
        velocity[:, 0] = np.where(points[:, 0] <= 0.5, -v0, v0)
        return velocity
    if mode is VelocityMode.ISOLATED_CLUSTER:
        if cluster is None or len(cluster) == 0:
            raise DomainError("isolated_cluster velocities need a cluster")
        members = np.asarray(cluster, dtype=np.intp)
        if len(np.unique(members)) >= n:
            raise DomainError("the cluster must not contain every agent")
        direction = v0 * isolated_direction(d)
        velocity = np.tile(-direction, (n, 1))
        velocity[members] = direction
        return velocity
    raise DomainError(f"mode {mode} is not an adversarial family")


def certify_isolated_split(
    positions: PositionSample | NDArray[np.float64],
    velocities: NDArray[np.float64],
    cluster: Sequence[int] | NDArray[np.intp],
    radius: float,
) -> bool:
    """Prove that the cluster and the rest never interact.

    Both groups must move rigidly (one common velocity per group, which the
    averaging dynamics then keeps forever) and every cross pair's relative
    position a + t w must stay at distance >= radius for all t >= 0. The
    minimum over t >= 0 is |a| when a.w >= 0 and otherwise
    sqrt(|a|^2 - (a.w)^2 / |w|^2).
    """
    points = _points(positions)
    n = points.shape[0]
    members = np.zeros(n, dtype=bool)
    members[np.asarray(cluster, dtype=np.intp)] = True
    if members.all() or not members.any():
        return False
    inside, outside = velocities[members], velocities[~members]
    if not (np.all(inside == inside[0]) and np.all(outside == outside[0])):
        return False
    relative_velocity = inside[0] - outside[0]
    speed_sq = float(relative_velocity @ relative_velocity)
    if speed_sq == 0.0:
        return False
    offsets = points[members][:, None, :] - points[~members][None, :, :]
    dist_sq = np.einsum("ijk,ijk->ij", offsets, offsets)
    along = offsets @ relative_velocity
    closest_sq = np.where(along >= 0.0, dist_sq, dist_sq - along**2 / speed_sq)
    return bool(np.all(closest_sq >= radius**2))


def find_isolated_cluster(
    positions: PositionSample | NDArray[np.float64], radius: float, v0: float
) -> tuple[NDArray[np.intp], NDArray[np.float64]] | None:
    """Pick a component of G(X; r) whose split velocities certify non-flocking.

    Components are tried from smallest to largest, each with the cluster
    moving along (0, -1, ..., -1) and then along the opposite direction; the
    largest component is never chosen as the cluster. Returns the cluster and
    the velocity matrix, or None when the graph is connected or no component
    certifies.
    """
    points = _points(positions)
    groups = component_members(build_graph(points, radius))
    if len(groups) < 2:
        return None
    for members in groups[:-1]:
        velocity = adversarial_velocities(
            points, VelocityMode.ISOLATED_CLUSTER, v0, cluster=members
        )
        for candidate in (velocity, -velocity):
            if certify_isolated_split(points, candidate, members, radius):
                return members, candidate
    _LOGGER.debug("No certifiable isolated cluster among %d components", len(groups))
    return None
