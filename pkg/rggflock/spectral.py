"""Eigenvalues, essential spectral radius and Cheeger constants of P(t)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy import linalg
from scipy.sparse import csgraph

from .const import (
    CHEEGER_CHUNK,
    CHEEGER_EXACT_LIMIT,
    CHEEGER_SLACK,
    CONTRACTION_SLACK,
    SYMMETRY_TOL,
)
from .dynamics import Trajectory, WeightMatrix, weight_matrix
from .errors import CheegerTooLarge, DomainError
from .trials import run_trials

_LOGGER = logging.getLogger(__name__)

MatrixLike = WeightMatrix | NDArray[np.float64]


def _as_weight_matrix(P: MatrixLike) -> WeightMatrix:
    if isinstance(P, WeightMatrix):
        return P
    return WeightMatrix.from_dense(np.asarray(P, dtype=float))


def _dense_symmetric(P: MatrixLike) -> NDArray[np.float64]:
    dense = P.dense() if isinstance(P, WeightMatrix) else np.asarray(P, dtype=float)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DomainError(f"matrix must be square, got {dense.shape}")
    asymmetry = float(np.max(np.abs(dense - dense.T), initial=0.0))
    if asymmetry > SYMMETRY_TOL:
        raise DomainError(f"matrix is not symmetric (asymmetry {asymmetry:.3e})")
    return dense


def _eigh_descending(
    P: MatrixLike,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    values, vectors = linalg.eigh(_dense_symmetric(P))
    return values[::-1].copy(), vectors[:, ::-1].copy()


def eigen_symmetric(P: MatrixLike) -> NDArray[np.float64]:
    """All eigenvalues of a symmetric matrix, sorted descending.

    Raises:
        DomainError: If the matrix is not symmetric to 1e-12.
    """
    values = linalg.eigh(_dense_symmetric(P), eigvals_only=True)
    return np.asarray(values[::-1], dtype=float)


def _lambda_bar(values: NDArray[np.float64]) -> float:
    if values.shape[0] < 2:
        return 0.0
    return float(max(abs(values[1]), abs(values[-1])))


def essential_spectral_radius(P: MatrixLike) -> tuple[float, bool]:
    """max(|lambda_2|, |lambda_n|) together with the stochasticity flag.

    A non-stochastic matrix still gets its value; the flag is False and a
    warning is logged.
    """
    matrix = _as_weight_matrix(P)
    stochastic = matrix.is_stochastic
    if not stochastic:
        _LOGGER.warning(
            "Essential spectral radius of a non-stochastic matrix (Delta=%.4f)",
            matrix.max_weighted_degree,
        )
    return _lambda_bar(eigen_symmetric(P)), stochastic


def gershgorin_band(P: MatrixLike) -> tuple[float, float]:
    """Interval [1 - 2 Delta, 1] holding every eigenvalue of P."""
    matrix = _as_weight_matrix(P)
    return 1.0 - 2.0 * matrix.max_weighted_degree, 1.0


def _cut_weights(matrix: WeightMatrix) -> NDArray[np.float64]:
    weights = matrix.offdiag.toarray()
    np.fill_diagonal(weights, 0.0)
    return weights


def cheeger_exact(P: MatrixLike) -> float:
    """Exact min over |F| <= n/2 of cut(F, F^c) / |F|.

    Every subset is enumerated as a bit mask, a chunk at a time, using
    cut(F) = deg . x - x^T W x for the indicator vector x of F.

    Raises:
        CheegerTooLarge: If n exceeds the enumeration limit; use
            :func:`cheeger_sweep` instead.
    """
    matrix = _as_weight_matrix(P)
    n = matrix.n
    if n > CHEEGER_EXACT_LIMIT:
        raise CheegerTooLarge(
            f"exact Cheeger enumeration supports n <= {CHEEGER_EXACT_LIMIT}, "
            f"got {n}; use cheeger_sweep"
        )
    if n < 2:
        return 0.0
    weights = _cut_weights(matrix)
    degrees = weights.sum(axis=1)
    bits = np.arange(n, dtype=np.int64)
    best = math.inf
    for start in range(1, 1 << n, CHEEGER_CHUNK):
        masks = np.arange(start, min(start + CHEEGER_CHUNK, 1 << n), dtype=np.int64)
        x = ((masks[:, None] >> bits[None, :]) & 1).astype(float)
        sizes = x.sum(axis=1)
        admissible = sizes <= n / 2
        if not admissible.any():
            continue
        x, sizes = x[admissible], sizes[admissible]
        cuts = x @ degrees - np.einsum("ij,ij->i", x @ weights, x)
        best = min(best, float(np.min(np.maximum(cuts, 0.0) / sizes)))
    return best


def _is_connected(matrix: WeightMatrix) -> bool:
    if matrix.n < 2:
        return True
    count, _ = csgraph.connected_components(matrix.offdiag, directed=False)
    return bool(count == 1)


def cheeger_sweep(P: MatrixLike) -> float:
    """Upper bound on the Cheeger constant from the Fiedler-vector sweep.

    Agents are ordered by the eigenvector of lambda_2 and the n - 1 prefix
    cuts are scored by cut / min(|S|, n - |S|). A disconnected weight graph
    returns 0.
    """
    matrix = _as_weight_matrix(P)
    n = matrix.n
    if n < 2:
        return 0.0
    if not _is_connected(matrix):
        return 0.0
    _, vectors = _eigh_descending(matrix)
    order = np.argsort(vectors[:, 1], kind="stable")
    weights = _cut_weights(matrix)[np.ix_(order, order)]
    degrees = weights.sum(axis=1)
    # cut of prefix k: sum of degrees in S minus twice the inside weight
    inside = np.cumsum(np.cumsum(weights, axis=0), axis=1)
    k = np.arange(1, n)
    cuts = np.cumsum(degrees)[:-1] - inside[k - 1, k - 1]
    sizes = np.minimum(k, n - k)
    return float(np.min(np.maximum(cuts, 0.0) / sizes))


def cheeger_inequality_check(P: MatrixLike) -> bool:
    """Whether lambda_2 <= 1 - Phi^2 holds, with Phi from exact enumeration."""
    values = eigen_symmetric(P)
    if values.shape[0] < 2:
        return True
    phi = cheeger_exact(P)
    return bool(values[1] <= 1.0 - phi**2 + CHEEGER_SLACK)


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectrum and Cheeger values of one weight matrix.

    ``phi_sweep`` is an upper bound on the Cheeger constant; ``phi_exact`` and
    ``cheeger_holds`` are only filled for n within the enumeration limit.
    """

    eigenvalues: NDArray[np.float64]
    lambda_bar: float
    phi_sweep: float
    phi_exact: float | None
    cheeger_holds: bool | None
    stochastic: bool
    delta: float

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.eigenvalues.shape[0] > 1 else 1.0

    @property
    def lambda_n(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def in_gershgorin_band(self) -> bool:
        low = 1.0 - 2.0 * self.delta
        return bool(
            np.all(self.eigenvalues >= low - CHEEGER_SLACK)
            and np.all(self.eigenvalues <= 1.0 + CHEEGER_SLACK)
        )

    def as_row(self, t: int | None = None) -> dict[str, Any]:
        row: dict[str, Any] = {} if t is None else {"t": t}
        row.update(
            {
                "lambda2": self.lambda2,
                "lambdan": self.lambda_n,
                "lambda_bar": self.lambda_bar,
                "phi_sweep": self.phi_sweep,
                "phi_exact": self.phi_exact,
            }
        )
        return row


def spectral_report(P: MatrixLike) -> SpectralReport:
    matrix = _as_weight_matrix(P)
    values = eigen_symmetric(matrix)
    phi_exact: float | None = None
    holds: bool | None = None
    if matrix.n <= CHEEGER_EXACT_LIMIT:
        phi_exact = cheeger_exact(matrix)
        holds = bool(
            values.shape[0] < 2 or values[1] <= 1.0 - phi_exact**2 + CHEEGER_SLACK
        )
    return SpectralReport(
        eigenvalues=values,
        lambda_bar=_lambda_bar(values),
        phi_sweep=cheeger_sweep(matrix),
        phi_exact=phi_exact,
        cheeger_holds=holds,
        stochastic=matrix.is_stochastic,
        delta=matrix.max_weighted_degree,
    )


class ContractionCheck(NamedTuple):
    holds: bool
    margins: list[float]
    worst_margin: float
    stochastic: bool


def _frobenius_deviation(V: NDArray[np.float64]) -> float:
    return float(np.linalg.norm(V - V.mean(axis=0)))


def contraction_check(traj: Trajectory) -> ContractionCheck:
    """Check |V(k) - mean|_F <= |V(0) - mean|_F prod_{i<k} lambda_bar(i).

    The margin at step k is the right side minus the left side; the check
    allows a slack of 1e-9 times the initial deviation.
    """
    if len(traj) == 0:
        return ContractionCheck(True, [], 0.0, True)
    initial = _frobenius_deviation(traj.initial.V)
    product = 1.0
    margins = [0.0]
    stochastic = True
    for before, after in zip(traj.states, traj.states[1:]):
        matrix = weight_matrix(before, traj.kernel)
        stochastic = stochastic and matrix.is_stochastic
        product *= _lambda_bar(eigen_symmetric(matrix))
        margins.append(initial * product - _frobenius_deviation(after.V))
    worst = min(margins)
    holds = worst >= -CONTRACTION_SLACK * max(initial, 1.0e-300)
    if not stochastic:
        _LOGGER.warning("Contraction check on a run with non-stochastic P(t)")
    return ContractionCheck(bool(holds), margins, worst, stochastic)


def spectral_rows(traj: Trajectory, *, threads: int = 1) -> list[dict[str, Any]]:
    """Per-step spectral rows for P(0)..P(T-1) of a recorded trajectory."""
    steps = list(traj.states[:-1])

    def analyse(key: tuple[int]) -> dict[str, Any]:
        (t,) = key
        return spectral_report(weight_matrix(steps[t], traj.kernel)).as_row(t)

    return run_trials(analyse, [(t,) for t in range(len(steps))], threads=threads)


@dataclass
class SpectralSeries:
    """Online spectral diagnostics of a run, fed one applied P(t) at a time.

    Tracks lambda_2, lambda_n, lambda_bar and the Cheeger value of every
    observed step, the running minimum of the Cheeger values, and the
    Frobenius contraction margin of V(t + 1).
    """

    initial_deviation: float
    rows: list[dict[str, Any]] = field(default_factory=list)
    phi_min: float = math.inf
    product: float = 1.0
    worst_margin: float = 0.0
    gershgorin_holds: bool = True
    cheeger_holds: bool | None = None
    stochastic: bool = True

    @classmethod
    def start(cls, V0: NDArray[np.float64]) -> SpectralSeries:
        return cls(initial_deviation=_frobenius_deviation(V0))

    def observe(
        self, t: int, matrix: WeightMatrix, V_next: NDArray[np.float64]
    ) -> None:
        report = spectral_report(matrix)
        phi = report.phi_exact if report.phi_exact is not None else report.phi_sweep
        self.phi_min = min(self.phi_min, phi)
        self.product *= report.lambda_bar
        margin = self.initial_deviation * self.product - _frobenius_deviation(V_next)
        self.worst_margin = min(self.worst_margin, margin)
        self.gershgorin_holds = self.gershgorin_holds and report.in_gershgorin_band
        if report.cheeger_holds is not None:
            previous = self.cheeger_holds is not False
            self.cheeger_holds = previous and report.cheeger_holds
        self.stochastic = self.stochastic and report.stochastic
        row = report.as_row(t)
        row["phi_min"] = self.phi_min
        row["contraction_margin"] = margin
        self.rows.append(row)

    def finish(self) -> None:
        if not self.contraction_holds and self.stochastic:
            _LOGGER.warning(
                "Contraction inequality violated (worst margin %.3e)", self.worst_margin
            )

    @property
    def contraction_holds(self) -> bool:
        slack = CONTRACTION_SLACK * max(self.initial_deviation, 1.0e-300)
        return self.worst_margin >= -slack

    def lambda_bar_series(self) -> list[float]:
        return [row["lambda_bar"] for row in self.rows]

    def summary(self) -> dict[str, Any]:
        lambdas = self.lambda_bar_series()
        return {
            "steps": len(self.rows),
            "max_lambda_bar": max(lambdas, default=None),
            "phi_min": self.phi_min if self.rows else None,
            "contraction_holds": self.contraction_holds,
            "worst_contraction_margin": self.worst_margin,
            "gershgorin_holds": self.gershgorin_holds,
            "cheeger_holds": self.cheeger_holds,
        }
