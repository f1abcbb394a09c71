"""Tests for the flocking dynamics and its run reports."""

import math

import numpy as np
import pytest

from rggflock.config import SimConfig
from rggflock.dynamics import (
    Diagnostics,
    DriftMode,
    L_functional,
    L_upper_bound,
    SwarmState,
    WeightMatrix,
    drift,
    max_drift,
    max_weighted_degree,
    run_dynamics,
    separation_certificate,
    separation_series,
    simulate,
    step,
    velocity_spread,
    weight_matrix,
)
from rggflock.errors import DomainError
from rggflock.geometry import radius_from_alpha, sample_positions
from rggflock.kernel import Kernel
from rggflock.kernels import KernelFamily
from rggflock.rng import make_generator
from rggflock.spectral import contraction_check


@pytest.fixture
def path_kernel():
    """Indicator kernel joining neighbors on the line fixture with weight 1/4."""
    return Kernel(family=KernelFamily.INDICATOR, radius=0.15, amplitude=0.25)


@pytest.fixture
def path_state(line_positions):
    """Three agents on a line, the outer two moving towards each other."""
    velocities = np.array([[1e-6, 0.0], [0.0, 0.0], [-1e-6, 0.0]])
    return SwarmState(t=0, X=line_positions, V=velocities)


@pytest.fixture
def parting_state():
    """Two agents far apart moving away from each other."""
    positions = np.array([[0.2, 0.5], [0.8, 0.5]])
    velocities = np.array([[-1e-3, 0.0], [1e-3, 0.0]])
    return SwarmState(t=0, X=positions, V=velocities)


def test_swarm_state_validation(line_positions):
    """Test that shapes must agree and t must be nonnegative."""
    with pytest.raises(DomainError):
        SwarmState(t=0, X=line_positions, V=np.zeros((2, 2)))

    with pytest.raises(DomainError):
        SwarmState(t=-1, X=line_positions, V=np.zeros_like(line_positions))

    state = SwarmState(t=0, X=line_positions, V=np.zeros_like(line_positions))
    assert (state.n, state.d) == (3, 2)


def test_weight_matrix_from_dense():
    """Test that the diagonal is one minus the off-diagonal row sum."""
    dense = np.array([[9.0, 0.3, 0.2], [0.3, 9.0, 0.3], [0.2, 0.3, 9.0]])
    velocities = np.arange(6.0).reshape(3, 2)

    matrix = WeightMatrix.from_dense(dense)

    np.testing.assert_allclose(matrix.diag, [0.5, 0.4, 0.5])
    np.testing.assert_allclose(matrix.row_sums(), 1.0, atol=1e-14)
    np.testing.assert_allclose(matrix.apply(velocities), matrix.dense() @ velocities)
    assert matrix.is_stochastic
    assert matrix.max_weighted_degree == pytest.approx(0.6)


def test_weight_matrix_not_stochastic():
    """Test that a weighted degree above one leaves a negative diagonal."""
    dense = np.array([[0.0, 0.8, 0.7], [0.8, 0.0, 0.1], [0.7, 0.1, 0.0]])

    matrix = WeightMatrix.from_dense(dense)

    assert not matrix.is_stochastic
    assert matrix.max_weighted_degree == pytest.approx(1.5)
    np.testing.assert_allclose(matrix.row_sums(), 1.0, atol=1e-14)

    with pytest.raises(DomainError):
        WeightMatrix.from_dense(np.zeros((2, 3)))


def test_weight_matrix_of_state(path_state, path_kernel):
    """Test P(0) of the path: weights 1/4 between neighbors only."""
    matrix = weight_matrix(path_state, path_kernel)

    np.testing.assert_allclose(
        matrix.dense(),
        [[0.75, 0.25, 0.0], [0.25, 0.5, 0.25], [0.0, 0.25, 0.75]],
    )
    assert matrix.max_weighted_degree == pytest.approx(0.5)


def test_shifted_kernel_only_for_degrees(path_state, path_kernel):
    """Test that Delta accepts a shifted kernel but P(t) refuses it."""
    shifted = path_kernel.shifted(0.5)

    with pytest.raises(DomainError):
        weight_matrix(path_state, shifted)

    assert max_weighted_degree(path_state, shifted) >= max_weighted_degree(
        path_state, path_kernel
    )


def test_step_moves_then_averages(path_state, path_kernel):
    """Test X(t+1) = X(t) + V(t) and V(t+1) = P(t) V(t)."""
    # Act
    moved = step(path_state, path_kernel)

    # Assert
    assert moved.t == 1
    np.testing.assert_allclose(moved.X, path_state.X + path_state.V)
    np.testing.assert_allclose(
        moved.V, weight_matrix(path_state, path_kernel).apply(path_state.V)
    )
    np.testing.assert_allclose(moved.V.mean(axis=0), path_state.V.mean(axis=0))


def test_velocity_spread():
    """Test a(t) and the largest pairwise velocity gap."""
    velocities = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    state = SwarmState(t=0, X=np.zeros((3, 2)), V=velocities)

    exact = velocity_spread(state)
    audited = velocity_spread(state, exact=False)

    assert exact.exact
    assert exact.a_t == pytest.approx(math.sqrt(5.0))
    assert exact.max_pair == pytest.approx(math.sqrt(5.0))
    assert not audited.exact
    assert audited.max_pair <= exact.max_pair
    assert audited.a_t >= audited.max_pair


def test_l_functional():
    """Test L(V(0)) and its logarithmic upper bound."""
    velocities = np.array([[1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]])

    value = L_functional(velocities)

    assert value == pytest.approx(1.0 + math.log(math.sqrt(2.0)))
    assert value <= L_upper_bound(velocities)
    assert L_functional(np.ones((4, 2))) == 0.0


def test_run_flocks(path_state, path_kernel):
    """Test that the path swarm reaches the relative tolerance."""
    # Act
    report = run_dynamics(path_state, path_kernel, t_max=200, flock_tol=1e-3)

    # Assert
    assert report.flocked
    assert 0 < report.T_flock == report.steps <= 200
    assert report.final_spread < report.tolerance
    assert report.tolerance == pytest.approx(1e-3 * 2e-6)
    assert len(report.spread_series) == report.steps + 1
    assert len(report.delta_series) == report.steps
    assert report.delta_series == pytest.approx([0.5] * report.steps)
    assert report.stochastic_throughout
    assert not report.separation_certified_until_stop
    assert report.pairs_exact


def test_run_already_flocked(line_positions, path_kernel):
    """Test that equal velocities flock at t = 0."""
    state = SwarmState(t=0, X=line_positions, V=np.ones_like(line_positions))

    report = run_dynamics(state, path_kernel, t_max=50)

    assert report.flocked
    assert report.T_flock == 0
    assert report.steps == 0


def test_run_zero_horizon(path_state, path_kernel):
    """Test that t_max = 0 reports no flocking without stepping."""
    report = run_dynamics(path_state, path_kernel, t_max=0)

    assert not report.flocked
    assert report.T_flock is None
    assert report.steps == 0


def test_separation_certificate(parting_state, path_kernel):
    """Test that groups moving apart across a wide gap are certified."""
    approaching = SwarmState(t=0, X=parting_state.X, V=-parting_state.V)

    assert separation_certificate(parting_state, path_kernel)
    assert not separation_certificate(approaching, path_kernel)


def test_run_stops_early(parting_state, path_kernel):
    """Test that a certified separation ends the run at the next check."""
    report = run_dynamics(parting_state, path_kernel, t_max=1000)

    assert not report.flocked
    assert report.separation_certified_until_stop
    assert report.steps == 10


def test_run_without_early_stop(parting_state, path_kernel):
    """Test that switching early stopping off runs to the horizon."""
    options = Diagnostics(early_stop=False, drift=DriftMode.OFF)

    report = run_dynamics(parting_state, path_kernel, t_max=30, diagnostics=options)

    assert report.steps == 30
    assert not report.separation_certified_until_stop
    assert report.max_drift is None


def test_no_early_stop_after_non_stochastic_step():
    """Test that a split is not trusted once some P(t) was not stochastic."""
    # Arrange
    positions = np.array([[0.1, 0.5], [0.12, 0.5], [0.1, 0.52], [0.9, 0.5]])
    velocities = np.array([[-1e-3, 0.0]] * 3 + [[1e-3, 0.0]])
    state = SwarmState(t=0, X=positions, V=velocities)
    crowded = Kernel(family=KernelFamily.INDICATOR, radius=0.1, amplitude=0.6)

    # Act
    report = run_dynamics(state, crowded, t_max=30)

    # Assert
    assert separation_certificate(state, crowded)
    assert not report.stochastic_throughout
    assert not report.flocked
    assert report.steps == 30
    assert not report.separation_certified_until_stop
    assert report.to_dict()["separation_certified_until_stop"] is False


def test_trajectory_and_drift(path_state, path_kernel):
    """Test the recorded trajectory, pair drift and nearest-neighbor series."""
    report = run_dynamics(
        path_state, path_kernel, t_max=40, flock_tol=1e-3, record_trajectory=True
    )
    traj = report.trajectory

    assert len(traj) == report.steps + 1
    assert traj.initial is path_state
    assert drift(traj, 0, 2, 0) == 0.0
    assert drift(traj, 0, 2, report.steps) > 0.0
    assert max_drift(traj) == pytest.approx(report.max_drift)
    assert max_drift(traj) <= 2e-6 * report.steps
    separations = separation_series(traj, 1)
    assert len(separations) == len(traj)
    assert separations[0] == pytest.approx(0.1)


def test_spectral_diagnostics(path_state, path_kernel):
    """Test that the online spectral series follows the run."""
    options = Diagnostics(spectral=True)

    report = run_dynamics(
        path_state, path_kernel, t_max=200, flock_tol=1e-3, diagnostics=options
    )
    summary = report.to_dict()["spectral"]

    assert len(report.spectral.rows) == report.steps
    assert report.spectral.contraction_holds
    assert summary["gershgorin_holds"]
    assert summary["cheeger_holds"]
    assert summary["max_lambda_bar"] == pytest.approx(0.75, abs=1e-4)
    records = list(report.series_records())
    assert len(records) == report.steps + 1
    assert records[-1]["delta"] is None
    assert records[0]["lambda_bar"] == pytest.approx(0.75, abs=1e-4)


def test_report_dict(path_state, path_kernel):
    """Test the serialized run summary."""
    report = run_dynamics(path_state, path_kernel, t_max=200, flock_tol=1e-3, seed=4)

    data = report.to_dict()

    assert data["flocked"] is True
    assert data["max_delta"] == pytest.approx(0.5)
    assert data["seed"] == [4]
    assert "spectral" not in data


def test_simulate_is_reproducible(sim_config_data):
    """Test that a configured run flocks and repeats exactly."""
    config = SimConfig.from_dict(sim_config_data)

    first = simulate(config)
    again = simulate(config)
    other = simulate(config, seed=(11, 1))

    assert first.flocked
    assert first.stochastic_throughout
    assert first.spread_series == again.spread_series
    assert first.seed == [11]
    assert other.seed == [11, 1]
    assert other.spread_series[0] != first.spread_series[0]


def test_diagnostics_dict():
    """Test the serialized diagnostics options."""
    assert Diagnostics().to_dict() == {
        "spectral": False,
        "drift": "auto",
        "early_stop": True,
        "log_every": 100,
    }


@pytest.mark.slow
def test_update_invariants_over_seeds():
    """Test row sums, the conserved mean, a(t) and the contraction on 100 runs."""
    for seed in range(100):
        # Arrange
        n = 20 + (37 * seed) % 181
        kernel = Kernel(
            family=KernelFamily.TRIANGULAR,
            radius=radius_from_alpha(n, 2, 2.0),
            amplitude=1.0 / (4.0 * math.pi * math.log(n)),
        )
        positions = sample_positions(n, 2, (5, seed)).X
        velocities = 1e-3 * make_generator((6, seed)).standard_normal((n, 2))
        state = SwarmState(t=0, X=positions, V=velocities)

        # Act
        report = run_dynamics(
            state,
            kernel,
            t_max=40,
            flock_tol=1e-12,
            diagnostics=Diagnostics(early_stop=False),
            seed=seed,
            record_trajectory=True,
        )
        traj = report.trajectory

        # Assert
        for t in range(len(traj) - 1):
            matrix = weight_matrix(traj[t], kernel)
            np.testing.assert_allclose(matrix.row_sums(), 1.0, rtol=0.0, atol=1e-14)
            np.testing.assert_allclose(
                traj[t + 1].V.mean(axis=0), traj[t].V.mean(axis=0), rtol=0.0, atol=1e-12
            )
            if report.delta_series[t] <= 1.0:
                assert report.spread_series[t + 1] <= report.spread_series[t] * (
                    1.0 + 1e-12
                )
        assert contraction_check(traj).holds


@pytest.mark.slow
def test_slow_swarm_flocks_at_default_phase_point():
    """Test that n = 600, alpha = 2 with the auto triangular kernel flocks."""
    # Arrange
    data = {
        "n": 600,
        "d": 2,
        "alpha": 2.0,
        "kernel": {"family": "triangular", "amplitude": "auto"},
        "velocity": {"mode": "halfsplit", "vprime": 0.01},
        "t_max": 10_000,
        "seed": 0,
    }
    config = SimConfig.from_dict(data)

    # Act
    reports = [simulate(config, seed=(0, trial)) for trial in range(3)]

    # Assert
    amplitude = config.build_kernel().amplitude
    assert amplitude == pytest.approx(1.0 / (2.0 * math.pi * math.log(600)))
    for report in reports:
        assert report.flocked
        assert report.T_flock <= 10_000
        assert report.stochastic_throughout
