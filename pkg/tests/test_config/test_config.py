"""Tests for loading and validating experiment configs."""

import json
import math

import numpy as np
import pytest

from rggflock.config import (
    KernelSpec,
    RadiusSpec,
    SimConfig,
    SweepSpec,
    VelocitySpec,
    dump_config,
    load_config,
    load_sweep,
)
from rggflock.dynamics import Diagnostics
from rggflock.errors import ConfigError, DomainError
from rggflock.geometry import radius_from_alpha
from rggflock.kernels import KernelFamily
from rggflock.velocities import VelocityMode, halfsplit_scale


def _write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def _with(data, **changes):
    merged = dict(data)
    merged.update(changes)
    return merged


def test_load_config(sim_config_file):
    """Test that a full config loads into typed specs."""
    # Act
    config = load_config(sim_config_file)

    # Assert
    assert (config.n, config.d, config.seed) == (40, 2, 11)
    assert config.radius == RadiusSpec(law="alpha", value=3.0)
    assert config.alpha == 3.0
    assert config.interaction_radius == pytest.approx(radius_from_alpha(40, 2, 3.0))
    assert config.kernel.family is KernelFamily.TRIANGULAR
    assert config.velocity == VelocitySpec(mode=VelocityMode.HALF_SPLIT, v0=1e-6)
    assert config.build_kernel().amplitude == 0.025


def test_defaults():
    """Test the defaults of a minimal config."""
    data = {
        "n": 50,
        "d": 2,
        "radius": 0.2,
        "kernel": {"family": "indicator"},
        "velocity": {"mode": "nearest_origin", "v0": 0.1},
    }

    config = SimConfig.from_dict(data)

    assert config.t_max == 10_000
    assert config.flock_tol == 1e-9
    assert config.seed == 0
    assert config.trials == 1
    assert config.diagnostics == Diagnostics()
    assert config.kernel.amplitude == "auto"
    assert config.alpha == pytest.approx(50 * 0.04 / math.log(50))


def test_default_amplitude():
    """Test that the auto amplitude is 1 / (alpha pi log n) in two dimensions."""
    data = {
        "n": 1000,
        "d": 2,
        "alpha": 2.0,
        "kernel": {"family": "indicator", "amplitude": "auto"},
        "velocity": {"mode": "halfsplit", "vprime": 1.0},
    }

    kernel = SimConfig.from_dict(data).build_kernel()

    assert kernel.amplitude == pytest.approx(1.0 / (2.0 * math.pi * math.log(1000)))


def test_error_reports_path_and_line(tmp_path, sim_config_data):
    """Test that schema errors carry the key path and its line."""
    path = _write(tmp_path, _with(sim_config_data, n=1))

    with pytest.raises(ConfigError) as err:
        load_config(path)

    assert err.value.path == "n"
    assert err.value.line == 4
    assert "line 4" in str(err.value)


def test_missing_key(sim_config_data):
    """Test that a missing required key is named."""
    data = dict(sim_config_data)
    del data["kernel"]

    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(data)

    assert err.value.path == "kernel"


def test_extra_key_rejected(sim_config_data):
    """Test that unknown keys are refused."""
    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(_with(sim_config_data, colour="red"))

    assert err.value.path == "colour"


def test_radius_laws_are_exclusive(sim_config_data):
    """Test that radius, alpha and beta exclude each other."""
    with pytest.raises(ConfigError):
        SimConfig.from_dict(_with(sim_config_data, radius=0.1))

    data = dict(sim_config_data)
    del data["alpha"]
    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(data)
    assert "radius" in err.value.message


def test_velocity_errors(sim_config_data):
    """Test the velocity mode combinations."""
    both = {"mode": "halfsplit", "v0": 1.0, "vprime": 1.0}
    explicit = {"mode": "explicit", "matrix": [[0.0, 0.0]]}
    stray = {"mode": "nearest_origin", "v0": 1.0, "matrix": [[0.0, 0.0]]}

    for velocity, path in [
        (both, "velocity"),
        (explicit, "velocity.matrix"),
        (stray, "velocity.matrix"),
    ]:
        with pytest.raises(ConfigError) as err:
            SimConfig.from_dict(_with(sim_config_data, velocity=velocity))
        assert err.value.path == path


def test_tabulated_kernel_errors(sim_config_data):
    """Test that tabulated kernels need samples and a numeric amplitude."""
    no_samples = {"family": "tabulated", "amplitude": 0.1}
    auto = {"family": "tabulated", "samples": [1.0, 0.5, 0.0]}

    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(_with(sim_config_data, kernel=no_samples))
    assert err.value.path == "kernel.samples"

    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(_with(sim_config_data, kernel=auto))
    assert err.value.path == "kernel.amplitude"


def test_unreadable_files(tmp_path):
    """Test missing files, invalid JSON and non-object documents."""
    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "n": 10,\n  oops\n}\n', encoding="utf-8")

    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "missing.json")
    assert "cannot read config" in err.value.message

    with pytest.raises(ConfigError) as err:
        load_config(broken)
    assert err.value.line == 3

    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, [1, 2, 3]))


def test_dump_then_load(tmp_path, sim_config_data):
    """Test that a dumped config loads back equal."""
    config = SimConfig.from_dict(sim_config_data)
    path = tmp_path / "dumped.json"

    dump_config(config, path)

    assert load_config(path) == config


def test_initial_state(sim_config_data):
    """Test seeded positions and half-split velocities from v'."""
    velocity = {"mode": "halfsplit", "vprime": 2.0}
    config = SimConfig.from_dict(_with(sim_config_data, velocity=velocity))

    state = config.initial_state()
    again = config.initial_state()
    other = config.initial_state((11, 1))

    np.testing.assert_array_equal(state.X, again.X)
    assert not np.array_equal(state.X, other.X)
    np.testing.assert_allclose(
        np.linalg.norm(state.V, axis=1), halfsplit_scale(40, 2.0)
    )


def test_explicit_velocities():
    """Test that an explicit matrix is used as V(0)."""
    data = {
        "n": 2,
        "d": 2,
        "radius": 0.3,
        "kernel": {"family": "indicator", "amplitude": 0.2},
        "velocity": {"mode": "explicit", "matrix": [[1.0, 0.0], [0.0, -1.0]]},
    }

    state = SimConfig.from_dict(data).initial_state()

    np.testing.assert_array_equal(state.V, [[1.0, 0.0], [0.0, -1.0]])


def test_isolated_cluster_needs_split_graph(sim_config_data):
    """Test that a connected initial graph has no isolated cluster to push."""
    velocity = {"mode": "isolated_cluster", "v0": 0.01}
    config = SimConfig.from_dict(_with(sim_config_data, velocity=velocity))

    with pytest.raises(DomainError):
        config.initial_state()


def test_velocity_spec_speed():
    """Test v0 and the v' speed law."""
    assert VelocitySpec(mode=VelocityMode.HALF_SPLIT, v0=0.3).speed(10) == 0.3
    assert VelocitySpec(mode=VelocityMode.HALF_SPLIT, vprime=2.0).speed(
        100
    ) == pytest.approx(halfsplit_scale(100, 2.0))

    with pytest.raises(DomainError):
        VelocitySpec(mode=VelocityMode.EXPLICIT).speed(10)


def test_kernel_spec_dict():
    """Test the serialized kernel spec."""
    spec = KernelSpec(family=KernelFamily.POWER_CAP, amplitude=0.5, gamma=2.0)

    assert spec.to_dict() == {
        "family": "powercap",
        "amplitude": 0.5,
        "gamma": 2.0,
        "cprime": 1.0,
        "delta": 0.0,
    }


def test_load_sweep(tmp_path, sweep_config_data):
    """Test the sweep grids and the default half-split velocity."""
    spec = load_sweep(_write(tmp_path, sweep_config_data, "sweep.json"))
    cell = spec.cell_config(3.0, 1000.0)

    assert spec.alphas == (2.0, 3.0)
    assert spec.vprimes == (0.01, 1000.0)
    assert (spec.trials, spec.seed) == (2, 5)
    assert spec.base.velocity == VelocitySpec(
        mode=VelocityMode.HALF_SPLIT, vprime=1.0
    )
    assert cell.alpha == 3.0
    assert cell.velocity.vprime == 1000.0
    assert cell.n == 30


def test_sweep_vprime_range(sweep_config_data):
    """Test the {min, max, count} form and the default geometric grid."""
    ranged = SweepSpec.from_dict(
        _with(sweep_config_data, vprimes={"min": 0.1, "max": 10.0, "count": 3})
    )
    default = SweepSpec.from_dict(_with(sweep_config_data, vprimes={}))

    assert ranged.vprimes == pytest.approx((0.1, 1.0, 10.0))
    assert len(default.vprimes) == 20
    assert default.vprimes[0] == pytest.approx(0.01)
    assert default.vprimes[-1] == pytest.approx(100.0)


def test_sweep_base_defaults():
    """Test the default phase sweep setup: n = 600, d = 2, triangular kernel."""
    spec = SweepSpec.from_dict({"kind": "sweep", "base": {"t_max": 100}})

    assert (spec.base.n, spec.base.d) == (600, 2)
    assert spec.base.kernel.family is KernelFamily.TRIANGULAR
    assert spec.base.kernel.amplitude == "auto"
    assert spec.cell_config(1.5, 1.0).alpha == 1.5
    assert spec.trials == 50
    assert len(spec.alphas) == 11


def test_sweep_errors_point_into_base(sweep_config_data):
    """Test that base errors are reported under the base key."""
    data = dict(sweep_config_data)
    data["base"] = _with(sweep_config_data["base"], n=1)

    with pytest.raises(ConfigError) as err:
        SweepSpec.from_dict(data)

    assert err.value.path == "base.n"

    with pytest.raises(ConfigError):
        SweepSpec.from_dict(_with(sweep_config_data, kind="simulate"))


def test_sweep_dump_then_load(tmp_path, sweep_config_data):
    """Test that a dumped sweep loads back equal."""
    spec = SweepSpec.from_dict(sweep_config_data)
    path = tmp_path / "sweep.json"

    dump_config(spec, path)

    assert load_sweep(path) == spec
