"""Tests for the rggflock command line."""

import csv
import json

import pytest

from rggflock import __version__
from rggflock.cli import main
from rggflock.errors import EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_SUCCESS


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture
def small_radius_config(tmp_path):
    """A config whose kernel support stays below 1/2, so kbar can be solved."""
    data = {
        "n": 2000,
        "d": 2,
        "alpha": 2.0,
        "kernel": {"family": "indicator", "amplitude": 0.005},
        "velocity": {"mode": "halfsplit", "v0": 1e-6},
        "seed": 2,
    }
    path = tmp_path / "small.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_version(capsys):
    """Test that --version prints the package version."""
    with pytest.raises(SystemExit) as err:
        main(["--version"])

    assert err.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_simulate(tmp_path, sim_config_file):
    """Test the report, the step series and the trajectory table."""
    out = tmp_path / "out"
    args = ["simulate", str(sim_config_file), "--trajectory"]

    # Act
    code = main(["--out-dir", str(out), *args])

    # Assert
    assert code == EXIT_SUCCESS
    report = json.loads((out / "simulate_report.json").read_text(encoding="utf-8"))
    assert report["flocked"] is True
    assert report["config"]["seed"] == 11
    series = (out / "simulate_series.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(series) == report["steps"] + 1
    assert json.loads(series[0])["t"] == 0
    rows = _read_csv(out / "trajectory.csv")
    assert list(rows[0]) == ["t", "agent", "x0", "x1", "v0", "v1"]
    assert len(rows) == 40 * (report["steps"] + 1)


def test_simulate_seed_override(tmp_path, sim_config_file):
    """Test that the global --seed replaces the configured seed."""
    code = main(
        ["--seed", "3", "--out-dir", str(tmp_path), "simulate", str(sim_config_file)]
    )

    report = json.loads((tmp_path / "simulate_report.json").read_text("utf-8"))
    assert code == EXIT_SUCCESS
    assert report["config"]["seed"] == 3
    assert report["seed"] == [3]
    assert not (tmp_path / "trajectory.csv").exists()


def test_config_error_exit_code(tmp_path, sim_config_data):
    """Test that an invalid config exits with code 2."""
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**sim_config_data, "n": 1}), encoding="utf-8")

    assert main(["--out-dir", str(tmp_path), "simulate", str(path)]) == EXIT_CONFIG


def test_sweep(tmp_path, sweep_config_data):
    """Test that a sweep writes the table, the metadata and the heat map."""
    config = tmp_path / "sweep_config.json"
    config.write_text(json.dumps(sweep_config_data), encoding="utf-8")
    out = tmp_path / "out"

    code = main(["--out-dir", str(out), "sweep", str(config)])

    assert code == EXIT_SUCCESS
    assert len(_read_csv(out / "sweep.csv")) == 4
    assert json.loads((out / "sweep.json").read_text("utf-8"))["seed"] == 5
    assert (out / "sweep.svg").exists()


def test_sweep_without_plot(tmp_path, sweep_config_data):
    """Test --no-plot."""
    config = tmp_path / "sweep_config.json"
    config.write_text(json.dumps(sweep_config_data), encoding="utf-8")

    main(["--out-dir", str(tmp_path), "sweep", str(config), "--no-plot"])

    assert (tmp_path / "sweep.csv").exists()
    assert not (tmp_path / "sweep.svg").exists()


def test_rgg_connectivity(tmp_path):
    """Test one row per alpha, in CSV and in JSON."""
    args = "rgg-connectivity --n 50 --alpha 0.5 3 --trials 5".split()

    assert main(["--out-dir", str(tmp_path), "--seed", "1", *args]) == EXIT_SUCCESS
    assert main(["--out-dir", str(tmp_path), "--format", "json", *args]) == 0

    rows = _read_csv(tmp_path / "rgg_connectivity.csv")
    assert [float(row["alpha"]) for row in rows] == [0.5, 3.0]
    assert all(row["trials"] == "5" for row in rows)
    data = json.loads((tmp_path / "rgg_connectivity.json").read_text("utf-8"))
    assert [row["alpha"] for row in data] == [0.5, 3.0]
    assert all(0.0 <= row["frequency"] <= 1.0 for row in data)


def test_rgg_connectivity_by_radius(tmp_path):
    """Test explicit radii and that --radius excludes --alpha."""
    args = "rgg-connectivity --n 50 --radius 0.01 2.0 --trials 4".split()

    code = main(["--out-dir", str(tmp_path), "--format", "json", *args])

    assert code == EXIT_SUCCESS
    data = json.loads((tmp_path / "rgg_connectivity.json").read_text("utf-8"))
    assert [row["radius"] for row in data] == [0.01, 2.0]
    assert [row["frequency"] for row in data] == [0.0, 1.0]
    with pytest.raises(SystemExit) as err:
        main([*args, "--alpha", "1.0"])
    assert err.value.code == 2


def test_kbar_without_root(tmp_path):
    """Test that a level equation without a root exits with code 3."""
    args = "kbar --n 3 --family indicator --radius 0.45 --amplitude 1.0".split()

    assert main(["--out-dir", str(tmp_path), *args]) == EXIT_CONVERGENCE
    assert not (tmp_path / "kbar.csv").exists()


def test_kbar(tmp_path):
    """Test the kbar row with its residual columns."""
    args = "kbar --n 2000 --family indicator --alpha 2".split()

    code = main(["--out-dir", str(tmp_path), "--format", "json", *args])

    assert code == EXIT_SUCCESS
    (row,) = json.loads((tmp_path / "kbar.json").read_text("utf-8"))
    assert row["alpha"] == 2.0
    assert row["kbar"] > 0.0
    assert row["degenerate"] is False
    assert row["level_residual"] <= 1e-8
    assert "residuals" not in row


def test_kbar_wide_support(tmp_path):
    """Test that a support beyond 1/2 exits with code 3 unless fallback is allowed."""
    args = "kbar --n 100 --family triangular --radius 0.6 --amplitude 0.01".split()

    assert main(["--out-dir", str(tmp_path), *args]) == EXIT_CONVERGENCE
    assert main(["--out-dir", str(tmp_path), *args, "--allow-fallback"]) == 0
    (row,) = _read_csv(tmp_path / "kbar.csv")
    assert row["fallback"] == "true"


def test_kbar_sweep(tmp_path):
    """Test one row per n with a slope column per shift."""
    args = "kbar-sweep --n-grid 1000 10000 --family triangular --alpha 1".split()
    args += ["--deltas", "0.1"]

    assert main(["--out-dir", str(tmp_path), *args]) == EXIT_SUCCESS

    rows = _read_csv(tmp_path / "kbar_sweep.csv")
    assert len(rows) == 2
    assert "slope_0.1" in rows[0]


def test_spectral_matrix(tmp_path):
    """Test the spectrum of a matrix given as CSV."""
    matrix = tmp_path / "path.csv"
    matrix.write_text("0.75,0.25,0\n0.25,0.5,0.25\n0,0.25,0.75\n", encoding="utf-8")

    code = main(["--out-dir", str(tmp_path), "spectral", "--matrix", str(matrix)])

    assert code == EXIT_SUCCESS
    (row,) = _read_csv(tmp_path / "spectral.csv")
    assert float(row["lambda2"]) == pytest.approx(0.75)
    assert float(row["lambda_bar"]) == pytest.approx(0.75)
    assert float(row["phi_exact"]) == pytest.approx(0.25)


def test_spectral_config(tmp_path, sim_config_file):
    """Test one spectral row per applied step of a configured run."""
    out = tmp_path / "out"

    code = main(["--out-dir", str(out), "spectral", "--config", str(sim_config_file)])

    assert code == EXIT_SUCCESS
    rows = _read_csv(out / "spectral.csv")
    assert rows
    assert [int(row["t"]) for row in rows] == list(range(len(rows)))
    assert rows[0]["phi_exact"] == ""


def test_conditions(tmp_path, small_radius_config):
    """Test that every hypothesis check is written."""
    args = ["conditions", str(small_radius_config), "--delta", "0.1"]

    code = main(["--out-dir", str(tmp_path), *args])

    assert code == EXIT_SUCCESS
    output = json.loads((tmp_path / "conditions.json").read_text("utf-8"))
    assert output["theorem1"]["delta"] == 0.1
    assert output["corollary1"]["condition"] == "corollary1"
    assert output["corollary3"]["applicable"] is True
    assert output["theorem2"]["no_flocking_for_any_v"] is False


def test_conditions_without_shift(tmp_path, small_radius_config):
    """Test that the shifted condition is skipped when no delta is set."""
    main(["--out-dir", str(tmp_path), "conditions", str(small_radius_config)])

    output = json.loads((tmp_path / "conditions.json").read_text("utf-8"))
    assert output["theorem1"] is None
    assert output["corollary1"] is not None


def test_conditions_wide_support(tmp_path, sim_config_file):
    """Test that a kernel support beyond 1/2 exits with code 3."""
    code = main(["--out-dir", str(tmp_path), "conditions", str(sim_config_file)])

    assert code == EXIT_CONVERGENCE


def test_vthreshold(tmp_path, sim_config_file):
    """Test the frequency curve and the collapsed interval."""
    args = ["vthreshold", str(sim_config_file), *"--v-lo 100 --v-hi 1000".split()]
    args += ["--trials", "2"]

    assert main(["--out-dir", str(tmp_path), *args]) == EXIT_SUCCESS

    rows = _read_csv(tmp_path / "vthreshold.csv")
    assert [float(row["v"]) for row in rows] == [100.0, 1000.0]
    result = json.loads((tmp_path / "vthreshold.json").read_text("utf-8"))
    assert result["interval"] == [100.0, 100.0]
    assert result["mode"] == "halfsplit"
