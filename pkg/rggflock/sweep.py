"""Phase sweep over (alpha, v') with seeded trial fan-out, persistence and plots."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import matplotlib
from matplotlib.figure import Figure

from . import __version__
from .config import SweepSpec
from .const import (
    DEMARCATION_LEVEL,
    MONOTONE_NOISE,
    SWEEP_CSV,
    SWEEP_JSON,
    SWEEP_SVG,
)
from .dynamics import simulate
from .errors import ConfigError
from .trials import run_trials_capturing

_LOGGER = logging.getLogger(__name__)

CSV_FIELDS = [
    "alpha_index",
    "vprime_index",
    "alpha",
    "vprime",
    "trials",
    "flock_count",
    "frequency",
    "mean_T_flock",
    "failures",
]


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of the trials of one (alpha, v') cell."""

    alpha_index: int
    vprime_index: int
    alpha: float
    vprime: float
    trials: int
    flock_count: int
    mean_T_flock: float | None
    failures: int = 0

    @property
    def frequency(self) -> float:
        return self.flock_count / self.trials if self.trials else 0.0

    def as_row(self) -> dict[str, str]:
        return {
            "alpha_index": str(self.alpha_index),
            "vprime_index": str(self.vprime_index),
            "alpha": repr(self.alpha),
            "vprime": repr(self.vprime),
            "trials": str(self.trials),
            "flock_count": str(self.flock_count),
            "frequency": repr(self.frequency),
            "mean_T_flock": (
                "" if self.mean_T_flock is None else repr(self.mean_T_flock)
            ),
            "failures": str(self.failures),
        }

    @classmethod
    def from_row(cls, row: dict[str, str]) -> CellResult:
        mean = row["mean_T_flock"]
        return cls(
            alpha_index=int(row["alpha_index"]),
            vprime_index=int(row["vprime_index"]),
            alpha=float(row["alpha"]),
            vprime=float(row["vprime"]),
            trials=int(row["trials"]),
            flock_count=int(row["flock_count"]),
            mean_T_flock=float(mean) if mean else None,
            failures=int(row["failures"]),
        )


class DemarcationPoint(NamedTuple):
    alpha: float
    vprime: float
    bracket: tuple[float, float]


@dataclass(frozen=True)
class SweepResult:
    """Flocking frequencies on the (alpha, v') grid plus run metadata."""

    n: int
    d: int
    family: str
    seed: int
    version: str
    alphas: tuple[float, ...]
    vprimes: tuple[float, ...]
    cells: tuple[CellResult, ...] = field(default_factory=tuple)

    def cell(self, alpha_index: int, vprime_index: int) -> CellResult:
        return self.cells[alpha_index * len(self.vprimes) + vprime_index]

    def frequency_grid(self) -> list[list[float]]:
        """Frequencies indexed [alpha][v']."""
        return [
            [self.cell(a, v).frequency for v in range(len(self.vprimes))]
            for a in range(len(self.alphas))
        ]

    def metadata(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "family": self.family,
            "seed": self.seed,
            "version": self.version,
            "alphas": list(self.alphas),
            "vprimes": list(self.vprimes),
        }


def run_sweep(spec: SweepSpec, *, threads: int = 1) -> SweepResult:
    """Simulate every (alpha, v') cell with independent split seeds.

    Trial k of cell (i, j) uses the seed key (seed, i, j, k), so changing the
    trial count never perturbs the other trials. A failing trial is counted
    as a failure of its cell and the sweep continues.
    """
    keys = [
        (ai, vi, k)
        for ai in range(len(spec.alphas))
        for vi in range(len(spec.vprimes))
        for k in range(spec.trials)
    ]
    configs = {
        (ai, vi): spec.cell_config(alpha, vprime)
        for ai, alpha in enumerate(spec.alphas)
        for vi, vprime in enumerate(spec.vprimes)
    }
    log = _LOGGER.getChild(f"sweep-{spec.seed}")
    log.info(
        "Sweeping %d alphas x %d vprimes x %d trials on %d threads",
        len(spec.alphas),
        len(spec.vprimes),
        spec.trials,
        threads,
    )

    def trial(key: tuple[int, int, int]) -> tuple[bool, int | None]:
        ai, vi, k = key
        report = simulate(configs[ai, vi], seed=(spec.seed, ai, vi, k))
        return report.flocked, report.T_flock

    outcomes = run_trials_capturing(trial, keys, threads=threads)
    cells = []
    for ai, vi in configs:
        results = [outcomes[ai, vi, k] for k in range(spec.trials)]
        done = [value for value in results if not isinstance(value, BaseException)]
        failures = len(results) - len(done)
        if failures:
            log.warning("Cell (%d, %d) had %d failed trials", ai, vi, failures)
        times = [t for flocked, t in done if flocked and t is not None]
        cells.append(
            CellResult(
                alpha_index=ai,
                vprime_index=vi,
                alpha=spec.alphas[ai],
                vprime=spec.vprimes[vi],
                trials=len(done),
                flock_count=sum(1 for flocked, _ in done if flocked),
                mean_T_flock=sum(times) / len(times) if times else None,
                failures=failures,
            )
        )
    return SweepResult(
        n=spec.base.n,
        d=spec.base.d,
        family=str(spec.base.kernel.family),
        seed=spec.seed,
        version=__version__,
        alphas=spec.alphas,
        vprimes=spec.vprimes,
        cells=tuple(cells),
    )


def demarcation(
    result: SweepResult, level: float = DEMARCATION_LEVEL
) -> list[DemarcationPoint | None]:
    """Per-alpha crossing of the frequency ``level``, interpolated in log v'.

    The first adjacent pair with frequency >= level then < level is used;
    columns without such a pair give None.
    """
    points: list[DemarcationPoint | None] = []
    for alpha, row in zip(result.alphas, result.frequency_grid()):
        point = None
        for vi in range(len(row) - 1):
            upper, lower = row[vi], row[vi + 1]
            if upper >= level > lower:
                v_a, v_b = result.vprimes[vi], result.vprimes[vi + 1]
                weight = (upper - level) / (upper - lower)
                log_v = math.log(v_a) + weight * (math.log(v_b) - math.log(v_a))
                point = DemarcationPoint(alpha, math.exp(log_v), (v_a, v_b))
                break
        points.append(point)
    return points


def column_is_monotone(result: SweepResult, alpha_index: int) -> bool:
    """No increase larger than the noise allowance between adjacent v' cells."""
    row = result.frequency_grid()[alpha_index]
    return all(b - a <= MONOTONE_NOISE for a, b in zip(row, row[1:]))


def persist_result(result: SweepResult, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the cell table as CSV and the metadata as JSON."""
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = directory / SWEEP_CSV, directory / SWEEP_JSON
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for cell in result.cells:
            writer.writerow(cell.as_row())
    metadata = result.metadata()
    metadata["demarcation"] = [
        None if point is None else point._asdict() for point in demarcation(result)
    ]
    json_path.write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _LOGGER.info("Wrote sweep results to %s", directory)
    return csv_path, json_path


def load_sweep_result(out_dir: str | Path) -> SweepResult:
    """Read back a persisted sweep."""
    directory = Path(out_dir)
    try:
        metadata = json.loads((directory / SWEEP_JSON).read_text(encoding="utf-8"))
        with (directory / SWEEP_CSV).open(encoding="utf-8", newline="") as handle:
            cells = tuple(CellResult.from_row(row) for row in csv.DictReader(handle))
    except (OSError, ValueError, KeyError) as err:
        message = f"cannot read sweep result: {err}"
        raise ConfigError(message, path=str(directory)) from err
    return SweepResult(
        n=metadata["n"],
        d=metadata["d"],
        family=metadata["family"],
        seed=metadata["seed"],
        version=metadata["version"],
        alphas=tuple(metadata["alphas"]),
        vprimes=tuple(metadata["vprimes"]),
        cells=cells,
    )


def emit_plot(result: SweepResult, path: str | Path) -> Path:
    """Heat map of the flocking frequency with the estimated demarcation line.

    The SVG is self-contained and reproducible: no timestamp and a fixed id
    salt.
    """
    matplotlib.rcParams["svg.hashsalt"] = "rggflock"
    matplotlib.rcParams["svg.fonttype"] = "path"
    figure = Figure(figsize=(6.0, 4.5))
    axes = figure.add_subplot()
    grid = [list(column) for column in zip(*result.frequency_grid())]
    mesh = axes.pcolormesh(
        list(result.alphas),
        list(result.vprimes),
        grid,
        shading="nearest",
        cmap="viridis",
        vmin=0.0,
        vmax=1.0,
    )
    points = [point for point in demarcation(result) if point is not None]
    if points:
        axes.plot(
            [point.alpha for point in points],
            [point.vprime for point in points],
            color="white",
            marker="o",
            linewidth=1.5,
            label="frequency 0.5",
        )
        axes.legend(loc="upper left")
    axes.set_yscale("log")
    axes.set_xlabel("alpha")
    axes.set_ylabel("v'")
    axes.set_title(f"Flocking frequency, n={result.n}, d={result.d}")
    figure.colorbar(mesh, ax=axes, label="frequency")
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(target, format="svg", metadata={"Date": None})
    return target


def default_plot_path(out_dir: str | Path) -> Path:
    return Path(out_dir) / SWEEP_SVG
