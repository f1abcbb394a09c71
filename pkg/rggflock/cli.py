"""Command line interface: ``rggflock <subcommand>``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .conditions import (
    check_corollary1,
    check_corollary3,
    check_theorem1,
    check_theorem2,
    estimate_v_threshold,
)
from .config import KernelSpec, RadiusSpec, SimConfig, load_config, load_sweep
from .const import (
    CONDITIONS_FILE,
    CONF_ALPHA,
    CONF_BETA,
    CONF_RADIUS,
    CONNECTIVITY_FILE,
    KBAR_FILE,
    KBAR_SWEEP_FILE,
    REPORT_FILE,
    SERIES_FILE,
    SPECTRAL_FILE,
    SWEEP_SVG,
    TRAJECTORY_FILE,
    VTHRESHOLD_CSV,
    VTHRESHOLD_JSON,
)
from .dynamics import Trajectory, WeightMatrix, simulate
from .errors import (
    EXIT_SUCCESS,
    DegenerateKernel,
    FlockError,
    exit_code_for,
    get_error_message,
)
from .geometry import connectivity_probability
from .kernel import Kernel
from .kernels import KernelFamily
from .ldp import proposition1_checks, solve_kbar
from .spectral import spectral_report, spectral_rows
from .sweep import emit_plot, persist_result, run_sweep
from .trials import run_trials
from .velocities import VelocityMode

_LOGGER = logging.getLogger(__name__)

FORMAT_CSV = "csv"
FORMAT_JSON = "json"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, rows: Sequence[dict[str, Any]], fmt: str) -> Path:
    """Write rows as CSV (repr-exact floats) or as a JSON list."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == FORMAT_JSON:
        path = path.with_suffix(".json")
        path.write_text(json.dumps(list(rows), indent=2) + "\n", encoding="utf-8")
        return path
    path = path.with_suffix(".csv")
    fields = list(rows[0]) if rows else []
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in fields])
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_sim(args: argparse.Namespace) -> SimConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _kernel_from_args(args: argparse.Namespace, n: int) -> tuple[Kernel, float]:
    if args.radius is not None:
        radius_spec = RadiusSpec(CONF_RADIUS, args.radius)
    elif args.beta is not None:
        radius_spec = RadiusSpec(CONF_BETA, args.beta)
    else:
        radius_spec = RadiusSpec(CONF_ALPHA, args.alpha)
    samples = tuple(args.samples) if args.samples else None
    spec = KernelSpec(
        family=KernelFamily(args.family),
        amplitude=args.amplitude,
        gamma=args.gamma,
        cprime=args.cprime,
        delta=args.delta,
        samples=samples,
    )
    alpha = radius_spec.alpha(n, args.d)
    return spec.build(n, args.d, radius_spec.resolve(n, args.d), alpha), alpha


def _trajectory_rows(trajectory: Trajectory) -> list[dict[str, Any]]:
    rows = []
    for state in trajectory:
        for agent in range(state.n):
            row: dict[str, Any] = {"t": state.t, "agent": agent}
            row.update({f"x{k}": float(state.X[agent, k]) for k in range(state.d)})
            row.update({f"v{k}": float(state.V[agent, k]) for k in range(state.d)})
            rows.append(row)
    return rows


def cmd_simulate(args: argparse.Namespace) -> None:
    config = _load_sim(args)
    out = Path(args.out_dir)
    keys = [(config.seed,)] if config.trials == 1 else [
        (config.seed, k) for k in range(config.trials)
    ]

    def trial(key: tuple[int, ...]) -> Any:
        record = args.trajectory and key == keys[0]
        return simulate(config, seed=key, record_trajectory=record)

    reports = run_trials(trial, keys, threads=args.threads)
    first = reports[0]
    out.mkdir(parents=True, exist_ok=True)
    with (out / SERIES_FILE).open("w", encoding="utf-8") as handle:
        for record in first.series_records():
            handle.write(json.dumps(record) + "\n")
    summary: dict[str, Any] = {"config": config.to_dict(), **first.to_dict()}
    if len(reports) > 1:
        flocked = sum(1 for report in reports if report.flocked)
        summary["trials"] = {
            "count": len(reports),
            "flocked": flocked,
            "frequency": flocked / len(reports),
            "runs": [report.to_dict() for report in reports],
        }
    write_json(out / REPORT_FILE, summary)
    if first.trajectory is not None:
        write_table(out / TRAJECTORY_FILE, _trajectory_rows(first.trajectory), "csv")
    _LOGGER.info("Flocked: %s (T_flock=%s)", first.flocked, first.T_flock)


def cmd_sweep(args: argparse.Namespace) -> None:
    spec = load_sweep(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    result = run_sweep(spec, threads=args.threads)
    persist_result(result, args.out_dir)
    if args.plot:
        emit_plot(result, Path(args.out_dir) / SWEEP_SVG)


def cmd_rgg_connectivity(args: argparse.Namespace) -> None:
    seed = args.seed if args.seed is not None else 0
    settings: list[tuple[float | None, float | None]]
    if args.radius is not None:
        settings = [(None, radius) for radius in args.radius]
    else:
        settings = [(alpha, None) for alpha in args.alpha]
    rows = [
        connectivity_probability(
            args.n,
            args.d,
            alpha,
            args.trials,
            seed,
            radius=radius,
            threads=args.threads,
        ).as_row()
        for alpha, radius in settings
    ]
    write_table(Path(args.out_dir) / CONNECTIVITY_FILE, rows, args.format)


def cmd_kbar(args: argparse.Namespace) -> None:
    kernel, alpha = _kernel_from_args(args, args.n)
    if args.delta:
        kernel = kernel.shifted(args.delta)
    solution = solve_kbar(kernel, args.n, args.d, allow_fallback=args.allow_fallback)
    row = {
        "alpha": alpha,
        "radius": kernel.radius,
        "f0": kernel.f0,
        "delta": args.delta,
    }
    row.update(solution.to_dict())
    residuals = row.pop("residuals")
    row["tilted_residual"] = residuals["tilted_mean"]
    row["level_residual"] = residuals["level"]
    write_table(Path(args.out_dir) / KBAR_FILE, [row], args.format)


def cmd_kbar_sweep(args: argparse.Namespace) -> None:
    def kernel_for_n(n: int) -> Kernel:
        return _kernel_from_args(args, n)[0]

    report = proposition1_checks(kernel_for_n, args.d, args.n_grid, args.deltas)
    rows = []
    for row in report.to_dict()["rows"]:
        slopes = row.pop("shift_slopes")
        row.update({f"slope_{delta}": value for delta, value in slopes.items()})
        rows.append(row)
    write_table(Path(args.out_dir) / KBAR_SWEEP_FILE, rows, args.format)
    _LOGGER.info("kbar degree-ratio band factor %.4f", report.band_factor)


def _read_matrix(path: str) -> WeightMatrix:
    matrix = np.loadtxt(path, delimiter=",", ndmin=2)
    return WeightMatrix.from_dense(matrix)


def cmd_spectral(args: argparse.Namespace) -> None:
    if args.matrix:
        rows = [spectral_report(_read_matrix(args.matrix)).as_row(0)]
    else:
        config = _load_sim(args)
        report = simulate(config, record_trajectory=True)
        assert report.trajectory is not None
        rows = spectral_rows(report.trajectory, threads=args.threads)
    write_table(Path(args.out_dir) / SPECTRAL_FILE, rows, args.format)


def cmd_conditions(args: argparse.Namespace) -> None:
    config = _load_sim(args)
    kernel = config.build_kernel()
    state = config.initial_state()
    n, d, alpha = config.n, config.d, config.alpha
    delta = args.delta if args.delta is not None else config.kernel.delta
    output: dict[str, Any] = {"config": config.to_dict()}
    if delta > 0:
        output["theorem1"] = check_theorem1(
            kernel, n, d, alpha, delta, args.eps, state.V, args.c
        ).to_dict()
    else:
        output["theorem1"] = None
        _LOGGER.warning("No shift delta given, skipping the shifted condition")
    try:
        output["corollary1"] = check_corollary1(
            kernel, n, d, alpha, args.eps, state.V, args.c, args.c1
        ).to_dict()
    except DegenerateKernel as err:
        output["corollary1"] = {"applicable": False, "notes": [str(err)]}
    output["corollary3"] = check_corollary3(kernel, n, d, alpha, args.eps).to_dict()
    output["theorem2"] = check_theorem2(kernel, n, d, alpha).to_dict()
    write_json(Path(args.out_dir) / CONDITIONS_FILE, output)


def cmd_vthreshold(args: argparse.Namespace) -> None:
    config = _load_sim(args)
    result = estimate_v_threshold(
        config,
        args.v_lo,
        args.v_hi,
        args.trials,
        args.mode,
        iterations=args.iterations,
        threads=args.threads,
    )
    out = Path(args.out_dir)
    write_table(out / VTHRESHOLD_CSV, result.curve_rows(), FORMAT_CSV)
    write_json(out / VTHRESHOLD_JSON, result.to_dict())


def _add_kernel_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--family", required=True, choices=[str(f) for f in KernelFamily]
    )
    parser.add_argument("--d", type=int, default=2)
    radius = parser.add_mutually_exclusive_group(required=True)
    radius.add_argument("--alpha", type=float)
    radius.add_argument("--radius", type=float)
    radius.add_argument("--beta", type=float)
    parser.add_argument(
        "--amplitude",
        type=lambda value: value if value == "auto" else float(value),
        default="auto",
        help="f(0), or 'auto' for the family's radius-law amplitude",
    )
    parser.add_argument("--gamma", type=float, default=1.0)
    parser.add_argument("--cprime", type=float, default=1.0)
    parser.add_argument("--delta", type=float, default=0.0)
    parser.add_argument("--samples", type=float, nargs="+")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggflock",
        description="Flocking on random geometric graphs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument(
        "--format", choices=[FORMAT_CSV, FORMAT_JSON], default=FORMAT_CSV
    )
    parser.add_argument("--log-level", default="WARNING")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate_parser = commands.add_parser(
        "simulate", help="run one configured experiment"
    )
    simulate_parser.add_argument("config")
    simulate_parser.add_argument("--trajectory", action="store_true")
    simulate_parser.set_defaults(handler=cmd_simulate)

    sweep_parser = commands.add_parser("sweep", help="(alpha, v') phase sweep")
    sweep_parser.add_argument("config")
    sweep_parser.add_argument("--no-plot", dest="plot", action="store_false")
    sweep_parser.set_defaults(handler=cmd_sweep)

    rgg_parser = commands.add_parser("rgg-connectivity", help="connectivity frequency")
    rgg_parser.add_argument("--n", type=int, required=True)
    rgg_parser.add_argument("--d", type=int, default=2)
    scale = rgg_parser.add_mutually_exclusive_group(required=True)
    scale.add_argument("--alpha", type=float, nargs="+")
    scale.add_argument("--radius", type=float, nargs="+")
    rgg_parser.add_argument("--trials", type=int, default=200)
    rgg_parser.set_defaults(handler=cmd_rgg_connectivity)

    kbar_parser = commands.add_parser("kbar", help="solve the kbar level equation")
    kbar_parser.add_argument("--n", type=int, required=True)
    kbar_parser.add_argument("--allow-fallback", action="store_true")
    _add_kernel_arguments(kbar_parser)
    kbar_parser.set_defaults(handler=cmd_kbar)

    grid_parser = commands.add_parser("kbar-sweep", help="kbar scaling along n")
    grid_parser.add_argument("--n-grid", type=int, nargs="+", required=True)
    grid_parser.add_argument(
        "--deltas", type=float, nargs="+", default=[0.05, 0.1, 0.2]
    )
    _add_kernel_arguments(grid_parser)
    grid_parser.set_defaults(handler=cmd_kbar_sweep)

    spectral_parser = commands.add_parser("spectral", help="spectrum of P(t)")
    source = spectral_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", dest="config")
    source.add_argument("--matrix", help="dense P as comma separated rows")
    spectral_parser.set_defaults(handler=cmd_spectral)

    conditions_parser = commands.add_parser("conditions", help="evaluate hypotheses")
    conditions_parser.add_argument("config")
    conditions_parser.add_argument("--eps", type=float, default=0.1)
    conditions_parser.add_argument("--delta", type=float, default=None)
    conditions_parser.add_argument("--c", type=float, default=1.0)
    conditions_parser.add_argument("--c1", type=float, default=1.0)
    conditions_parser.set_defaults(handler=cmd_conditions)

    threshold_parser = commands.add_parser("vthreshold", help="bisect the speed v")
    threshold_parser.add_argument("config")
    threshold_parser.add_argument("--v-lo", type=float, required=True)
    threshold_parser.add_argument("--v-hi", type=float, required=True)
    threshold_parser.add_argument("--trials", type=int, default=20)
    threshold_parser.add_argument(
        "--mode",
        choices=[str(m) for m in VelocityMode if m is not VelocityMode.EXPLICIT],
        default=str(VelocityMode.HALF_SPLIT),
    )
    threshold_parser.add_argument("--iterations", type=int, default=8)
    threshold_parser.set_defaults(handler=cmd_vthreshold)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handler: Callable[[argparse.Namespace], None] = args.handler
    try:
        handler(args)
    except FlockError as err:
        _LOGGER.error("%s: %s", get_error_message(err.code), err)
        return exit_code_for(err)
    return EXIT_SUCCESS
