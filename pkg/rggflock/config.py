"""Versioned JSON experiment configuration validated with voluptuous."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import voluptuous as vol

from .const import (
    AMPLITUDE_AUTO,
    CONF_ALPHA,
    CONF_ALPHAS,
    CONF_AMPLITUDE,
    CONF_BASE,
    CONF_BETA,
    CONF_CPRIME,
    CONF_D,
    CONF_DELTA,
    CONF_DIAGNOSTICS,
    CONF_DRIFT,
    CONF_EARLY_STOP,
    CONF_FAMILY,
    CONF_FLOCK_TOL,
    CONF_GAMMA,
    CONF_KERNEL,
    CONF_KIND,
    CONF_LOG_EVERY,
    CONF_MATRIX,
    CONF_MODE,
    CONF_N,
    CONF_RADIUS,
    CONF_SAMPLES,
    CONF_SCHEMA_VERSION,
    CONF_SEED,
    CONF_SPECTRAL,
    CONF_T_MAX,
    CONF_TRIALS,
    CONF_V0,
    CONF_VELOCITY,
    CONF_VPRIME,
    CONF_VPRIMES,
    DEFAULT_ALPHA,
    DEFAULT_ALPHAS,
    DEFAULT_D,
    DEFAULT_N,
    DEFAULT_TRIALS,
    DEFAULT_VPRIME_COUNT,
    DEFAULT_VPRIME_RANGE,
    FLOCK_TOL,
    SCHEMA_VERSION,
    T_MAX,
)
from .dynamics import Diagnostics, DriftMode, SwarmState
from .errors import ConfigError, DomainError
from .geometry import (
    alpha_from_radius,
    radius_from_alpha,
    radius_from_beta,
    sample_positions,
)
from .kernel import Kernel, resolve_family
from .kernels import KernelFamily
from .rng import SeedKey
from .velocities import (
    VelocityMode,
    adversarial_velocities,
    find_isolated_cluster,
    halfsplit_scale,
)

_LOGGER = logging.getLogger(__name__)

KIND_SIMULATE = "simulate"
KIND_SWEEP = "sweep"
DEFAULT_SWEEP_VELOCITY = {CONF_MODE: str(VelocityMode.HALF_SPLIT), CONF_VPRIME: 1.0}
DEFAULT_SWEEP_KERNEL = {CONF_FAMILY: str(KernelFamily.TRIANGULAR)}

POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
NONNEGATIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0))

KERNEL_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_FAMILY): vol.In([str(family) for family in KernelFamily]),
        vol.Optional(CONF_AMPLITUDE, default=AMPLITUDE_AUTO): vol.Any(
            AMPLITUDE_AUTO, POSITIVE
        ),
        vol.Optional(CONF_GAMMA, default=1.0): POSITIVE,
        vol.Optional(CONF_CPRIME, default=1.0): POSITIVE,
        vol.Optional(CONF_DELTA, default=0.0): NONNEGATIVE,
        vol.Optional(CONF_SAMPLES): [vol.Coerce(float)],
    },
    extra=vol.PREVENT_EXTRA,
)

VELOCITY_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_MODE): vol.In([str(mode) for mode in VelocityMode]),
        vol.Optional(CONF_V0): POSITIVE,
        vol.Optional(CONF_VPRIME): POSITIVE,
        vol.Optional(CONF_MATRIX): [[vol.Coerce(float)]],
    },
    extra=vol.PREVENT_EXTRA,
)

DIAGNOSTICS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SPECTRAL, default=False): bool,
        vol.Optional(CONF_DRIFT, default=str(DriftMode.AUTO)): vol.In(
            [str(mode) for mode in DriftMode]
        ),
        vol.Optional(CONF_EARLY_STOP, default=True): bool,
        vol.Optional(CONF_LOG_EVERY, default=100): vol.All(int, vol.Range(min=0)),
    },
    extra=vol.PREVENT_EXTRA,
)


def _sim_fields(sweep_base: bool) -> dict[Any, Any]:
    velocity_key = vol.Optional if sweep_base else vol.Required
    n_key: vol.Marker
    d_key: vol.Marker
    kernel_key: vol.Marker
    if sweep_base:
        n_key = vol.Optional(CONF_N, default=DEFAULT_N)
        d_key = vol.Optional(CONF_D, default=DEFAULT_D)
        kernel_key = vol.Optional(CONF_KERNEL, default=DEFAULT_SWEEP_KERNEL)
    else:
        n_key, d_key = vol.Required(CONF_N), vol.Required(CONF_D)
        kernel_key = vol.Required(CONF_KERNEL)
    return {
        vol.Optional(CONF_SCHEMA_VERSION, default=SCHEMA_VERSION): vol.In(
            [SCHEMA_VERSION]
        ),
        vol.Optional(CONF_KIND, default=KIND_SIMULATE): vol.In([KIND_SIMULATE]),
        n_key: vol.All(int, vol.Range(min=2)),
        d_key: vol.All(int, vol.Range(min=2)),
        vol.Exclusive(CONF_RADIUS, "radius"): POSITIVE,
        vol.Exclusive(CONF_ALPHA, "radius"): POSITIVE,
        vol.Exclusive(CONF_BETA, "radius"): vol.Coerce(float),
        kernel_key: KERNEL_SCHEMA,
        velocity_key(CONF_VELOCITY): VELOCITY_SCHEMA,
        vol.Optional(CONF_T_MAX, default=T_MAX): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_FLOCK_TOL, default=FLOCK_TOL): POSITIVE,
        vol.Optional(CONF_SEED, default=0): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_TRIALS, default=1): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_DIAGNOSTICS, default={}): DIAGNOSTICS_SCHEMA,
    }


SIM_SCHEMA = vol.Schema(_sim_fields(sweep_base=False), extra=vol.PREVENT_EXTRA)
SWEEP_BASE_SCHEMA = vol.Schema(
    _sim_fields(sweep_base=True), extra=vol.PREVENT_EXTRA
)

VPRIME_RANGE_SCHEMA = vol.Schema(
    {
        vol.Required("min"): POSITIVE,
        vol.Required("max"): POSITIVE,
        vol.Optional("count", default=DEFAULT_VPRIME_COUNT): vol.All(
            int, vol.Range(min=2)
        ),
    },
    extra=vol.PREVENT_EXTRA,
)

SWEEP_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SCHEMA_VERSION, default=SCHEMA_VERSION): vol.In(
            [SCHEMA_VERSION]
        ),
        vol.Required(CONF_KIND): vol.In([KIND_SWEEP]),
        vol.Required(CONF_BASE): dict,
        vol.Optional(CONF_ALPHAS, default=list(DEFAULT_ALPHAS)): vol.All(
            [POSITIVE], vol.Length(min=1)
        ),
        vol.Optional(CONF_VPRIMES, default={}): vol.Any(
            vol.All([POSITIVE], vol.Length(min=1)), dict
        ),
        vol.Optional(CONF_TRIALS, default=DEFAULT_TRIALS): vol.All(
            int, vol.Range(min=1)
        ),
        vol.Optional(CONF_SEED, default=0): vol.All(int, vol.Range(min=0)),
    },
    extra=vol.PREVENT_EXTRA,
)


def _line_of(text: str | None, path: Sequence[Any]) -> int | None:
    """Best-effort 1-based line of the last key of ``path`` in the JSON text."""
    if not text or not path:
        return None
    position = 0
    for key in path:
        if not isinstance(key, str):
            continue
        found = text.find(f'"{key}"', position)
        if found < 0:
            return None
        position = found
    return text.count("\n", 0, position) + 1


def _validate(
    schema: vol.Schema,
    data: Any,
    *,
    text: str | None = None,
    prefix: Sequence[Any] = (),
) -> dict[str, Any]:
    try:
        return schema(data)
    except vol.MultipleInvalid as err:
        error = err.errors[0]
        path = [*prefix, *error.path]
        raise ConfigError(
            error.error_message,
            path=".".join(str(part) for part in path) or None,
            line=_line_of(text, path),
        ) from err


@dataclass(frozen=True)
class RadiusSpec:
    """Interaction radius: explicit, or from alpha or beta through a radius law."""

    law: str
    value: float

    def resolve(self, n: int, d: int) -> float:
        if self.law == CONF_RADIUS:
            return self.value
        if self.law == CONF_ALPHA:
            return radius_from_alpha(n, d, self.value)
        return radius_from_beta(n, d, self.value)

    def alpha(self, n: int, d: int) -> float:
        if self.law == CONF_ALPHA:
            return self.value
        return alpha_from_radius(n, d, self.resolve(n, d))


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    amplitude: float | str = AMPLITUDE_AUTO
    gamma: float = 1.0
    cprime: float = 1.0
    delta: float = 0.0
    samples: tuple[float, ...] | None = None

    def build(self, n: int, d: int, radius: float, alpha: float) -> Kernel:
        """Kernel with the resolved amplitude (unshifted)."""
        amplitude = self.amplitude
        if amplitude == AMPLITUDE_AUTO:
            details = resolve_family(self.family)
            amplitude = details.default_amplitude(n, d, alpha, self.cprime)
        return Kernel(
            family=self.family,
            radius=radius,
            amplitude=float(amplitude),
            gamma=self.gamma,
            samples=self.samples,
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            CONF_FAMILY: str(self.family),
            CONF_AMPLITUDE: self.amplitude,
            CONF_GAMMA: self.gamma,
            CONF_CPRIME: self.cprime,
            CONF_DELTA: self.delta,
        }
        if self.samples is not None:
            data[CONF_SAMPLES] = list(self.samples)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> KernelSpec:
        family = KernelFamily(data[CONF_FAMILY])
        samples = data.get(CONF_SAMPLES)
        if family is KernelFamily.TABULATED and samples is None:
            raise ConfigError("tabulated kernels need samples", path="kernel.samples")
        if family is KernelFamily.TABULATED and data[CONF_AMPLITUDE] == AMPLITUDE_AUTO:
            raise ConfigError(
                "tabulated kernels need a numeric amplitude", path="kernel.amplitude"
            )
        amplitude = data[CONF_AMPLITUDE]
        return cls(
            family=family,
            amplitude=amplitude if amplitude == AMPLITUDE_AUTO else float(amplitude),
            gamma=float(data[CONF_GAMMA]),
            cprime=float(data[CONF_CPRIME]),
            delta=float(data[CONF_DELTA]),
            samples=tuple(float(s) for s in samples) if samples is not None else None,
        )


@dataclass(frozen=True)
class VelocitySpec:
    """Initial velocities: an explicit matrix or one of the adversarial families.

    ``halfsplit`` takes either ``v0`` directly or ``vprime``, in which case the
    speed is v' n^(-3/2) (log n)^(1/2).
    """

    mode: VelocityMode
    v0: float | None = None
    vprime: float | None = None
    matrix: tuple[tuple[float, ...], ...] | None = None

    def speed(self, n: int) -> float:
        if self.v0 is not None:
            return self.v0
        if self.vprime is not None:
            return halfsplit_scale(n, self.vprime)
        raise DomainError(f"velocity mode {self.mode} has no speed")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {CONF_MODE: str(self.mode)}
        if self.v0 is not None:
            data[CONF_V0] = self.v0
        if self.vprime is not None:
            data[CONF_VPRIME] = self.vprime
        if self.matrix is not None:
            data[CONF_MATRIX] = [list(row) for row in self.matrix]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], n: int, d: int) -> VelocitySpec:
        mode = VelocityMode(data[CONF_MODE])
        matrix = data.get(CONF_MATRIX)
        v0, vprime = data.get(CONF_V0), data.get(CONF_VPRIME)
        if mode is VelocityMode.EXPLICIT:
            if matrix is None:
                raise ConfigError("explicit velocities need a matrix", "velocity")
            if len(matrix) != n or any(len(row) != d for row in matrix):
                raise ConfigError(
                    f"velocity matrix must be {n} x {d}", path="velocity.matrix"
                )
        elif matrix is not None:
            raise ConfigError(
                f"mode {mode} does not take a matrix", path="velocity.matrix"
            )
        elif mode is VelocityMode.HALF_SPLIT:
            if (v0 is None) == (vprime is None):
                raise ConfigError(
                    "halfsplit needs exactly one of v0, vprime", path="velocity"
                )
        elif v0 is None or vprime is not None:
            raise ConfigError(f"mode {mode} needs v0 (and no vprime)", "velocity")
        return cls(
            mode=mode,
            v0=float(v0) if v0 is not None else None,
            vprime=float(vprime) if vprime is not None else None,
            matrix=(
                tuple(tuple(float(x) for x in row) for row in matrix)
                if matrix is not None
                else None
            ),
        )


def _diagnostics_from_dict(data: Mapping[str, Any]) -> Diagnostics:
    return Diagnostics(
        spectral=data[CONF_SPECTRAL],
        drift=DriftMode(data[CONF_DRIFT]),
        early_stop=data[CONF_EARLY_STOP],
        log_every=data[CONF_LOG_EVERY],
    )


def _radius_from_dict(
    data: Mapping[str, Any], default_alpha: float | None = None
) -> RadiusSpec:
    for law in (CONF_RADIUS, CONF_ALPHA, CONF_BETA):
        if law in data:
            return RadiusSpec(law=law, value=float(data[law]))
    if default_alpha is not None:
        return RadiusSpec(law=CONF_ALPHA, value=default_alpha)
    raise ConfigError("one of radius, alpha, beta is required")


@dataclass(frozen=True)
class SimConfig:
    """A single experiment: positions, kernel, initial velocities and horizon."""

    n: int
    d: int
    radius: RadiusSpec
    kernel: KernelSpec
    velocity: VelocitySpec
    t_max: int = T_MAX
    flock_tol: float = FLOCK_TOL
    seed: int = 0
    trials: int = 1
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def interaction_radius(self) -> float:
        return self.radius.resolve(self.n, self.d)

    @property
    def alpha(self) -> float:
        return self.radius.alpha(self.n, self.d)

    def build_kernel(self) -> Kernel:
        return self.kernel.build(self.n, self.d, self.interaction_radius, self.alpha)

    def with_alpha(self, alpha: float) -> SimConfig:
        return replace(self, radius=RadiusSpec(law=CONF_ALPHA, value=alpha))

    def with_velocity(self, velocity: VelocitySpec) -> SimConfig:
        return replace(self, velocity=velocity)

    def initial_state(self, seed: SeedKey | None = None) -> SwarmState:
        """Sample positions for ``seed`` and build V(0).

        Raises:
            DomainError: For ``isolated_cluster`` when the initial graph has no
                component whose split velocities certify non-flocking.
        """
        key = self.seed if seed is None else seed
        positions = sample_positions(self.n, self.d, key)
        spec = self.velocity
        if spec.mode is VelocityMode.EXPLICIT:
            assert spec.matrix is not None
            velocities = np.array(spec.matrix, dtype=float)
        elif spec.mode is VelocityMode.ISOLATED_CLUSTER:
            found = find_isolated_cluster(
                positions, self.build_kernel().support_end, spec.speed(self.n)
            )
            if found is None:
                raise DomainError("no certifiable isolated cluster in the graph")
            _, velocities = found
        else:
            velocities = adversarial_velocities(
                positions, spec.mode, spec.speed(self.n)
            )
        return SwarmState(t=0, X=positions.X, V=velocities)

    def to_dict(self) -> dict[str, Any]:
        return {
            CONF_SCHEMA_VERSION: SCHEMA_VERSION,
            CONF_KIND: KIND_SIMULATE,
            CONF_N: self.n,
            CONF_D: self.d,
            self.radius.law: self.radius.value,
            CONF_KERNEL: self.kernel.to_dict(),
            CONF_VELOCITY: self.velocity.to_dict(),
            CONF_T_MAX: self.t_max,
            CONF_FLOCK_TOL: self.flock_tol,
            CONF_SEED: self.seed,
            CONF_TRIALS: self.trials,
            CONF_DIAGNOSTICS: self.diagnostics.to_dict(),
        }

    @classmethod
    def from_dict(
        cls,
        data: Mapping[str, Any],
        *,
        text: str | None = None,
        require_velocity: bool = True,
        prefix: Sequence[Any] = (),
    ) -> SimConfig:
        """Validate a plain mapping and build the config.

        Raises:
            ConfigError: On schema violations, with the dotted key path and,
                when ``text`` is given, the line of the offending key.
        """
        schema = SIM_SCHEMA if require_velocity else SWEEP_BASE_SCHEMA
        valid = _validate(schema, data, text=text, prefix=prefix)
        n, d = valid[CONF_N], valid[CONF_D]
        velocity_data = valid.get(CONF_VELOCITY, DEFAULT_SWEEP_VELOCITY)
        try:
            config = cls(
                n=n,
                d=d,
                radius=_radius_from_dict(
                    valid, None if require_velocity else DEFAULT_ALPHA
                ),
                kernel=KernelSpec.from_dict(valid[CONF_KERNEL]),
                velocity=VelocitySpec.from_dict(velocity_data, n, d),
                t_max=valid[CONF_T_MAX],
                flock_tol=float(valid[CONF_FLOCK_TOL]),
                seed=valid[CONF_SEED],
                trials=valid[CONF_TRIALS],
                diagnostics=_diagnostics_from_dict(valid[CONF_DIAGNOSTICS]),
            )
            config.build_kernel()
        except ConfigError as err:
            path = [*prefix, *(err.path.split(".") if err.path else [])]
            raise ConfigError(
                err.message,
                path=".".join(path) or None,
                line=_line_of(text, path),
            ) from err
        return config


def _vprime_grid(value: Any) -> tuple[float, ...]:
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    spec = _validate(
        VPRIME_RANGE_SCHEMA, value or _default_vprime_range(), prefix=[CONF_VPRIMES]
    )
    grid = np.geomspace(spec["min"], spec["max"], spec["count"])
    return tuple(float(v) for v in grid)


def _default_vprime_range() -> dict[str, Any]:
    low, high = DEFAULT_VPRIME_RANGE
    return {"min": low, "max": high, "count": DEFAULT_VPRIME_COUNT}


@dataclass(frozen=True)
class SweepSpec:
    """Phase sweep over an alpha grid and a v' grid of half-split runs."""

    base: SimConfig
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    vprimes: tuple[float, ...] = field(default_factory=lambda: _vprime_grid({}))
    trials: int = DEFAULT_TRIALS
    seed: int = 0

    def cell_config(self, alpha: float, vprime: float) -> SimConfig:
        velocity = VelocitySpec(mode=VelocityMode.HALF_SPLIT, vprime=vprime)
        return self.base.with_alpha(alpha).with_velocity(velocity)

    def to_dict(self) -> dict[str, Any]:
        return {
            CONF_SCHEMA_VERSION: SCHEMA_VERSION,
            CONF_KIND: KIND_SWEEP,
            CONF_BASE: self.base.to_dict(),
            CONF_ALPHAS: list(self.alphas),
            CONF_VPRIMES: list(self.vprimes),
            CONF_TRIALS: self.trials,
            CONF_SEED: self.seed,
        }

    @classmethod
    def from_dict(
        cls, data: Mapping[str, Any], *, text: str | None = None
    ) -> SweepSpec:
        valid = _validate(SWEEP_SCHEMA, data, text=text)
        base = SimConfig.from_dict(
            valid[CONF_BASE], text=text, require_velocity=False, prefix=[CONF_BASE]
        )
        return cls(
            base=base,
            alphas=tuple(float(a) for a in valid[CONF_ALPHAS]),
            vprimes=_vprime_grid(valid[CONF_VPRIMES]),
            trials=valid[CONF_TRIALS],
            seed=valid[CONF_SEED],
        )


def _read_json(path: str | Path) -> tuple[Any, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        message = f"cannot read config: {err.strerror}"
        raise ConfigError(message, path=str(path)) from err
    try:
        return json.loads(text), text
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON: {err.msg}", line=err.lineno) from err


def load_config(path: str | Path) -> SimConfig:
    """Load and validate a simulation config file."""
    data, text = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _LOGGER.debug("Loading simulation config from %s", path)
    return SimConfig.from_dict(data, text=text)


def load_sweep(path: str | Path) -> SweepSpec:
    """Load and validate a sweep config file."""
    data, text = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _LOGGER.debug("Loading sweep config from %s", path)
    return SweepSpec.from_dict(data, text=text)


def dump_config(config: SimConfig | SweepSpec, path: str | Path) -> None:
    """Write a config so that loading it gives back an equal object."""
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

