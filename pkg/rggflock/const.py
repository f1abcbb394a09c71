"""Constants for the rggflock toolkit."""

SCHEMA_VERSION = 1

# Configuration keys
CONF_SCHEMA_VERSION = "schema_version"
CONF_KIND = "kind"
CONF_N = "n"
CONF_D = "d"
CONF_RADIUS = "radius"
CONF_ALPHA = "alpha"
CONF_BETA = "beta"
CONF_KERNEL = "kernel"
CONF_FAMILY = "family"
CONF_AMPLITUDE = "amplitude"
CONF_GAMMA = "gamma"
CONF_DELTA = "delta"
CONF_SAMPLES = "samples"
CONF_CPRIME = "cprime"
CONF_VELOCITY = "velocity"
CONF_MODE = "mode"
CONF_V0 = "v0"
CONF_VPRIME = "vprime"
CONF_MATRIX = "matrix"
CONF_T_MAX = "t_max"
CONF_FLOCK_TOL = "flock_tol"
CONF_SEED = "seed"
CONF_TRIALS = "trials"
CONF_DIAGNOSTICS = "diagnostics"
CONF_SPECTRAL = "spectral"
CONF_DRIFT = "drift"
CONF_EARLY_STOP = "early_stop"
CONF_LOG_EVERY = "log_every"
CONF_BASE = "base"
CONF_ALPHAS = "alphas"
CONF_VPRIMES = "vprimes"

AMPLITUDE_AUTO = "auto"

# Dynamics
FLOCK_TOL = 1e-9
T_MAX = 10_000
EXACT_PAIR_LIMIT = 2000
PAIR_AUDIT_SAMPLES = 4096
EARLY_STOP_EVERY = 10

# Spectral
CHEEGER_EXACT_LIMIT = 22
CHEEGER_CHUNK = 1 << 16
SYMMETRY_TOL = 1e-12
CHEEGER_SLACK = 1e-9
CONTRACTION_SLACK = 1e-9

# Numerics
QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-14
QUAD_LIMIT = 200
ROOT_RTOL = 1e-8
ROOT_XTOL = 1e-14
H_INV_TOL = 1e-12
MAX_DOUBLINGS = 200
GRID_RESOLUTION = {2: 400, 3: 60}
GRID_RESOLUTION_DEFAULT = 16
RADIAL_FORMULA_LIMIT = 0.5

# Conditions
FLOCK_FREQUENCY = 0.9
NO_FLOCK_FREQUENCY = 0.1
VTHRESHOLD_ITERATIONS = 8
REGIME_RTOL = 1e-12

# Sweep defaults
DEFAULT_N = 600
DEFAULT_D = 2
DEFAULT_ALPHA = 2.0
DEFAULT_TRIALS = 50
DEFAULT_ALPHAS = (0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0)
DEFAULT_VPRIME_RANGE = (0.01, 100.0)
DEFAULT_VPRIME_COUNT = 20
MONOTONE_NOISE = 0.15
DEMARCATION_LEVEL = 0.5

# Output file names
SERIES_FILE = "simulate_series.jsonl"
REPORT_FILE = "simulate_report.json"
TRAJECTORY_FILE = "trajectory.csv"
SWEEP_CSV = "sweep.csv"
SWEEP_JSON = "sweep.json"
SWEEP_SVG = "sweep.svg"
CONNECTIVITY_FILE = "rgg_connectivity"
KBAR_FILE = "kbar"
KBAR_SWEEP_FILE = "kbar_sweep.csv"
SPECTRAL_FILE = "spectral.csv"
CONDITIONS_FILE = "conditions.json"
VTHRESHOLD_CSV = "vthreshold.csv"
VTHRESHOLD_JSON = "vthreshold.json"
