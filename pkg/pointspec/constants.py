REPORT_VERSION = 1

LOG_ENV_VAR = "POINTSPEC_LOG"
LOG_LEVELS = {"error": "ERROR", "info": "INFO", "debug": "DEBUG"}
DEFAULT_LOG_LEVEL = "info"

# Tolerances
SYMMETRY_RTOL = 1e-14
GENERATOR_RTOL = 1e-12
INTERFACE_TOL = 1e-12  # interface predicates and boundary forms
LOCALITY_TOL = 1e-10
DECOUPLING_RTOL = 1e-10
PARITY_TOL = 1e-12
HERMITICITY_RTOL = 1e-12
VERIFY_TOL = 1e-9

# Root search
SCAN_POINTS = 400
ROOT_TOL = 1e-11
RANK_THRESHOLD = 1e-8  # singular values below this * max(1, sigma_max) count as null directions
KAPPA_RANGE = (1e-2, 1e2)

# Grid and time stepping
MIN_GRID_POINTS = 512
DECAY_LENGTHS = 5.0  # L must exceed the outermost interface by this many decay lengths
GRID_HALF_WIDTH = 10.0
GRID_POINTS = 1024
TIME_STEP = 0.01
TIME_STEPS = 1000
ENSEMBLE_SIZE = 1000
SEED = 0
DENSITY_ULPS = 16  # allowed relative change of a kicked density, in units of machine epsilon

# Sweeps
VERIFY_SWEEP = {
    "alphas": (0.5, 1.0, 2.0, 4.0),
    "betas": (0.5, 1.0, 2.0, 4.0),
    "hs": (0.1, 0.5, 1.0),
}
INTERFACE_SWEEP = {
    "alphas": (0.5, 1.0, 2.0),
    "betas": (0.5, 1.0, 2.0),
    "hs": (0.1, 0.5, 1.0),
}
BOUNDARY_FORM_PAIRS = 100

# CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

MODES = ("extension", "spectrum", "eigenfunction", "evolve", "dephase", "verify")
INTERACTIONS = ("two-point", "delta-prime", "delta")
INITIAL_STATES = ("handed-left", "handed-right", "even", "odd", "half-line")
DEPHASING_REGIONS = ("positive", "outside")
