"""Command-line front door: one subcommand per experiment mode"""
import argparse
import json
import logging
import math
import os
import sys
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from . import analytic
from .constants import (
    DEFAULT_LOG_LEVEL, DEPHASING_REGIONS, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION,
    EXIT_VERIFICATION, HERMITICITY_RTOL, INITIAL_STATES, INTERACTIONS, INTERFACE_TOL, LOG_ENV_VAR, LOG_LEVELS,
    MODES, VERIFY_SWEEP,
)
from .dynamics import (
    DiscreteHamiltonian, GridSpec, GridState, TwoLevelOracle, dephase, estimate_period, evolve,
)
from .exceptions import (
    ConstructionError, DegenerateMatrixError, DomainError, NumericalError, UnsupportedKindError,
)
from .extensions import (
    boundary_form_check, build_two_point, classify, delta, delta_prime, entanglement_ratio,
    from_coupling, is_decoupled, one_point_representation, satisfies_interface,
    satisfies_one_point,
)
from .models import BoundStateSummary, CheckResult, Extension, ReportDocument, RunConfig, TwoPointExtension
from .reports import ReportWriter, summarize_extension, summarize_states
from .solver import SpectrumSolver, verify_against_analytic, verify_sweep

logger = logging.getLogger(__name__)

# Oracle agreement and norm conservation gates for evolve
ORACLE_TOL = 0.02
NORM_DRIFT_TOL = 1e-8


def configure_logging(stream=None):
    """Set the root level from POINTSPEC_LOG; logs go to stderr"""
    name = os.environ.get(LOG_ENV_VAR, DEFAULT_LOG_LEVEL).strip().lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(level=level or LOG_LEVELS[DEFAULT_LOG_LEVEL], stream=stream or sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    if level is None:
        logger.warning("unknown %s=%r, using %s", LOG_ENV_VAR, name, DEFAULT_LOG_LEVEL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointspec",
                                     description="Spectra and dynamics of point interactions")
    # without a subcommand the config file supplies "mode"
    parser.add_argument("--config", dest="root_config", help="JSON config file holding a 'mode' key")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="Report path (default: stdout)")
    common.add_argument("--csv", help="Directory for CSV artifacts")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--interaction", choices=INTERACTIONS)
    for name in ("alpha", "beta", "h", "c", "b11", "b12", "b22", "L", "dt"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--kappa-min", type=float)
    common.add_argument("--kappa-max", type=float)
    common.add_argument("--scan-points", type=int)
    common.add_argument("--ensemble", type=int)
    common.add_argument("--initial", choices=INITIAL_STATES)
    common.add_argument("--region", choices=DEPHASING_REGIONS)
    common.add_argument("--sweep", choices=("default",))

    subparsers = parser.add_subparsers(dest="mode")
    for mode in MODES:
        subparsers.add_parser(mode, parents=[common])
    return parser


def load_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Merge the config file with the command-line flags and validate"""
    args = build_parser().parse_args(argv)
    path = getattr(args, "config", None) or args.root_config
    values = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "root_config")}
    data = {}
    if path:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise DomainError(f"config file {path} must hold a JSON object")
    data.update(values)
    return RunConfig(**data)


def build_extension(config: RunConfig) -> Extension:
    if config.interaction == "delta":
        return delta(config.c)
    if config.interaction == "delta-prime":
        return delta_prime(config.alpha, config.beta)
    if config.b11 is not None:
        return from_coupling(config.h, config.b11, config.b12, config.b22)
    return build_two_point(config.alpha, config.beta, config.h)


def _check(name: str, value: Optional[float], tolerance: float, passed: bool) -> CheckResult:
    return CheckResult(name=name, value=value, tolerance=tolerance, passed=bool(passed))


# Modes
def run_extension(config: RunConfig, ext: Extension, writer: ReportWriter) -> ReportDocument:
    checks, notes = [], []
    if isinstance(ext, TwoPointExtension):
        form = boundary_form_check(ext, seed=config.seed)
        checks.append(_check("boundary_form", form, INTERFACE_TOL, form < INTERFACE_TOL))
        try:
            notes.append(f"entanglement ratio b12/b11 = {entanglement_ratio(ext)!r}")
        except DegenerateMatrixError as e:
            notes.append(str(e))
    elif ext.kind.name == "delta-prime":
        weight_prime, weight_delta = one_point_representation(ext.kind.alpha, ext.kind.beta)
        notes.append(f"H = -d^2/dx^2 - {weight_prime!r} delta'(x)(y'(-0)+y'(+0)) "
                     f"- {weight_delta!r} delta(x)(y(-0)+y(+0))")
        if is_decoupled(ext):
            notes.append("alpha equals beta: the half-lines decouple and the origin is not transitable")
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext), checks=checks, notes=notes)


def run_spectrum(config: RunConfig, ext: Extension, writer: ReportWriter) -> ReportDocument:
    solver = SpectrumSolver(scan_points=config.scan_points)
    scan = solver.scan(ext, (config.kappa_min, config.kappa_max))
    for state in scan.bound_states:
        for index, f in enumerate(state.basis):
            writer.write_frame(analytic.sample(f, _sample_axis(f)), f"bound_state_{state.kappa:.6g}_{index}")
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext),
                          bound_states=summarize_states(scan.bound_states), warnings=scan.warnings)


def _sample_axis(f: analytic.PiecewiseExpFunction, count: int = 801) -> np.ndarray:
    extent = f.extent(8.0)
    return np.linspace(-extent, extent, count)


def _reference_pairs(ext: Extension) -> Tuple[analytic.SpectralPair, analytic.SpectralPair, float]:
    """(even, odd, h) closed-form bound states; h is 0 for one-point interactions"""
    if isinstance(ext, TwoPointExtension):
        return analytic.f_h(ext.generator.alpha, ext.h), analytic.g_h(ext.generator.beta, ext.h), ext.h
    even, odd = analytic.one_point_eigenfunctions(ext.kind.alpha, ext.kind.beta)[:2]
    return even, odd, 0.0


def run_eigenfunction(config: RunConfig, ext: Extension, writer: ReportWriter) -> ReportDocument:
    even, odd, h = _reference_pairs(ext)
    checks = []
    for pair in (even, odd):
        unit = analytic.normalize(pair)
        writer.write_frame(analytic.sample(unit.function, _sample_axis(unit.function)),
                           f"eigenfunction_{pair.parity}")
        residual = analytic.ode_residual(pair)
        checks.append(_check(f"ode_residual_{pair.parity}", residual, config.tol, residual < config.tol))
        if isinstance(ext, TwoPointExtension):
            ok = satisfies_interface(ext, analytic.boundary_data(pair.function, h))
        else:
            ok = satisfies_one_point(ext, analytic.one_point_boundary_data(pair.function))
        checks.append(_check(f"interface_{pair.parity}", None, INTERFACE_TOL, ok))

    if isinstance(ext, TwoPointExtension) and ext.generator.alpha == ext.generator.beta:
        left, right = analytic.handed_states(ext.generator.alpha, h)
        checks.append(_check("handed_left_support", abs(left.coefficients[-1][1]), 0.0,
                             left.coefficients[-1] == (0.0, 0.0)))
        checks.append(_check("handed_right_support", abs(right.coefficients[0][0]), 0.0,
                             right.coefficients[0] == (0.0, 0.0)))
    if even.kappa == odd.kappa:
        summaries = [BoundStateSummary(kappa=even.kappa, energy=even.energy, multiplicity=2)]
    else:
        summaries = [BoundStateSummary(kappa=p.kappa, energy=p.energy, multiplicity=1, parity=p.parity)
                     for p in sorted((even, odd), key=lambda p: -p.kappa)]
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext), checks=checks,
                          bound_states=summaries)


def initial_state(config: RunConfig, ext: Extension, grid: GridSpec) -> Tuple[GridState, Tuple[float, float]]:
    """Sampled initial state and its (even, odd) weights; half-line has no two-level weights"""
    even, odd, h = _reference_pairs(ext)
    weights = {"handed-left": (1.0, 1.0), "handed-right": (1.0, -1.0), "even": (1.0, 0.0),
               "odd": (0.0, 1.0)}
    if config.initial == "half-line":
        state = GridState.sample(grid, even.function).restricted([0])
        return state.normalized(), None
    w_even, w_odd = weights[config.initial]
    terms = [(w, pair.function) for w, pair in ((w_even, even), (w_odd, odd)) if w != 0.0]
    return GridState.superpose(grid, terms).normalized(), (w_even, w_odd)


def _grid_for(config: RunConfig, ext: Extension) -> GridSpec:
    even, odd, _ = _reference_pairs(ext)
    return GridSpec.covering(ext, min(even.kappa, odd.kappa), config.L, config.n)


def _references(ext: Extension, grid: GridSpec) -> Dict[str, GridState]:
    even, odd, _ = _reference_pairs(ext)
    return {"even": GridState.sample(grid, even.function).normalized(),
            "odd": GridState.sample(grid, odd.function).normalized()}


def run_evolve(config: RunConfig, ext: Extension, writer: ReportWriter) -> ReportDocument:
    grid = _grid_for(config, ext)
    hamiltonian = DiscreteHamiltonian.discretize(ext, grid)
    initial, weights = initial_state(config, ext, grid)
    report = evolve(hamiltonian, initial, config.dt, config.steps, _references(ext, grid))

    drift = report.max_norm_drift()
    defect = hamiltonian.hermiticity_defect()
    checks = [
        _check("hermiticity", defect, HERMITICITY_RTOL, defect <= HERMITICITY_RTOL),
        _check("norm_drift", drift, NORM_DRIFT_TOL, drift <= NORM_DRIFT_TOL),
    ]
    totals = np.array(report.p_left) + np.array(report.p_gap) + np.array(report.p_right)
    balance = float(np.max(np.abs(totals - np.array(report.norms) ** 2)))
    checks.append(_check("probability_balance", balance, 1e-10, balance <= 1e-10))

    notes = []
    if weights is not None:
        even, odd, h = _reference_pairs(ext)
        oracle = TwoLevelOracle(even, odd, h)
        expected = oracle.probabilities(report.times, *weights)["left"]
        gap = float(np.max(np.abs(np.array(report.p_left) - expected)))
        checks.append(_check("oracle_p_left", gap, ORACLE_TOL, gap < ORACLE_TOL))
        if math.isfinite(oracle.period) and oracle.period < report.times[-1] / 2:
            try:
                period = estimate_period(report.times, report.p_left)
                error = abs(period - oracle.period) / oracle.period
                checks.append(_check("beat_period", error, ORACLE_TOL, error < ORACLE_TOL))
                notes.append(f"beat period {period!r}, two-level value {oracle.period!r}")
            except NumericalError as e:
                notes.append(str(e))
    writer.write_frame(report.to_frame(), "trajectory")
    writer.write_frame(report.final.to_frame(), "snapshot")
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext), checks=checks, notes=notes)


def run_dephase(config: RunConfig, ext: Extension, writer: ReportWriter) -> ReportDocument:
    grid = _grid_for(config, ext)
    state, _ = initial_state(config, ext, grid)
    result = dephase(state, config.ensemble, config.seed, _references(ext, grid), config.region)
    bound = 2.0 / math.sqrt(config.ensemble)
    checks = [_check("side_probabilities_invariant", result.density_deviation, result.tolerance,
                     result.invariant)]
    notes = [f"P_left={result.p_left!r} P_gap={result.p_gap!r} P_right={result.p_right!r}"]
    for name, average in result.overlaps.items():
        checks.append(_check(f"cross_term_{name}", abs(average.cross_term), bound,
                             abs(average.cross_term) < bound))
        notes.append(f"averaged |overlap with {name}|^2 = {average.mean_squared!r} "
                     f"(incoherent value {average.incoherent!r})")
    frame = state.to_frame().assign(density=result.density)
    writer.write_frame(frame, "dephased_density")
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext), checks=checks, notes=notes)


def run_verify(config: RunConfig, ext: Optional[Extension], writer: ReportWriter) -> ReportDocument:
    if config.sweep is not None:
        result = verify_sweep(VERIFY_SWEEP["alphas"], VERIFY_SWEEP["betas"], VERIFY_SWEEP["hs"], tol=config.tol)
        return ReportDocument(mode=config.mode, checks=result.checks, warnings=result.warnings)
    result = verify_against_analytic(ext, tol=config.tol, solver=SpectrumSolver(scan_points=config.scan_points),
                                     kappa_range=(config.kappa_min, config.kappa_max))
    return ReportDocument(mode=config.mode, extension=summarize_extension(ext),
                          bound_states=summarize_states(result.bound_states), checks=result.checks,
                          notes=result.notes, warnings=result.warnings)


RUNNERS = {
    "extension": run_extension,
    "spectrum": run_spectrum,
    "eigenfunction": run_eigenfunction,
    "evolve": run_evolve,
    "dephase": run_dephase,
    "verify": run_verify,
}


def run(config: RunConfig) -> int:
    """Execute one configured run and emit its report; returns the exit code"""
    writer = ReportWriter(config.out, config.csv)
    try:
        sweeping = config.mode == "verify" and config.sweep is not None
        ext = None if sweeping else build_extension(config)
        if ext is not None:
            logger.info("running %s on %s", config.mode, classify(ext))
        document = RUNNERS[config.mode](config, ext, writer)
        writer.emit(document)
    except (ValidationError, DomainError, UnsupportedKindError, DegenerateMatrixError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_VALIDATION
    except (NumericalError, ConstructionError, OSError) as e:
        logger.error("run failed: %s", e)
        return EXIT_NUMERICAL

    failed = [check.name for check in document.checks if not check.passed]
    if failed:
        logger.error("failed checks: %s", ", ".join(failed))
        return EXIT_VERIFICATION
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    try:
        config = load_config(argv)
    except ValidationError as e:
        for error in e.errors():
            field = ".".join(str(part) for part in error["loc"]) or "config"
            logger.error("field '%s': %s", field, error["msg"])
        return EXIT_VALIDATION
    except (DomainError, ValueError) as e:
        logger.error("invalid config: %s", e)
        return EXIT_VALIDATION
    except OSError as e:
        logger.error("could not read config: %s", e)
        return EXIT_NUMERICAL
    return run(config)
