import math

import numpy as np
import pytest

from pointspec import analytic
from pointspec.exceptions import DomainError
from pointspec.extensions import build_two_point, delta, delta_prime, from_coupling
from pointspec.solver import (
    SpectrumSolver, bound_state_determinant, find_bound_states, matching_matrix,
    pointwise_discrepancy, projection_residual, verify_against_analytic, verify_delta, verify_sweep,
)


def test_determinant_vanishes_at_closed_form_rates(split_extension):
    for kappa in (2.0, 1.0):
        assert abs(bound_state_determinant(split_extension, kappa)) < 1e-12


def test_null_vector_reproduces_closed_form(split_extension):
    system = matching_matrix(split_extension, 2.0)
    f = system.function(system.null_vectors(1)[0])
    assert pointwise_discrepancy(f, analytic.f_h(2.0, 0.3).function, 0.3) < 1e-10


def test_matching_matrix_rejects_bad_kappa(split_extension):
    with pytest.raises(DomainError):
        matching_matrix(split_extension, 0.0)
    with pytest.raises(DomainError):
        matching_matrix(split_extension, math.nan)


def test_row_scaling(split_extension):
    system = matching_matrix(split_extension, 1.5)
    np.testing.assert_array_equal(np.max(np.abs(system.matrix), axis=1), 1.0)
    # small rows stay as they are so a row that vanishes at a root still does
    small = matching_matrix(delta_prime(1.5, 1.5), 1.0)
    np.testing.assert_array_equal(small.matrix, small.raw)
    assert np.max(np.abs(matching_matrix(delta_prime(1.5, 1.5), 1.5).matrix)) < 1e-15


def test_split_spectrum(split_extension):
    states = find_bound_states(split_extension)
    assert [s.kappa for s in states] == pytest.approx([2.0, 1.0], abs=1e-9)
    assert [s.parity for s in states] == ["even", "odd"]
    assert [s.multiplicity for s in states] == [1, 1]
    assert states[0].energy == pytest.approx(-4.0, abs=1e-8)


def test_ground_state_is_odd_when_beta_larger():
    states = find_bound_states(build_two_point(1.0, 3.0, 0.5))
    assert states[0].parity == "odd"
    assert states[0].kappa == pytest.approx(3.0, abs=1e-9)


def test_entangled_spectrum_is_degenerate(entangled_extension):
    states = find_bound_states(entangled_extension)
    assert len(states) == 1
    state = states[0]
    assert state.kappa == pytest.approx(1.0, abs=1e-9)
    assert state.multiplicity == 2
    assert state.parity == "none"
    for pair in (analytic.f_h(1.0, 0.5), analytic.g_h(1.0, 0.5)):
        assert projection_residual(pair.function, state.basis) < 1e-9


def test_degenerate_basis_is_orthonormal(entangled_extension):
    u, v = find_bound_states(entangled_extension)[0].basis
    assert analytic.overlap(u, u) == pytest.approx(1.0, abs=1e-12)
    assert analytic.overlap(v, v) == pytest.approx(1.0, abs=1e-12)
    assert abs(analytic.overlap(u, v)) < 1e-12


def test_close_rates_give_two_roots():
    states = find_bound_states(build_two_point(1.0, 1.001, 0.5))
    assert len(states) == 2
    assert [s.kappa for s in states] == pytest.approx([1.001, 1.0], abs=1e-9)


def test_roots_outside_range_are_ignored(split_extension):
    states = find_bound_states(split_extension, kappa_range=(1.5, 10.0))
    assert [s.kappa for s in states] == pytest.approx([2.0], abs=1e-9)


def test_no_bound_state_for_repulsive_coupling():
    assert find_bound_states(from_coupling(0.5, 1.0, 0.0, 1.0)) == []


def test_solver_input_validation(split_extension):
    with pytest.raises(DomainError):
        SpectrumSolver(scan_points=1)
    with pytest.raises(DomainError):
        SpectrumSolver().scan(split_extension, kappa_range=(2.0, 1.0))


def test_scan_reports_its_settings(split_extension):
    scan = SpectrumSolver(scan_points=200).scan(split_extension, (0.1, 10.0))
    assert scan.scan_points == 200
    assert scan.kappa_range == (0.1, 10.0)
    assert scan.warnings == []


def test_one_point_delta_prime():
    states = find_bound_states(delta_prime(1.0, 2.0))
    assert [s.kappa for s in states] == pytest.approx([2.0, 1.0], abs=1e-9)
    assert [s.parity for s in states] == ["odd", "even"]


def test_one_point_decoupled_is_degenerate():
    states = find_bound_states(delta_prime(1.5, 1.5))
    assert len(states) == 1
    assert states[0].multiplicity == 2
    assert states[0].kappa == pytest.approx(1.5, abs=1e-9)


def test_delta_follows_jump_condition():
    states = find_bound_states(delta(-2.0))
    assert len(states) == 1
    assert states[0].kappa == pytest.approx(1.0, abs=1e-9)
    assert states[0].energy == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("alpha,beta,h", [(2.0, 1.0, 0.3), (1.0, 1.0, 0.5), (0.5, 4.0, 1.0), (4.0, 0.5, 0.1)])
def test_verify_against_analytic(alpha, beta, h):
    result = verify_against_analytic(build_two_point(alpha, beta, h))
    assert result.passed, [c for c in result.checks if not c.passed]
    names = {c.name for c in result.checks}
    assert {"root_count", "interface_conditions", "boundary_form"} <= names


def test_verify_notes_local_coupling(local_extension):
    result = verify_against_analytic(local_extension)
    assert result.passed
    assert any("local" in note for note in result.notes)


def test_verify_one_point():
    assert verify_against_analytic(delta_prime(1.0, 2.0)).passed
    assert verify_against_analytic(delta_prime(1.0, 1.0)).passed


def test_verify_needs_generator():
    with pytest.raises(DomainError):
        verify_against_analytic(from_coupling(0.5, -1.0, 0.2, -1.0))


def test_verify_delta():
    result = verify_delta(delta(-3.0))
    assert result.passed
    assert any("-c/2" in note for note in result.notes)
    found = next(c for c in result.checks if c.name == "kappa_jump_condition")
    assert found.value < 1e-9

    repulsive = verify_delta(delta(1.0))
    assert repulsive.passed
    assert repulsive.bound_states == []


def test_verify_sweep_small_grid():
    result = verify_sweep(alphas=(0.5, 2.0), betas=(0.5, 2.0), hs=(0.5,))
    assert result.passed, [c for c in result.checks if not c.passed]
    points = next(c for c in result.checks if c.name == "sweep_points")
    assert points.value == 4.0
    assert "kappa" in {c.name for c in result.checks}


def test_discrepancy_detects_wrong_function():
    f = analytic.f_h(2.0, 0.3).function
    g = analytic.f_h(2.0, 0.4).function
    assert pointwise_discrepancy(f, g, 0.3) > 1e-3
    assert pointwise_discrepancy(f * -2.0, f, 0.3) < 1e-13
    assert np.isfinite(projection_residual(g, [analytic.normalize(analytic.f_h(2.0, 0.3)).function]))
