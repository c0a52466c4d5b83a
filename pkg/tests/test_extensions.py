import math

import numpy as np
import pytest
from pydantic import ValidationError

from pointspec import analytic
from pointspec.constants import INTERFACE_SWEEP
from pointspec.exceptions import DegenerateMatrixError, DomainError, UnsupportedKindError
from pointspec.extensions import (
    boundary_form_check, boundary_form_one_point, boundary_form_two_point, build_two_point, classify,
    coupling_from_generator, delta, delta_prime, entanglement_ratio, from_coupling,
    half_line_residuals, is_decoupled, is_local, local_beta_for, one_point_representation,
    random_interface_data, satisfies_continuity, satisfies_interface, satisfies_one_point,
    sweep_extensions,
)
from pointspec.models import (
    BoundaryData, ContinuityExtension, CouplingMatrix, GeneratorParams, OnePointBoundaryData,
    TwoPointExtension,
)


def test_coupling_entries_entangled_case():
    b11, b12 = coupling_from_generator(1.0, 1.0, 0.5)
    assert b11 == pytest.approx(-2.0 / (1.0 - math.exp(-2.0)), rel=1e-14)
    assert b11 == pytest.approx(-2.31304, rel=1e-5)
    assert b12 == pytest.approx(0.85092, rel=1e-5)


def test_general_formula_is_continuous_at_equal_rates():
    b11, b12 = coupling_from_generator(1.0, 1.0, 0.5)
    near11, near12 = coupling_from_generator(1.0, 1.0 + 1e-9, 0.5)
    assert near11 == pytest.approx(b11, rel=1e-6)
    assert near12 == pytest.approx(b12, rel=1e-6)


def test_built_extension_is_symmetric(split_extension):
    b = split_extension.coupling
    assert b.b12 == b.b21
    assert b.b11 == b.b22
    assert b.parity_symmetric
    assert b.determinant > 0


@pytest.mark.parametrize("alpha,beta,h", [(-1.0, 1.0, 0.5), (1.0, 0.0, 0.5), (1.0, 1.0, 0.0),
                                          (math.inf, 1.0, 0.5), (1.0, math.nan, 0.5)])
def test_invalid_generator_parameters(alpha, beta, h):
    with pytest.raises(DomainError):
        build_two_point(alpha, beta, h)


def test_asymmetric_coupling_rejected():
    with pytest.raises(ValidationError):
        CouplingMatrix(b11=-1.0, b12=0.5, b21=0.4, b22=-1.0)


def test_generator_mismatch_rejected():
    with pytest.raises(ValidationError):
        TwoPointExtension(h=0.5, coupling=CouplingMatrix.symmetric(-1.0, 0.2, -1.0),
                          generator=GeneratorParams(alpha=1.0, beta=2.0))


def test_direct_coupling_need_not_be_parity_symmetric():
    ext = from_coupling(0.5, -1.0, 0.2, -3.0)
    assert not ext.coupling.parity_symmetric
    assert classify(ext) == "delta-prime-entangled"


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("h", [0.1, 0.5, 1.0])
def test_entanglement_ratio_for_equal_rates(alpha, h):
    ratio = entanglement_ratio(build_two_point(alpha, alpha, h))
    assert ratio == pytest.approx(-math.exp(-2.0 * alpha * h), rel=1e-13)


def test_entanglement_ratio_limits():
    assert abs(entanglement_ratio(build_two_point(50.0, 50.0, 1.0))) < 1e-40
    assert entanglement_ratio(build_two_point(1e-3, 1e-3, 1e-3)) == pytest.approx(-1.0, abs=1e-5)
    assert entanglement_ratio(build_two_point(1.0, 1.0, 1e-6)) == pytest.approx(-1.0, abs=1e-5)


def test_entanglement_ratio_needs_diagonal():
    with pytest.raises(DegenerateMatrixError):
        entanglement_ratio(from_coupling(0.5, 0.0, 1.0, 0.0))


def test_local_beta():
    alpha, h = 2.0, 0.5
    beta = local_beta_for(alpha, h)
    residual = beta * (1.0 + math.exp(-2.0 * beta * h)) - alpha * (1.0 - math.exp(-2.0 * alpha * h))
    assert abs(residual) < 1e-12
    assert beta < alpha
    assert beta == pytest.approx(1.38232, abs=1e-4)
    ext = build_two_point(alpha, beta, h)
    assert is_local(ext)
    assert classify(ext) == "delta-prime-local"


def test_entangled_is_not_local(entangled_extension):
    assert not is_local(entangled_extension)
    assert classify(entangled_extension) == "delta-prime-entangled"


def test_local_beta_rejects_bad_input():
    with pytest.raises(DomainError):
        local_beta_for(0.0, 0.5)


def test_eigenfunctions_satisfy_interface(split_extension):
    for pair in (analytic.f_h(2.0, 0.3), analytic.g_h(1.0, 0.3)):
        assert satisfies_interface(split_extension, analytic.boundary_data(pair.function, 0.3))


def test_derivative_jump_violates_interface(split_extension):
    data = analytic.boundary_data(analytic.f_h(2.0, 0.3).function, 0.3)
    broken = data.model_copy(update={"dy_left_plus": data.dy_left_plus + 0.1})
    assert not satisfies_interface(split_extension, broken)


def test_wrong_jump_violates_interface(split_extension):
    data = analytic.boundary_data(analytic.f_h(2.0, 0.3).function, 0.3)
    broken = data.model_copy(update={"y_right_plus": data.y_right_plus + 1e-6})
    assert not satisfies_interface(split_extension, broken)


def test_random_data_satisfies_interface(entangled_extension):
    rng = np.random.default_rng(7)
    for _ in range(10):
        assert satisfies_interface(entangled_extension, random_interface_data(entangled_extension, rng))


@pytest.mark.parametrize("ext", list(sweep_extensions(**INTERFACE_SWEEP)))
def test_boundary_form_vanishes(ext):
    assert boundary_form_check(ext, pairs=100, seed=0) < 1e-12


def test_boundary_form_detects_non_self_adjoint_data(split_extension):
    rng = np.random.default_rng(1)
    y = random_interface_data(split_extension, rng)
    z = random_interface_data(split_extension, rng)
    # break the jump relation at -h for z
    z = z.model_copy(update={"y_left_plus": z.y_left_plus + 1.0})
    assert abs(boundary_form_two_point(y, z)) > 1e-6


def test_boundary_form_is_antisymmetric():
    rng = np.random.default_rng(5)
    names = list(BoundaryData.model_fields)
    for _ in range(20):
        y, z = (BoundaryData(**{name: complex(rng.normal(), rng.normal()) for name in names}) for _ in range(2))
        forward = boundary_form_two_point(y, z)
        assert forward == pytest.approx(-boundary_form_two_point(z, y).conjugate(), abs=1e-12)


def test_continuity_family():
    c = CouplingMatrix.symmetric(-1.0, 0.5, -2.0)
    ext = ContinuityExtension(h=0.5, coupling=c)
    values = np.array([0.3 + 0.1j, -0.2j])
    jumps = c.as_array() @ values
    data = BoundaryData(
        y_left_minus=values[0], y_left_plus=values[0], y_right_minus=values[1], y_right_plus=values[1],
        dy_left_minus=1.0, dy_left_plus=1.0 + jumps[0], dy_right_minus=-0.5, dy_right_plus=-0.5 + jumps[1],
    )
    assert satisfies_continuity(ext, data)
    assert classify(ext) == "delta-continuity"


def test_boundary_data_rejects_non_finite():
    with pytest.raises(ValidationError):
        OnePointBoundaryData(y_minus=math.inf, y_plus=0.0, dy_minus=0.0, dy_plus=0.0)


def test_delta_prime_eigenfunctions_satisfy_conditions():
    ext = delta_prime(1.0, 2.0)
    even, odd = analytic.one_point_eigenfunctions(1.0, 2.0)
    y = analytic.one_point_boundary_data(even.function)
    z = analytic.one_point_boundary_data(odd.function)
    assert satisfies_one_point(ext, y)
    assert satisfies_one_point(ext, z)
    assert abs(boundary_form_one_point(y, z)) < 1e-12
    assert classify(ext) == "one-point-delta-prime"


def test_decoupled_half_lines():
    ext = delta_prime(1.0, 1.0)
    assert is_decoupled(ext)
    assert classify(ext) == "one-point-decoupled"
    y1 = OnePointBoundaryData(y_minus=1.0, y_plus=0.0, dy_minus=1.0, dy_plus=0.0)
    assert half_line_residuals(ext, y1) == (0, 0)
    assert satisfies_one_point(ext, y1)


def test_half_line_residuals_need_equal_rates():
    with pytest.raises(DomainError):
        half_line_residuals(delta_prime(1.0, 2.0),
                            OnePointBoundaryData(y_minus=1.0, y_plus=0.0, dy_minus=1.0, dy_plus=0.0))


def test_delta_interaction():
    ext = delta(-2.0)
    assert classify(ext) == "one-point-delta"
    # exp(-|x|): unit value, derivative jump -2
    y = OnePointBoundaryData(y_minus=1.0, y_plus=1.0, dy_minus=1.0, dy_plus=-1.0)
    assert satisfies_one_point(ext, y)
    with pytest.raises(UnsupportedKindError):
        is_decoupled(ext)


def test_one_point_representation():
    assert one_point_representation(1.0, 2.0) == (0.5, 1.0)


def test_sweep_can_skip_equal_rates():
    extensions = list(sweep_extensions(**INTERFACE_SWEEP, include_equal=False))
    assert len(extensions) == 18
    assert all(e.generator.alpha != e.generator.beta for e in extensions)
