import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from pointspec import analytic
from pointspec.exceptions import DomainError
from pointspec.extensions import build_two_point, satisfies_interface

SWEEP = [(a, h) for a in (0.5, 1.0, 2.0) for h in (0.1, 0.5, 1.0)]


def _quad_over_line(fn, breakpoints):
    cuts = [-math.inf, *breakpoints, math.inf]
    return sum(quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0] for a, b in zip(cuts, cuts[1:]))


@pytest.mark.parametrize("alpha,beta,h", [(2.0, 1.0, 0.3), (1.0, 1.0, 0.5), (0.5, 4.0, 1.0)])
def test_closed_forms_are_eigenfunctions(alpha, beta, h):
    ext = build_two_point(alpha, beta, h)
    for pair in (analytic.f_h(alpha, h), analytic.g_h(beta, h)):
        assert analytic.ode_residual(pair) < 1e-12
        assert satisfies_interface(ext, analytic.boundary_data(pair.function, h))


@pytest.mark.parametrize("pair", [analytic.f_h(2.0, 0.3), analytic.g_h(1.0, 0.3), analytic.f_h(1.0, 0.5),
                                  *analytic.one_point_eigenfunctions(1.0, 2.0)])
def test_central_differences_agree_with_the_energy(pair):
    step = 1e-4
    f = pair.function
    xs = np.linspace(-3.0, 3.0, 20)
    assert np.min(np.abs(xs[:, None] - np.array(f.breakpoints)[None, :])) > step
    second = (f.value(xs + step) - 2.0 * f.value(xs) + f.value(xs - step)) / step ** 2
    expected = pair.energy * f.value(xs)
    assert np.max(np.abs(-second - expected)) <= 1e-6 * np.max(np.abs(expected))


def test_parity():
    assert analytic.f_h(2.0, 0.3).parity == "even"
    assert analytic.g_h(1.0, 0.3).parity == "odd"
    assert analytic.detect_parity(analytic.f_h(2.0, 0.3).function) == "even"
    assert analytic.detect_parity(analytic.g_h(1.0, 0.3).function) == "odd"


def test_spectral_pair_rejects_wrong_parity():
    with pytest.raises(ValidationError):
        analytic.SpectralPair(kappa=1.0, function=analytic.g_h(1.0, 0.5).function, parity="even")


def test_energy():
    assert analytic.f_h(2.0, 0.3).energy == -4.0


@pytest.mark.parametrize("alpha", [1.0, 2.5])
def test_handed_states_vanish_on_one_side(alpha):
    h = 0.5
    left, right = analytic.handed_states(alpha, h)
    assert left.coefficients[-1] == (0.0, 0.0)
    assert right.coefficients[0] == (0.0, 0.0)
    xs = np.linspace(h, 10.0, 50)
    assert np.all(left.value(xs) == 0.0)
    assert np.all(right.value(-xs) == 0.0)
    assert left.value(h, side=1) == 0.0
    assert left.value(h, side=-1) != 0.0


def test_breakpoint_convention():
    f = analytic.f_h(1.0, 0.5).function
    inner = f.coefficients[1][0]
    gap_value = inner * (math.exp(-0.5) + math.exp(0.5))
    assert f.value(-0.5) == pytest.approx(math.exp(-0.5))
    assert f.value(0.5) == pytest.approx(math.exp(-0.5))
    assert f.value(-0.5, side=1) == pytest.approx(gap_value)
    assert f.value(0.5, side=-1) == pytest.approx(gap_value)


def test_derivative_is_continuous_at_interfaces():
    f = analytic.g_h(1.5, 0.4).function
    for x in (-0.4, 0.4):
        assert f.derivative(x, side=-1) == pytest.approx(f.derivative(x, side=1), rel=1e-13)


@pytest.mark.parametrize("alpha,h", SWEEP)
def test_gap_integral(alpha, h):
    closed = -2.0 * math.exp(-alpha * h) / alpha
    assert analytic.integral_over_gap(alpha, h) == pytest.approx(closed, rel=1e-13, abs=1e-13)
    f = analytic.f_h(alpha, h).function
    numeric, _ = quad(f.value, -h, h, epsabs=1e-12, epsrel=1e-12)
    assert numeric == pytest.approx(closed, abs=1e-10)


@pytest.mark.parametrize("alpha,h", SWEEP)
def test_norm_matches_quadrature(alpha, h):
    f = analytic.f_h(alpha, h).function
    numeric = _quad_over_line(lambda x: f.value(x) ** 2, f.breakpoints)
    assert analytic.l2_norm(f) ** 2 == pytest.approx(numeric, rel=1e-9)


def test_normalize():
    pair = analytic.normalize(analytic.g_h(0.5, 1.0))
    assert analytic.l2_norm(pair.function) == pytest.approx(1.0, rel=1e-13)
    assert pair.parity == "odd"


def test_even_and_odd_are_orthogonal():
    f = analytic.normalize(analytic.f_h(2.0, 0.3)).function
    g = analytic.normalize(analytic.g_h(1.0, 0.3)).function
    assert abs(analytic.overlap(f, g)) < 1e-14


def test_region_grams_add_up_to_identity():
    h = 0.5
    f = analytic.normalize(analytic.f_h(2.0, h)).function
    g = analytic.normalize(analytic.g_h(1.3, h)).function
    total = sum(analytic.region_gram(f, g, a, b)
                for a, b in ((-math.inf, -h), (-h, h), (h, math.inf)))
    np.testing.assert_allclose(total, np.eye(2), atol=1e-13)


def test_restricted_overlap_matches_quadrature():
    f = analytic.f_h(2.0, 0.5).function
    g = analytic.g_h(1.0, 0.5).function
    numeric, _ = quad(lambda x: f.value(x) * g.value(x), -math.inf, -0.5, epsabs=1e-13)
    assert analytic.overlap(f, g, -math.inf, -0.5) == pytest.approx(numeric, abs=1e-10)


def test_integrate_one_point_even_state():
    even = analytic.one_point_eigenfunctions(1.0, 2.0)[0]
    assert analytic.integrate(even.function) == pytest.approx(2.0)


def test_one_point_eigenfunctions():
    pairs = analytic.one_point_eigenfunctions(1.0, 2.0)
    assert [p.kappa for p in pairs] == [1.0, 2.0]
    assert [p.parity for p in pairs] == ["even", "odd"]
    assert pairs[1].function.value(-1.0) == pytest.approx(-math.exp(-2.0))

    decoupled = analytic.one_point_eigenfunctions(1.0, 1.0)
    assert len(decoupled) == 4
    y1, y2 = decoupled[2].function, decoupled[3].function
    assert np.all(y1.value(np.linspace(0.0, 5.0, 11), 1) == 0.0)
    assert np.all(y2.value(np.linspace(-5.0, 0.0, 11), -1) == 0.0)


def test_rejects_growing_tails():
    with pytest.raises(ValidationError):
        analytic.PiecewiseExpFunction(breakpoints=(0.0,), coefficients=((1.0, 1.0), (0.0, 1.0)), kappa=1.0)
    with pytest.raises(ValidationError):
        analytic.PiecewiseExpFunction(breakpoints=(0.5, -0.5),
                                      coefficients=((1.0, 0.0), (1.0, 1.0), (0.0, 1.0)), kappa=1.0)


def test_arithmetic_needs_common_frame():
    with pytest.raises(DomainError):
        analytic.f_h(1.0, 0.5).function + analytic.g_h(2.0, 0.5).function


def test_large_arguments_do_not_overflow():
    f = analytic.f_h(4.0, 1.0).function
    assert f.value(-400.0) == 0.0
    assert f.value(400.0) == 0.0
    assert np.isfinite(f.value(np.array([-1e3, 1e3]))).all()


def test_sample_table():
    table = analytic.sample(analytic.f_h(1.0, 0.5).function, np.linspace(-2.0, 2.0, 9))
    assert list(table.columns) == ["x", "value", "derivative"]
    assert len(table) == 9


def test_small_h_profile():
    rows = analytic.small_h_profile(1.0, [0.5, 0.1, 1e-3])
    assert [row["h"] for row in rows] == [0.5, 0.1, 1e-3]
    assert all(row["tail_distance"] < 1e-15 for row in rows)
    assert rows[-1]["gap_integral"] == pytest.approx(-2.0, abs=3e-3)
    assert abs(rows[0]["gap_integral"] + 2.0) > abs(rows[-1]["gap_integral"] + 2.0)
