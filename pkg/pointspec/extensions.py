"""Construction and classification of the self-adjoint boundary-condition families"""
import logging
import math
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .constants import (
    BOUNDARY_FORM_PAIRS, DECOUPLING_RTOL, INTERFACE_TOL, LOCALITY_TOL,
)
from .exceptions import DegenerateMatrixError, DomainError, NumericalError, UnsupportedKindError
from .models import (
    BoundaryData, ContinuityExtension, CouplingMatrix, DeltaKind, DeltaPrimeKind,
    GeneratorParams, OnePointBoundaryData, OnePointExtension, TwoPointExtension,
    generator_entries,
)

logger = logging.getLogger(__name__)


def _require_positive(**values: float):
    for name, value in values.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


def coupling_from_generator(alpha: float, beta: float, h: float) -> Tuple[float, float]:
    """Return (b11, b12) of the symmetric coupling matrix for the given decay rates"""
    _require_positive(alpha=alpha, beta=beta, h=h)
    return generator_entries(alpha, beta, h)


def build_two_point(alpha: float, beta: float, h: float) -> TwoPointExtension:
    """Two-point extension whose bound states decay at rates alpha (even) and beta (odd)"""
    b11, b12 = coupling_from_generator(alpha, beta, h)
    coupling = CouplingMatrix.symmetric(b11, b12, b11)
    logger.debug("built two-point extension alpha=%r beta=%r h=%r: b11=%r b12=%r", alpha, beta, h, b11, b12)
    return TwoPointExtension(h=h, coupling=coupling, generator=GeneratorParams(alpha=alpha, beta=beta))


def from_coupling(h: float, b11: float, b12: float, b22: float) -> TwoPointExtension:
    """Two-point extension from a directly supplied symmetric matrix"""
    _require_positive(h=h)
    return TwoPointExtension(h=h, coupling=CouplingMatrix.symmetric(b11, b12, b22))


def delta(c: float) -> OnePointExtension:
    return OnePointExtension(kind=DeltaKind(c=c))


def delta_prime(alpha: float, beta: float) -> OnePointExtension:
    _require_positive(alpha=alpha, beta=beta)
    return OnePointExtension(kind=DeltaPrimeKind(alpha=alpha, beta=beta))


def is_local(ext: TwoPointExtension, tol: float = LOCALITY_TOL) -> bool:
    """True when the jump at each point depends only on the derivative there"""
    b = ext.coupling
    return abs(b.b12) <= tol * max(abs(b.b11), 1.0)


def local_beta_for(alpha: float, h: float) -> float:
    """Odd decay rate that makes the (alpha, beta, h) coupling local"""
    _require_positive(alpha=alpha, h=h)
    target = alpha * -math.expm1(-2.0 * alpha * h)

    def mismatch(beta: float) -> float:
        return beta * (1.0 + math.exp(-2.0 * beta * h)) - target

    # mismatch is strictly increasing, negative at 0 and positive at target
    try:
        beta = brentq(mismatch, 0.0, target, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    except ValueError as e:
        raise NumericalError(f"locality root not bracketed for alpha={alpha!r}, h={h!r}: {e}")
    logger.debug("local beta for alpha=%r h=%r: %r (residual %.3e)", alpha, h, beta, mismatch(beta))
    return beta


def entanglement_ratio(ext: TwoPointExtension) -> float:
    """b12 / b11; zero for local couplings, -1 in the strongly entangled limit"""
    if ext.coupling.b11 == 0.0:
        raise DegenerateMatrixError("entanglement ratio undefined for b11 = 0")
    return ext.coupling.b12 / ext.coupling.b11


def is_decoupled(ext: OnePointExtension) -> bool:
    """True when the one-point conditions split into independent half-line conditions"""
    kind = ext.kind
    if not isinstance(kind, DeltaPrimeKind):
        raise UnsupportedKindError(f"decoupling is defined for delta-prime interactions, got {kind.name}")
    return abs(kind.alpha - kind.beta) <= DECOUPLING_RTOL * kind.alpha


def half_line_residuals(ext: OnePointExtension, y: OnePointBoundaryData) -> Tuple[complex, complex]:
    """Residuals of alpha*y(-0) = y'(-0) and alpha*y(+0) = -y'(+0)"""
    if not is_decoupled(ext):
        raise DomainError("half-line conditions only hold when alpha equals beta")
    alpha = ext.kind.alpha
    return alpha * y.y_minus - y.dy_minus, alpha * y.y_plus + y.dy_plus


def one_point_representation(alpha: float, beta: float) -> Tuple[float, float]:
    """Weights of delta'(x)(y'(-0)+y'(+0)) and delta(x)(y(-0)+y(+0)) in -y'' - ..."""
    _require_positive(alpha=alpha, beta=beta)
    return 1.0 / beta, alpha


def classify(ext: Union[TwoPointExtension, ContinuityExtension, OnePointExtension],
             tol: float = LOCALITY_TOL) -> str:
    if isinstance(ext, ContinuityExtension):
        return "delta-continuity"
    if isinstance(ext, TwoPointExtension):
        return "delta-prime-local" if is_local(ext, tol) else "delta-prime-entangled"
    if isinstance(ext.kind, DeltaKind):
        return "one-point-delta"
    return "one-point-decoupled" if is_decoupled(ext) else "one-point-delta-prime"


# Boundary forms
def boundary_form_two_point(y: BoundaryData, z: BoundaryData) -> complex:
    """Surface term (D*y, z) - (y, D*z) collected at -h and h"""
    zc = z.as_array().conjugate()
    (zlm, zlp, zrm, zrp, dzlm, dzlp, dzrm, dzrp) = zc
    return complex(
        -y.dy_left_minus * zlm + y.dy_left_plus * zlp
        - y.dy_right_minus * zrm + y.dy_right_plus * zrp
        + y.y_left_minus * dzlm - y.y_left_plus * dzlp
        + y.y_right_minus * dzrm - y.y_right_plus * dzrp
    )


def boundary_form_one_point(y: OnePointBoundaryData, z: OnePointBoundaryData) -> complex:
    """Surface term at the origin; vanishes on a self-adjoint domain"""
    zm, zp, dzm, dzp = z.as_array().conjugate()
    return complex(y.dy_minus * zm - y.dy_plus * zp - y.y_minus * dzm + y.y_plus * dzp)


def _scale(*arrays: np.ndarray) -> float:
    return max([1.0] + [float(np.max(np.abs(a))) for a in arrays])


def satisfies_interface(ext: TwoPointExtension, y: BoundaryData, tol: float = INTERFACE_TOL) -> bool:
    """Derivative continuity at -h and h plus the jump relation jumps = B @ derivatives"""
    derivative_gaps = np.array([y.dy_left_plus - y.dy_left_minus, y.dy_right_plus - y.dy_right_minus])
    b = ext.coupling.as_array()
    residual = y.jumps - b @ y.derivatives
    scale = _scale(y.as_array(), b) * _scale(y.derivatives)
    return bool(np.max(np.abs(derivative_gaps)) <= tol * scale and np.max(np.abs(residual)) <= tol * scale)


def satisfies_continuity(ext: ContinuityExtension, y: BoundaryData, tol: float = INTERFACE_TOL) -> bool:
    """Value continuity at -h and h plus derivative jumps = C @ values"""
    values = np.array([y.y_left_minus, y.y_right_minus])
    derivative_jumps = np.array([y.dy_left_plus - y.dy_left_minus, y.dy_right_plus - y.dy_right_minus])
    c = ext.coupling.as_array()
    scale = _scale(y.as_array(), c) * _scale(values)
    return bool(np.max(np.abs(y.jumps)) <= tol * scale
                and np.max(np.abs(derivative_jumps - c @ values)) <= tol * scale)


def satisfies_one_point(ext: OnePointExtension, y: OnePointBoundaryData, tol: float = INTERFACE_TOL) -> bool:
    kind = ext.kind
    scale = _scale(y.as_array())
    if isinstance(kind, DeltaKind):
        residuals = [y.y_plus - y.y_minus, y.dy_plus - y.dy_minus - kind.c * y.y_minus]
        scale *= max(1.0, abs(kind.c))
    else:
        inv_sum = 1.0 / kind.alpha + 1.0 / kind.beta
        inv_diff = 1.0 / kind.alpha - 1.0 / kind.beta
        residuals = [
            y.y_plus - 0.5 * (-inv_sum * y.dy_plus + inv_diff * y.dy_minus),
            y.y_minus - 0.5 * (-inv_diff * y.dy_plus + inv_sum * y.dy_minus),
        ]
        scale *= max(1.0, inv_sum)
    return bool(max(abs(r) for r in residuals) <= tol * scale)


def random_interface_data(ext: TwoPointExtension, rng: np.random.Generator) -> BoundaryData:
    """Random complex boundary data obeying derivative continuity and the jump relation"""
    def draw() -> complex:
        return complex(rng.normal(), rng.normal())

    derivatives = np.array([draw(), draw()])
    outer = np.array([draw(), draw()])  # y(-h-0), y(h-0)
    jumps = ext.coupling.as_array() @ derivatives
    return BoundaryData.continuous(
        y_left_minus=outer[0], y_left_plus=outer[0] + jumps[0],
        y_right_minus=outer[1], y_right_plus=outer[1] + jumps[1],
        dy_left=derivatives[0], dy_right=derivatives[1],
    )


def boundary_form_check(ext: TwoPointExtension, pairs: int = BOUNDARY_FORM_PAIRS,
                        seed: int = 0) -> float:
    """Largest scaled boundary form over seeded random interface-satisfying pairs"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        y = random_interface_data(ext, rng)
        z = random_interface_data(ext, rng)
        scale = _scale(y.as_array()) * _scale(z.as_array())
        worst = max(worst, abs(boundary_form_two_point(y, z)) / scale)
    return worst


def sweep_extensions(alphas: Iterable[float], betas: Iterable[float], hs: Iterable[float],
                     include_equal: Optional[bool] = True):
    """Generator-built extensions over a parameter grid"""
    betas = tuple(betas)
    hs = tuple(hs)
    for alpha in alphas:
        for beta in betas:
            if not include_equal and alpha == beta:
                continue
            for h in hs:
                yield build_two_point(alpha, beta, h)
