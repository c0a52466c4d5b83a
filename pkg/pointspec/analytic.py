"""Closed-form eigenfunctions, norms, overlaps and integrals"""
import logging
import math
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import PARITY_TOL
from .exceptions import DomainError
from .extensions import _require_positive
from .models import BoundaryData, OnePointBoundaryData

logger = logging.getLogger(__name__)

Parity = Literal["even", "odd", "none"]


class PiecewiseExpFunction(BaseModel):
    """A*exp(kappa x) + B*exp(-kappa x) on each interval cut out by the breakpoints.

    A point that coincides with a breakpoint is evaluated on the outer branch on
    its side; the last breakpoint belongs to the right tail. One-sided limits are
    available through ``side=-1`` / ``side=+1``.
    """
    model_config = ConfigDict(frozen=True)

    breakpoints: Tuple[float, ...]
    coefficients: Tuple[Tuple[float, float], ...]
    kappa: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_shape(self):
        if not self.breakpoints:
            raise ValueError("at least one breakpoint is required")
        if len(self.coefficients) != len(self.breakpoints) + 1:
            raise ValueError("need one coefficient pair per interval")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not all(math.isfinite(v) for pair in self.coefficients for v in pair):
            raise ValueError("coefficients must be finite")
        if self.coefficients[0][1] != 0.0:
            raise ValueError("leftmost interval must not grow towards -inf (B = 0)")
        if self.coefficients[-1][0] != 0.0:
            raise ValueError("rightmost interval must not grow towards +inf (A = 0)")
        return self

    def interval_index(self, x, side: int = 0) -> np.ndarray:
        bp = np.asarray(self.breakpoints)
        x = np.asarray(x, dtype=float)
        if side < 0:
            return np.searchsorted(bp, x, side="left")
        if side > 0:
            return np.searchsorted(bp, x, side="right")
        index = np.searchsorted(bp, x, side="left")
        return np.where(x == bp[-1], len(bp), index)

    def _evaluate(self, x, side, order: int):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        side = np.broadcast_to(np.asarray(side), x.shape)
        index = np.empty(x.shape, dtype=int)
        for s in (-1, 0, 1):
            mask = side == s
            if np.any(mask):
                index[mask] = self.interval_index(x[mask], s)
        coeffs = np.asarray(self.coefficients)
        grow, decay = coeffs[index, 0], coeffs[index, 1]
        k = self.kappa
        out = np.zeros(x.shape)
        # skip zero coefficients so tails never evaluate an overflowing exponential
        live = grow != 0.0
        out[live] += grow[live] * k ** order * np.exp(k * x[live])
        live = decay != 0.0
        out[live] += decay[live] * (-k) ** order * np.exp(-k * x[live])
        return float(out[0]) if scalar else out

    def value(self, x, side=0):
        return self._evaluate(x, side, 0)

    def derivative(self, x, side=0, order: int = 1):
        return self._evaluate(x, side, order)

    __call__ = value

    def _same_frame(self, other: "PiecewiseExpFunction"):
        if self.breakpoints != other.breakpoints or self.kappa != other.kappa:
            raise DomainError("functions must share breakpoints and decay rate")

    def _combine(self, other: "PiecewiseExpFunction", sign: float) -> "PiecewiseExpFunction":
        self._same_frame(other)
        coefficients = tuple((a1 + sign * a2, b1 + sign * b2)
                             for (a1, b1), (a2, b2) in zip(self.coefficients, other.coefficients))
        return PiecewiseExpFunction(breakpoints=self.breakpoints, coefficients=coefficients, kappa=self.kappa)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, factor: float) -> "PiecewiseExpFunction":
        coefficients = tuple((factor * a, factor * b) for a, b in self.coefficients)
        return PiecewiseExpFunction(breakpoints=self.breakpoints, coefficients=coefficients, kappa=self.kappa)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def extent(self, decay_lengths: float = 10.0) -> float:
        """Half-width beyond which the function is below exp(-decay_lengths) of its edge value"""
        return max(abs(b) for b in self.breakpoints) + decay_lengths / self.kappa


class SpectralPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(gt=0, allow_inf_nan=False)
    function: PiecewiseExpFunction
    parity: Parity

    @model_validator(mode="after")
    def _check_pair(self):
        if self.function.kappa != self.kappa:
            raise ValueError("function decay rate must equal kappa")
        if self.parity != "none" and detect_parity(self.function) != self.parity:
            raise ValueError(f"function is not {self.parity}")
        return self

    @property
    def energy(self) -> float:
        return -self.kappa ** 2


def detect_parity(f: PiecewiseExpFunction, samples: int = 50, tol: float = PARITY_TOL) -> Parity:
    xs = f.extent(3.0) * np.arange(1, samples + 1) / samples
    forward, backward = f.value(xs), f.value(-xs)
    scale = max(1.0, float(np.max(np.abs(forward))))
    if np.max(np.abs(forward - backward)) <= tol * scale:
        return "even"
    if np.max(np.abs(forward + backward)) <= tol * scale:
        return "odd"
    return "none"


# Eigenfunctions
def f_h(alpha: float, h: float) -> SpectralPair:
    """Even bound state with decay rate alpha, continuous derivative at -h and h"""
    _require_positive(alpha=alpha, h=h)
    inner = -math.exp(-alpha * h) / (2.0 * math.sinh(alpha * h))
    function = PiecewiseExpFunction(
        breakpoints=(-h, h),
        coefficients=((1.0, 0.0), (inner, inner), (0.0, 1.0)),
        kappa=alpha,
    )
    return SpectralPair(kappa=alpha, function=function, parity="even")


def g_h(beta: float, h: float) -> SpectralPair:
    """Odd bound state with decay rate beta, continuous derivative at -h and h"""
    _require_positive(beta=beta, h=h)
    inner = math.exp(-beta * h) / (2.0 * math.cosh(beta * h))
    function = PiecewiseExpFunction(
        breakpoints=(-h, h),
        coefficients=((1.0, 0.0), (inner, -inner), (0.0, -1.0)),
        kappa=beta,
    )
    return SpectralPair(kappa=beta, function=function, parity="odd")


def handed_states(alpha: float, h: float) -> Tuple[PiecewiseExpFunction, PiecewiseExpFunction]:
    """(f_h + g_h, f_h - g_h) at equal decay rates: zero for x >= h and for x <= -h"""
    even, odd = f_h(alpha, h).function, g_h(alpha, h).function
    return even + odd, even - odd


def one_point_eigenfunctions(alpha: float, beta: float) -> List[SpectralPair]:
    """Bound states of the one-point delta-prime interaction"""
    _require_positive(alpha=alpha, beta=beta)
    pairs = [
        SpectralPair(kappa=alpha, parity="even", function=PiecewiseExpFunction(
            breakpoints=(0.0,), coefficients=((1.0, 0.0), (0.0, 1.0)), kappa=alpha)),
        SpectralPair(kappa=beta, parity="odd", function=PiecewiseExpFunction(
            breakpoints=(0.0,), coefficients=((-1.0, 0.0), (0.0, 1.0)), kappa=beta)),
    ]
    if alpha == beta:
        # the barrier is not transitable: each half line carries its own bound state
        pairs.append(SpectralPair(kappa=alpha, parity="none", function=PiecewiseExpFunction(
            breakpoints=(0.0,), coefficients=((1.0, 0.0), (0.0, 0.0)), kappa=alpha)))
        pairs.append(SpectralPair(kappa=alpha, parity="none", function=PiecewiseExpFunction(
            breakpoints=(0.0,), coefficients=((0.0, 0.0), (0.0, 1.0)), kappa=alpha)))
    return pairs


def boundary_data(f: PiecewiseExpFunction, h: float) -> BoundaryData:
    """One-sided values and derivatives of f at -h and h"""
    points = np.array([-h, -h, h, h])
    sides = np.array([-1, 1, -1, 1])
    values = f.value(points, sides)
    slopes = f.derivative(points, sides)
    return BoundaryData(
        y_left_minus=values[0], y_left_plus=values[1], y_right_minus=values[2], y_right_plus=values[3],
        dy_left_minus=slopes[0], dy_left_plus=slopes[1], dy_right_minus=slopes[2], dy_right_plus=slopes[3],
    )


def one_point_boundary_data(f: PiecewiseExpFunction) -> OnePointBoundaryData:
    points = np.zeros(2)
    sides = np.array([-1, 1])
    values = f.value(points, sides)
    slopes = f.derivative(points, sides)
    return OnePointBoundaryData(y_minus=values[0], y_plus=values[1], dy_minus=slopes[0], dy_plus=slopes[1])


# Integrals
def _exp_integral(rate: float, a: float, b: float) -> float:
    """Integral of exp(rate x) over [a, b], allowing infinite ends where it converges"""
    if rate == 0.0:
        return b - a
    if math.isinf(a) or math.isinf(b):
        if math.isinf(a) and math.isinf(b):
            raise DomainError("exponential is not integrable over the whole line")
        if math.isinf(a):
            if rate < 0:
                raise DomainError("integral diverges at -inf")
            return math.exp(rate * b) / rate
        if rate > 0:
            raise DomainError("integral diverges at +inf")
        return -math.exp(rate * a) / rate
    # 2 sinh form avoids cancellation on short intervals
    return math.exp(rate * (a + b) / 2.0) * 2.0 * math.sinh(rate * (b - a) / 2.0) / rate


def _pieces(functions: Sequence[PiecewiseExpFunction], lower: float, upper: float):
    cuts = sorted({lower, upper, *(b for f in functions for b in f.breakpoints if lower < b < upper)})
    for a, b in zip(cuts, cuts[1:]):
        if math.isinf(a):
            inside = b - 1.0
        elif math.isinf(b):
            inside = a + 1.0
        else:
            inside = 0.5 * (a + b)
        yield a, b, [f.coefficients[int(f.interval_index(inside))] for f in functions]


def integrate(f: PiecewiseExpFunction, lower: float = -math.inf, upper: float = math.inf) -> float:
    total = 0.0
    for a, b, ((grow, decay),) in _pieces([f], lower, upper):
        if grow != 0.0:
            total += grow * _exp_integral(f.kappa, a, b)
        if decay != 0.0:
            total += decay * _exp_integral(-f.kappa, a, b)
    return total


def overlap(f: PiecewiseExpFunction, g: PiecewiseExpFunction,
            lower: float = -math.inf, upper: float = math.inf) -> float:
    """Closed-form integral of f*g over [lower, upper] (real functions, so symmetric)"""
    k1, k2 = f.kappa, g.kappa
    total = 0.0
    for a, b, ((a1, b1), (a2, b2)) in _pieces([f, g], lower, upper):
        for weight, rate in ((a1 * a2, k1 + k2), (a1 * b2, k1 - k2),
                             (b1 * a2, k2 - k1), (b1 * b2, -(k1 + k2))):
            if weight != 0.0:
                total += weight * _exp_integral(rate, a, b)
    return total


def l2_norm(f: PiecewiseExpFunction) -> float:
    return math.sqrt(overlap(f, f))


def normalize(pair: SpectralPair) -> SpectralPair:
    norm = l2_norm(pair.function)
    return SpectralPair(kappa=pair.kappa, function=pair.function * (1.0 / norm), parity=pair.parity)


def region_gram(first: PiecewiseExpFunction, second: PiecewiseExpFunction,
                lower: float, upper: float) -> np.ndarray:
    """2x2 Gram matrix of (first, second) restricted to [lower, upper]"""
    cross = overlap(first, second, lower, upper)
    return np.array([[overlap(first, first, lower, upper), cross],
                     [cross, overlap(second, second, lower, upper)]])


def integral_over_gap(alpha: float, h: float) -> float:
    """Integral of f_h over (-h, h); equals -2 exp(-alpha h) / alpha"""
    return integrate(f_h(alpha, h).function, -h, h)


# Diagnostics
def ode_residual(pair: SpectralPair, xs: Optional[Iterable[float]] = None) -> float:
    """max |-f'' - energy*f| away from breakpoints, from exact coefficient derivatives"""
    f = pair.function
    if xs is None:
        xs = np.linspace(-f.extent(5.0), f.extent(5.0), 201)
    xs = np.asarray(list(xs), dtype=float)
    xs = xs[~np.isin(xs, f.breakpoints)]
    residual = -f.derivative(xs, order=2) - pair.energy * f.value(xs)
    return float(np.max(np.abs(residual)))


def sample(f: PiecewiseExpFunction, xs: Iterable[float]) -> pd.DataFrame:
    xs = np.asarray(list(xs), dtype=float)
    return pd.DataFrame({"x": xs, "value": f.value(xs), "derivative": f.derivative(xs)})


def small_h_profile(alpha: float, hs: Iterable[float], x_min: float = 0.5,
                    x_max: float = 5.0, samples: int = 101) -> List[Dict[str, float]]:
    """Pointwise distance of f_h from exp(-alpha|x|) outside the gap, and the gap integral.

    The gap integral tends to -2/alpha as h -> 0 while the function itself does
    not converge in L2; only the pointwise tails approach exp(-alpha|x|).
    """
    rows = []
    for h in hs:
        f = f_h(alpha, h).function
        xs = np.linspace(max(x_min, h), x_max, samples)
        xs = np.concatenate([-xs, xs])
        distance = float(np.max(np.abs(f.value(xs) - np.exp(-alpha * np.abs(xs)))))
        rows.append({"h": h, "tail_distance": distance, "gap_integral": integral_over_gap(alpha, h)})
    return rows
