"""Grid time evolution, the two-level oracle and the phase-kick dephasing ensemble

Units are hbar = 1 and 2m = 1, so the operator is -d^2/dx^2. The Hamiltonian
is discretized through its quadratic form: piecewise-linear functions on each
region with a lumped mass, the value at every interface node duplicated into a
left and a right copy, homogeneous Dirichlet ends at -L and L, and the
interface conditions entering as an exact boundary term on the copies.
"""
import logging
import math
from functools import cached_property
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import eigsh

from . import analytic
from .constants import DECAY_LENGTHS, DENSITY_ULPS, ENSEMBLE_SIZE, HERMITICITY_RTOL, MIN_GRID_POINTS, SEED
from .exceptions import (
    ConstructionError, DegenerateMatrixError, DomainError, NumericalError, UnsupportedKindError,
)
from .extensions import _require_positive
from .models import DeltaKind, OnePointExtension, TwoPointExtension

logger = logging.getLogger(__name__)

GridExtension = Union[TwoPointExtension, OnePointExtension]


class GridLayout(NamedTuple):
    positions: np.ndarray
    sides: np.ndarray  # -1 / +1 on interface copies, 0 elsewhere
    weights: np.ndarray
    regions: np.ndarray
    left_copies: np.ndarray
    right_copies: np.ndarray


# Grid
class GridSpec(BaseModel):
    """Uniform grid on [-L, L] with every interface on a node"""
    model_config = ConfigDict(frozen=True)

    L: float = Field(gt=0)
    dx: float = Field(gt=0)
    half_nodes: int = Field(ge=1)
    interfaces: Tuple[float, ...]
    requested_points: int

    @classmethod
    def build(cls, L: float, n: int, interfaces: Sequence[float]) -> "GridSpec":
        """Adjust the spacing so the interfaces are nodes; L may grow by less than one step"""
        _require_positive(L=L)
        if n < MIN_GRID_POINTS:
            raise DomainError(f"n must be at least {MIN_GRID_POINTS}, got {n}")
        interfaces = tuple(sorted(interfaces))
        if not interfaces or any(abs(p) >= L for p in interfaces):
            raise DomainError(f"interfaces {interfaces!r} must lie strictly inside (-{L}, {L})")
        dx0 = 2.0 * L / (n - 1)
        outer = max(abs(p) for p in interfaces)
        if outer > 0:
            steps = max(1, round(outer / dx0))
            dx = outer / steps
            half_nodes = math.ceil(L / dx - 1e-9)
        else:
            half_nodes = max(1, round(L / dx0))
            dx = L / half_nodes
        for p in interfaces:
            if abs(p / dx - round(p / dx)) > 1e-9:
                raise DomainError(f"interface {p!r} does not fall on a node of spacing {dx!r}")
        grid = cls(L=half_nodes * dx, dx=dx, half_nodes=half_nodes, interfaces=interfaces,
                   requested_points=n)
        logger.debug("grid L=%r dx=%r unknowns=%d", grid.L, dx, grid.size)
        return grid

    @classmethod
    def covering(cls, ext: GridExtension, kappa_min: float, L: float, n: int) -> "GridSpec":
        """Grid for ext, checking that [-L, L] holds DECAY_LENGTHS decay lengths past the interaction"""
        _require_positive(kappa_min=kappa_min)
        interfaces = interfaces_of(ext)
        needed = max(abs(p) for p in interfaces) + DECAY_LENGTHS / kappa_min
        if L <= needed:
            raise DomainError(f"L={L!r} too small: need L > {needed!r} for kappa_min={kappa_min!r}")
        return cls.build(L, n, interfaces)

    @cached_property
    def layout(self) -> GridLayout:
        nodes = {self.half_nodes + round(p / self.dx): k for k, p in enumerate(self.interfaces)}
        positions, sides, weights, regions = [], [], [], []
        left_copies, right_copies = [], []

        def add(x, side, weight, region):
            positions.append(x)
            sides.append(side)
            weights.append(weight)
            regions.append(region)

        region = 0
        for j in range(1, 2 * self.half_nodes):
            if j not in nodes:
                add((j - self.half_nodes) * self.dx, 0, self.dx, region)
                continue
            # interface copies sit exactly on the interface, not on j*dx
            p = self.interfaces[nodes[j]]
            left_copies.append(len(positions))
            add(p, -1, 0.5 * self.dx, region)
            region += 1
            right_copies.append(len(positions))
            add(p, 1, 0.5 * self.dx, region)
        return GridLayout(np.array(positions), np.array(sides), np.array(weights), np.array(regions),
                          np.array(left_copies), np.array(right_copies))

    @property
    def size(self) -> int:
        return 2 * self.half_nodes - 1 + len(self.interfaces)

    @property
    def region_count(self) -> int:
        return len(self.interfaces) + 1


def interfaces_of(ext: GridExtension) -> Tuple[float, ...]:
    if isinstance(ext, TwoPointExtension):
        return (-ext.h, ext.h)
    if isinstance(ext.kind, DeltaKind):
        raise UnsupportedKindError("the delta interaction has no grid discretization")
    return (0.0,)


# States
class GridState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridSpec
    amplitudes: np.ndarray

    @model_validator(mode="after")
    def _check_amplitudes(self):
        if self.amplitudes.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} amplitudes, got shape {self.amplitudes.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")
        if not np.any(self.amplitudes):
            raise ValueError("state must have positive norm")
        return self

    @classmethod
    def sample(cls, grid: GridSpec, f: analytic.PiecewiseExpFunction) -> "GridState":
        layout = grid.layout
        values = f.value(layout.positions, layout.sides)
        return cls(grid=grid, amplitudes=np.asarray(values, dtype=complex))

    @classmethod
    def superpose(cls, grid: GridSpec,
                  terms: Sequence[Tuple[complex, analytic.PiecewiseExpFunction]]) -> "GridState":
        """Sampled sum of weighted functions; the decay rates may differ"""
        layout = grid.layout
        values = sum(weight * f.value(layout.positions, layout.sides) for weight, f in terms)
        return cls(grid=grid, amplitudes=np.asarray(values, dtype=complex))

    @classmethod
    def gaussian(cls, grid: GridSpec, x0: float, sigma: float, k0: float = 0.0) -> "GridState":
        x = grid.layout.positions
        values = np.exp(-((x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * k0 * x)
        return cls(grid=grid, amplitudes=values)

    def restricted(self, regions: Iterable[int]) -> "GridState":
        """Zero every amplitude outside the given regions (0 is leftmost)"""
        keep = np.isin(self.grid.layout.regions, list(regions))
        return GridState(grid=self.grid, amplitudes=np.where(keep, self.amplitudes, 0.0))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.grid.layout.weights * self.density())))

    def normalized(self) -> "GridState":
        return GridState(grid=self.grid, amplitudes=self.amplitudes / self.norm())

    def overlap(self, other: "GridState") -> complex:
        """<self, other> with the trapezoid weights"""
        return complex(np.sum(self.grid.layout.weights * np.conj(self.amplitudes) * other.amplitudes))

    def side_probabilities(self) -> Tuple[float, float, float]:
        """(P_left, P_gap, P_right); P_gap is 0 for a single interface"""
        return side_probabilities(self.grid, self.density())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.grid.layout.positions,
                             "re": self.amplitudes.real, "im": self.amplitudes.imag})


def side_probabilities(grid: GridSpec, density: np.ndarray) -> Tuple[float, float, float]:
    layout = grid.layout
    mass = layout.weights * density
    totals = [float(np.sum(mass[layout.regions == r])) for r in range(grid.region_count)]
    if grid.region_count == 2:
        return totals[0], 0.0, totals[1]
    return totals[0], totals[1], totals[2]


# Hamiltonian
class DiscreteHamiltonian:
    """H = W^-1 K with K = T0 + P^T G^-1 P.

    T0 is the tridiagonal second-difference form, P maps unknowns to interface
    data (value jumps for two points, the one-sided values for one point) and
    G is the coupling B or -S from the boundary term.

    Eigenvalues converge at second order in dx. The pointwise residual of a
    sampled exact eigenfunction is O(dx^2) at interior nodes but O(dx) on the
    half-weight interface copies, so its weighted norm falls as dx^1.5. A
    symmetric K with a diagonal mass cannot close the boundary rows at higher
    order.
    """

    def __init__(self, ext: GridExtension, grid: GridSpec):
        self.extension = ext
        self.grid = grid
        layout = grid.layout
        size = grid.size
        self.weights = layout.weights

        self.diagonal = np.zeros(size)
        same_region = layout.regions[1:] == layout.regions[:-1]
        edge = np.where(same_region, 1.0 / grid.dx, 0.0)
        self.offdiagonal = -edge
        self.diagonal[:-1] += edge
        self.diagonal[1:] += edge
        # Dirichlet ends
        self.diagonal[0] += 1.0 / grid.dx
        self.diagonal[-1] += 1.0 / grid.dx

        self.border, self.coupling = self._border(ext, layout)
        try:
            self.coupling_inverse = np.linalg.inv(self.coupling)
        except np.linalg.LinAlgError:
            raise DegenerateMatrixError("coupling matrix is singular; no discrete boundary term")

    @staticmethod
    def _border(ext: GridExtension, layout: GridLayout) -> Tuple[sparse.csr_matrix, np.ndarray]:
        size = len(layout.positions)
        count = len(layout.left_copies)
        if isinstance(ext, TwoPointExtension):
            rows = np.concatenate([np.arange(count), np.arange(count)])
            cols = np.concatenate([layout.right_copies, layout.left_copies])
            data = np.concatenate([np.ones(count), -np.ones(count)])
            border = sparse.csr_matrix((data, (rows, cols)), shape=(count, size))
            return border, ext.coupling.as_array()
        kind = ext.kind
        s = 0.5 * (1.0 / kind.alpha + 1.0 / kind.beta)
        d = 0.5 * (1.0 / kind.alpha - 1.0 / kind.beta)
        cols = np.array([layout.left_copies[0], layout.right_copies[0]])
        border = sparse.csr_matrix((np.ones(2), (np.arange(2), cols)), shape=(2, size))
        return border, -np.array([[s, d], [d, s]])

    @classmethod
    def discretize(cls, ext: GridExtension, grid: GridSpec) -> "DiscreteHamiltonian":
        interfaces_of(ext)
        hamiltonian = cls(ext, grid)
        defect = hamiltonian.hermiticity_defect()
        if defect > HERMITICITY_RTOL:
            raise ConstructionError(f"discrete Hamiltonian not Hermitian: relative defect {defect:.3e}")
        logger.info("discretized %s on %d unknowns (dx=%g, hermiticity defect %.1e)",
                    type(ext).__name__, grid.size, grid.dx, defect)
        return hamiltonian

    def stiffness(self) -> sparse.csr_matrix:
        """K, the matrix of the quadratic form"""
        tridiagonal = sparse.diags([self.offdiagonal, self.diagonal, self.offdiagonal], [-1, 0, 1])
        boundary = self.border.T @ sparse.csr_matrix(self.coupling_inverse) @ self.border
        return sparse.csr_matrix(tridiagonal + boundary)

    def matrix(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(sparse.diags(1.0 / self.weights) @ self.stiffness())

    def hermiticity_defect(self) -> float:
        """max |WH - (WH)^T| / max |WH|; Hermitian in the weighted inner product when zero"""
        k = self.stiffness()
        return float(abs(k - k.T).max() / abs(k).max())

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.form(u) / self.weights

    def _tridiagonal_product(self, u: np.ndarray) -> np.ndarray:
        out = self.diagonal * u
        out[:-1] += self.offdiagonal * u[1:]
        out[1:] += self.offdiagonal * u[:-1]
        return out

    def form(self, u: np.ndarray) -> np.ndarray:
        return self._tridiagonal_product(u) + self.border.T @ (self.coupling_inverse @ (self.border @ u))

    def default_floor(self) -> float:
        ext = self.extension
        if isinstance(ext, TwoPointExtension) and ext.generator is not None:
            kappa = max(ext.generator.alpha, ext.generator.beta)
        elif isinstance(ext, OnePointExtension):
            kappa = max(ext.kind.alpha, ext.kind.beta)
        else:
            k = self.stiffness()
            radius = np.asarray(abs(k).sum(axis=1)).ravel() - abs(k.diagonal())
            return float(np.min((k.diagonal() - radius) / self.weights)) - 1.0
        return -(1.1 * kappa) ** 2 - 0.1

    def lowest_levels(self, count: int, floor: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Lowest discrete eigenvalues and W-orthonormal eigenvectors by shift-invert"""
        sigma = self.default_floor() if floor is None else floor
        values, vectors = eigsh(sparse.csc_matrix(self.stiffness()), k=count,
                                M=sparse.diags(self.weights).tocsc(), sigma=sigma, which="LM")
        order = np.argsort(values)
        return values[order], vectors[:, order]


def eigen_residual(hamiltonian: DiscreteHamiltonian, state: GridState, energy: float) -> float:
    """||H u - energy u|| / ||u|| in the weighted norm"""
    u = state.amplitudes
    residual = hamiltonian.apply(u) - energy * u
    weights = hamiltonian.weights
    return math.sqrt(float(np.sum(weights * np.abs(residual) ** 2) / np.sum(weights * np.abs(u) ** 2)))


# Time stepping
class EvolutionReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: List[float] = []
    norms: List[float] = []
    p_left: List[float] = []
    p_gap: List[float] = []
    p_right: List[float] = []
    overlaps: Dict[str, List[complex]] = {}
    final: Optional[GridState] = None

    def record(self, t: float, state: np.ndarray, grid: GridSpec, references: Dict[str, GridState]):
        density = np.abs(state) ** 2
        left, gap, right = side_probabilities(grid, density)
        self.times.append(t)
        self.norms.append(math.sqrt(float(np.sum(grid.layout.weights * density))))
        self.p_left.append(left)
        self.p_gap.append(gap)
        self.p_right.append(right)
        for name, reference in references.items():
            value = complex(np.sum(grid.layout.weights * np.conj(reference.amplitudes) * state))
            self.overlaps.setdefault(name, []).append(value)

    def max_norm_drift(self) -> float:
        norms = np.asarray(self.norms)
        return float(np.max(np.abs(norms - norms[0])))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.times, "norm": self.norms, "p_left": self.p_left,
                              "p_gap": self.p_gap, "p_right": self.p_right})
        for name, values in self.overlaps.items():
            values = np.asarray(values)
            frame[f"overlap_{name}_re"] = values.real
            frame[f"overlap_{name}_im"] = values.imag
        return frame


class GridPropagator:
    """Crank-Nicolson steps (W + i dt/2 K) psi' = (W - i dt/2 K) psi.

    The left side is tridiagonal plus the rank-r interface term, solved by a
    banded solve and a Woodbury correction with an r x r capacitance matrix.
    """

    def __init__(self, hamiltonian: DiscreteHamiltonian, dt: float):
        _require_positive(dt=dt)
        self.hamiltonian = hamiltonian
        self.dt = dt
        half = 0.5j * dt
        weights = hamiltonian.weights
        size = len(weights)
        self.banded = np.zeros((3, size), dtype=complex)
        self.banded[0, 1:] = half * hamiltonian.offdiagonal
        self.banded[1] = weights + half * hamiltonian.diagonal
        self.banded[2, :-1] = half * hamiltonian.offdiagonal

        border = hamiltonian.border
        self.correction = self._solve(border.T.toarray().astype(complex))
        capacitance = -(2j / dt) * hamiltonian.coupling + border @ self.correction
        try:
            self.capacitance_inverse = np.linalg.inv(capacitance)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"singular capacitance matrix: {e}")

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self.banded, rhs, check_finite=False)

    def step(self, psi: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        rhs = h.weights * psi - 0.5j * self.dt * h.form(psi)
        y = self._solve(rhs)
        return y - self.correction @ (self.capacitance_inverse @ (h.border @ y))


def evolve(hamiltonian: DiscreteHamiltonian, initial: GridState, dt: float, steps: int,
           references: Optional[Dict[str, GridState]] = None) -> EvolutionReport:
    """Run `steps` Crank-Nicolson steps, recording observables after each"""
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    references = references or {}
    propagator = GridPropagator(hamiltonian, dt)
    grid = initial.grid
    psi = initial.amplitudes.astype(complex)
    report = EvolutionReport()
    report.record(0.0, psi, grid, references)
    for k in range(1, steps + 1):
        try:
            psi = propagator.step(psi)
        except (ValueError, np.linalg.LinAlgError) as e:
            raise NumericalError(f"Crank-Nicolson solve failed: {e}", step=k)
        if not np.all(np.isfinite(psi)):
            raise NumericalError("state became non-finite", step=k)
        report.record(k * dt, psi, grid, references)
    report.final = GridState(grid=grid, amplitudes=psi)
    logger.info("evolved %d steps of dt=%g, norm drift %.2e", steps, dt, report.max_norm_drift())
    return report


# Two-level oracle
def two_level_evolution(c_even: complex, c_odd: complex, lambda_even: float, lambda_odd: float,
                        t, grams: Dict[str, np.ndarray]):
    """Region probabilities of c_e exp(-i l_e t) e + c_o exp(-i l_o t) o from the region Gram matrices.

    Returns ({region: probability}, amplitudes) with amplitudes of shape (len(t), 2).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    amplitudes = np.stack([c_even * np.exp(-1j * lambda_even * t),
                           c_odd * np.exp(-1j * lambda_odd * t)], axis=1)
    probabilities = {
        region: np.real(np.einsum("ti,ij,tj->t", np.conj(amplitudes), gram, amplitudes))
        for region, gram in grams.items()
    }
    return probabilities, amplitudes


class TwoLevelOracle:
    """Exact dynamics inside the span of an even and an odd bound state"""

    def __init__(self, even: analytic.SpectralPair, odd: analytic.SpectralPair, h: float):
        self.even_norm = analytic.l2_norm(even.function)
        self.odd_norm = analytic.l2_norm(odd.function)
        self.even = analytic.normalize(even)
        self.odd = analytic.normalize(odd)
        self.h = h
        e, o = self.even.function, self.odd.function
        self.grams = {
            "left": analytic.region_gram(e, o, -math.inf, -h),
            "gap": analytic.region_gram(e, o, -h, h),
            "right": analytic.region_gram(e, o, h, math.inf),
        }

    def coefficients(self, weight_even: float = 1.0, weight_odd: float = 1.0) -> Tuple[float, float]:
        """Unit-norm coefficients of weight_even * even + weight_odd * odd, both taken as given"""
        even = weight_even * self.even_norm
        odd = weight_odd * self.odd_norm
        total = math.hypot(even, odd)
        return even / total, odd / total

    @property
    def period(self) -> float:
        split = abs(self.even.energy - self.odd.energy)
        return math.inf if split == 0 else 2.0 * math.pi / split

    def probabilities(self, times, weight_even: float = 1.0, weight_odd: float = 1.0) -> Dict[str, np.ndarray]:
        c_even, c_odd = self.coefficients(weight_even, weight_odd)
        probabilities, _ = two_level_evolution(c_even, c_odd, self.even.energy, self.odd.energy,
                                               times, self.grams)
        return probabilities


def estimate_period(times: Sequence[float], series: Sequence[float]) -> float:
    """Mean spacing of upward crossings of the series mean, linearly interpolated"""
    t = np.asarray(times, dtype=float)
    s = np.asarray(series, dtype=float)
    level = s.mean()
    below = s[:-1] < level
    upward = np.nonzero(below & (s[1:] >= level))[0]
    if len(upward) < 2:
        raise NumericalError(f"need two upward crossings to estimate a period, found {len(upward)}")
    crossings = t[upward] + (level - s[upward]) * (t[upward + 1] - t[upward]) / (s[upward + 1] - s[upward])
    return float(np.mean(np.diff(crossings)))


# Refinement
def refinement_study(ext: GridExtension, exact_levels: Sequence[float], L: float,
                     ns: Sequence[int]) -> List[Dict[str, float]]:
    """Largest discrete eigenvalue error against exact_levels for each grid size"""
    exact = np.sort(np.asarray(exact_levels, dtype=float))
    rows = []
    for n in ns:
        grid = GridSpec.build(L, n, interfaces_of(ext))
        levels, _ = DiscreteHamiltonian.discretize(ext, grid).lowest_levels(len(exact))
        error = float(np.max(np.abs(levels - exact)))
        logger.debug("n=%d dx=%g eigenvalue error %.3e", n, grid.dx, error)
        rows.append({"n": n, "dx": grid.dx, "error": error})
    return rows


def residual_study(ext: GridExtension, pair: analytic.SpectralPair, L: float,
                   ns: Sequence[int]) -> List[Dict[str, float]]:
    """eigen_residual of the sampled pair for each grid size, in the refinement_study row format"""
    rows = []
    for n in ns:
        grid = GridSpec.build(L, n, interfaces_of(ext))
        hamiltonian = DiscreteHamiltonian.discretize(ext, grid)
        error = eigen_residual(hamiltonian, GridState.sample(grid, pair.function), pair.energy)
        logger.debug("n=%d dx=%g eigen residual %.3e", n, grid.dx, error)
        rows.append({"n": n, "dx": grid.dx, "error": error})
    return rows


def convergence_order(rows: Sequence[Dict[str, float]]) -> float:
    """Least-squares slope of log(error) against log(dx)"""
    dx = np.log([row["dx"] for row in rows])
    error = np.log([row["error"] for row in rows])
    slope, _ = np.polyfit(dx, error, 1)
    return float(slope)


# Dephasing
class KickedState:
    """A state with a phase factor applied on the masked unknowns"""

    def __init__(self, base: GridState, factor: complex, mask: np.ndarray):
        self.base = base
        self.factor = factor
        self.mask = mask

    @classmethod
    def rotated(cls, base: GridState, theta: float, mask: np.ndarray) -> "KickedState":
        return cls(base, complex(np.exp(1j * theta)), mask)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.where(self.mask, self.factor * self.base.amplitudes, self.base.amplitudes)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, reference: GridState) -> complex:
        weights = self.base.grid.layout.weights
        return complex(np.sum(weights * np.conj(reference.amplitudes) * self.amplitudes))


class OverlapAverage(BaseModel):
    mean_squared: float
    incoherent: float  # |a|^2 + |b|^2 from the unkicked and kicked parts
    cross_term: float


class DephasingReport(BaseModel):
    """Ensemble averages; density_deviation is the largest relative change of any member's density"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ensemble_size: int
    region: str
    density: np.ndarray
    p_left: float
    p_gap: float
    p_right: float
    density_deviation: float
    tolerance: float
    overlaps: Dict[str, OverlapAverage] = {}

    @property
    def invariant(self) -> bool:
        return self.density_deviation <= self.tolerance


def kick_mask(grid: GridSpec, region: str) -> np.ndarray:
    layout = grid.layout
    if region == "positive":
        edge = 0.0
    elif region == "outside":
        edge = grid.interfaces[-1]
    else:
        raise DomainError(f"unknown dephasing region {region!r}")
    return (layout.positions > edge) | ((layout.positions == edge) & (layout.sides > 0))


def _relative_deviation(density: np.ndarray, reference: np.ndarray) -> float:
    # a zero amplitude stays exactly zero under any kick
    scale = np.where(reference > 0.0, reference, 1.0)
    return float(np.max(np.abs(density - reference) / scale))


def dephase(state: GridState, ensemble_size: int = ENSEMBLE_SIZE, seed: int = SEED,
            references: Optional[Dict[str, GridState]] = None, region: str = "positive",
            phases: Optional[Sequence[float]] = None,
            kicks: Optional[Sequence[complex]] = None) -> DephasingReport:
    """Average observables over members kicked by exp(i theta_j), theta_j uniform on [0, 2 pi)

    phases fixes the theta_j; kicks replaces the phase factors outright.
    """
    if ensemble_size < 1:
        raise DomainError(f"ensemble size must be positive, got {ensemble_size}")
    if phases is not None and kicks is not None:
        raise DomainError("give phases or kicks, not both")
    forced = phases if phases is not None else kicks
    if forced is not None and len(forced) != ensemble_size:
        raise DomainError(f"got {len(forced)} kicks for an ensemble of {ensemble_size}")
    references = references or {}
    mask = kick_mask(state.grid, region)
    before = state.density()
    weights = state.grid.layout.weights

    deviation = 0.0
    total = np.zeros_like(before)
    squared = {name: 0.0 for name in references}
    for j in range(ensemble_size):
        if kicks is not None:
            member = KickedState(state, complex(kicks[j]), mask)
        else:
            theta = phases[j] if phases is not None else np.random.default_rng(seed + j).uniform(0.0, 2.0 * math.pi)
            member = KickedState.rotated(state, float(theta), mask)
        density = member.density()
        deviation = max(deviation, _relative_deviation(density, before))
        total += density
        for name, reference in references.items():
            squared[name] += abs(member.overlap(reference)) ** 2

    overlaps = {}
    for name, reference in references.items():
        products = weights * np.conj(reference.amplitudes) * state.amplitudes
        unkicked = complex(np.sum(products[~mask]))
        kicked = complex(np.sum(products[mask]))
        mean_squared = squared[name] / ensemble_size
        incoherent = abs(unkicked) ** 2 + abs(kicked) ** 2
        overlaps[name] = OverlapAverage(mean_squared=mean_squared, incoherent=incoherent,
                                        cross_term=mean_squared - incoherent)
    density = total / ensemble_size
    p_left, p_gap, p_right = side_probabilities(state.grid, density)
    report = DephasingReport(ensemble_size=ensemble_size, region=region, density=density,
                             p_left=p_left, p_gap=p_gap, p_right=p_right,
                             density_deviation=deviation, tolerance=DENSITY_ULPS * np.finfo(float).eps,
                             overlaps=overlaps)
    if not report.invariant:
        logger.warning("member densities changed under the dephasing channel: relative deviation %.3e",
                       deviation)
    logger.info("dephased %d members over region %s", ensemble_size, region)
    return report
