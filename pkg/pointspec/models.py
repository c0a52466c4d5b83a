import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import (
    DEPHASING_REGIONS, ENSEMBLE_SIZE, GENERATOR_RTOL, GRID_HALF_WIDTH, GRID_POINTS,
    INITIAL_STATES, INTERACTIONS, KAPPA_RANGE, MIN_GRID_POINTS, MODES, REPORT_VERSION,
    SCAN_POINTS, SEED, SYMMETRY_RTOL, TIME_STEP, TIME_STEPS, VERIFY_TOL,
)

PositiveLength = Annotated[float, Field(gt=0, allow_inf_nan=False)]


def generator_entries(alpha: float, beta: float, h: float) -> Tuple[float, float]:
    """Diagonal and off-diagonal coupling entries for the (alpha, beta, h) slice"""
    if alpha == beta:
        # closed form for the entangled case keeps b12/b11 = -exp(-2 alpha h) to roundoff
        denominator = alpha * -math.expm1(-4.0 * alpha * h)
        return -2.0 / denominator, 2.0 * math.exp(-2.0 * alpha * h) / denominator
    even_part = 1.0 / (alpha * -math.expm1(-2.0 * alpha * h))
    odd_part = 1.0 / (beta * (1.0 + math.exp(-2.0 * beta * h)))
    return -(even_part + odd_part), even_part - odd_part


# Coupling matrices
class CouplingMatrix(BaseModel):
    """Value jumps at (-h, h) as a linear image of the derivatives there (units of length)"""
    model_config = ConfigDict(frozen=True)

    b11: float = Field(allow_inf_nan=False)
    b12: float = Field(allow_inf_nan=False)
    b21: float = Field(allow_inf_nan=False)
    b22: float = Field(allow_inf_nan=False)

    @model_validator(mode="after")
    def _require_symmetry(self):
        if not math.isclose(self.b12, self.b21, rel_tol=SYMMETRY_RTOL, abs_tol=0.0):
            raise ValueError(f"coupling matrix must be symmetric, got b12={self.b12!r}, b21={self.b21!r}")
        return self

    @classmethod
    def symmetric(cls, b11: float, b12: float, b22: float) -> "CouplingMatrix":
        return cls(b11=b11, b12=b12, b21=b12, b22=b22)

    @property
    def parity_symmetric(self) -> bool:
        return (math.isclose(self.b11, self.b22, rel_tol=SYMMETRY_RTOL, abs_tol=0.0)
                and math.isclose(self.b12, self.b21, rel_tol=SYMMETRY_RTOL, abs_tol=0.0))

    @property
    def determinant(self) -> float:
        return self.b11 * self.b22 - self.b12 * self.b21

    def as_array(self) -> np.ndarray:
        return np.array([[self.b11, self.b12], [self.b21, self.b22]], dtype=float)

    def as_rows(self) -> List[List[float]]:
        return [[self.b11, self.b12], [self.b21, self.b22]]


class GeneratorParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: PositiveLength
    beta: PositiveLength


# Extensions
class TwoPointExtension(BaseModel):
    """Derivative-continuous extension with value jumps at -h and h"""
    model_config = ConfigDict(frozen=True)

    h: PositiveLength
    coupling: CouplingMatrix
    generator: Optional[GeneratorParams] = None

    @model_validator(mode="after")
    def _check_generator(self):
        if self.generator is None:
            return self
        b11, b12 = generator_entries(self.generator.alpha, self.generator.beta, self.h)
        expected = np.array([[b11, b12], [b12, b11]])
        scale = np.max(np.abs(expected))
        if np.max(np.abs(self.coupling.as_array() - expected)) > GENERATOR_RTOL * scale:
            raise ValueError("coupling matrix does not match its generator parameters")
        return self


class ContinuityExtension(BaseModel):
    """Value-continuous two-point family: derivative jumps = C x values at (-h, h)"""
    model_config = ConfigDict(frozen=True)

    h: PositiveLength
    coupling: CouplingMatrix


class DeltaKind(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: Literal["delta"] = "delta"
    c: float = Field(allow_inf_nan=False)


class DeltaPrimeKind(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: Literal["delta-prime"] = "delta-prime"
    alpha: PositiveLength
    beta: PositiveLength


class OnePointExtension(BaseModel):
    """Point interaction at the origin"""
    model_config = ConfigDict(frozen=True)

    kind: Union[DeltaKind, DeltaPrimeKind] = Field(discriminator="name")


Extension = Union[TwoPointExtension, OnePointExtension]


# Boundary values
def _as_complex(value) -> complex:
    return complex(value)


class BoundaryData(BaseModel):
    """One-sided values and derivatives at -h and h"""
    model_config = ConfigDict(frozen=True)

    y_left_minus: complex
    y_left_plus: complex
    y_right_minus: complex
    y_right_plus: complex
    dy_left_minus: complex
    dy_left_plus: complex
    dy_right_minus: complex
    dy_right_plus: complex

    @field_validator("*", mode="before")
    @classmethod
    def _coerce(cls, value):
        value = _as_complex(value)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ValueError("boundary values must be finite")
        return value

    @classmethod
    def continuous(cls, y_left_minus, y_left_plus, y_right_minus, y_right_plus,
                   dy_left, dy_right) -> "BoundaryData":
        return cls(y_left_minus=y_left_minus, y_left_plus=y_left_plus,
                   y_right_minus=y_right_minus, y_right_plus=y_right_plus,
                   dy_left_minus=dy_left, dy_left_plus=dy_left,
                   dy_right_minus=dy_right, dy_right_plus=dy_right)

    @property
    def jumps(self) -> np.ndarray:
        return np.array([self.y_left_plus - self.y_left_minus,
                         self.y_right_plus - self.y_right_minus])

    @property
    def derivatives(self) -> np.ndarray:
        return np.array([self.dy_left_minus, self.dy_right_minus])

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in type(self).model_fields])


class OnePointBoundaryData(BaseModel):
    """One-sided values and derivatives at the origin"""
    model_config = ConfigDict(frozen=True)

    y_minus: complex
    y_plus: complex
    dy_minus: complex
    dy_plus: complex

    @field_validator("*", mode="before")
    @classmethod
    def _coerce(cls, value):
        value = _as_complex(value)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ValueError("boundary values must be finite")
        return value

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in type(self).model_fields])


# Reports
class CheckResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    value: Optional[float] = None
    tolerance: float
    passed: bool = Field(alias="pass")


class ExtensionSummary(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    h: Optional[float] = None
    coupling: Optional[List[List[float]]] = Field(default=None, alias="B")
    local: Optional[bool] = None
    parity_symmetric: Optional[bool] = None
    kind: str
    classification: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    c: Optional[float] = None


class BoundStateSummary(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kappa: float
    energy: float = Field(alias="lambda")
    multiplicity: int = Field(ge=1, le=2)
    parity: Optional[str] = None


class ReportDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    version: int = REPORT_VERSION
    mode: Literal[MODES]
    extension: Optional[ExtensionSummary] = None
    bound_states: List[BoundStateSummary] = []
    checks: List[CheckResult] = []
    notes: List[str] = []
    warnings: List[str] = []
    artifacts: List[str] = []

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)


# Run configuration
class RunConfig(BaseModel):
    """Validated parameters for one experiment run"""
    model_config = ConfigDict(extra="forbid")

    mode: Literal[MODES]
    interaction: Literal[INTERACTIONS] = "two-point"
    alpha: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    beta: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    h: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    c: Optional[float] = Field(default=None, allow_inf_nan=False)
    b11: Optional[float] = Field(default=None, allow_inf_nan=False)
    b12: Optional[float] = Field(default=None, allow_inf_nan=False)
    b22: Optional[float] = Field(default=None, allow_inf_nan=False)
    L: float = Field(default=GRID_HALF_WIDTH, gt=0, allow_inf_nan=False)
    n: int = Field(default=GRID_POINTS, ge=MIN_GRID_POINTS)
    dt: float = Field(default=TIME_STEP, gt=0, allow_inf_nan=False)
    steps: int = Field(default=TIME_STEPS, ge=1)
    kappa_min: float = Field(default=KAPPA_RANGE[0], gt=0, allow_inf_nan=False)
    kappa_max: float = Field(default=KAPPA_RANGE[1], gt=0, allow_inf_nan=False)
    scan_points: int = Field(default=SCAN_POINTS, ge=2)
    ensemble: int = Field(default=ENSEMBLE_SIZE, ge=1)
    seed: int = Field(default=SEED, ge=0)
    tol: float = Field(default=VERIFY_TOL, gt=0, allow_inf_nan=False)
    initial: Literal[INITIAL_STATES] = "handed-left"
    region: Literal[DEPHASING_REGIONS] = "positive"
    sweep: Optional[Literal["default"]] = None
    out: Optional[str] = None
    csv: Optional[str] = None

    @model_validator(mode="after")
    def _check_mode_fields(self):
        if self.kappa_max <= self.kappa_min:
            raise ValueError("field 'kappa_max': must exceed kappa_min")
        if self.mode == "verify" and self.sweep is not None:
            return self

        direct = [self.b11, self.b12, self.b22]
        if self.interaction == "two-point":
            if self.h is None:
                raise ValueError(f"field 'h': required for two-point mode '{self.mode}'")
            if any(value is not None for value in direct):
                if any(value is None for value in direct):
                    raise ValueError("field 'b11': b11, b12 and b22 must be given together")
                if self.mode in ("eigenfunction", "evolve", "dephase", "verify"):
                    raise ValueError(f"field 'alpha': mode '{self.mode}' needs alpha and beta, not a direct B")
                return self
            self._require("alpha", "beta")
        elif self.interaction == "delta-prime":
            self._require("alpha", "beta")
        else:
            self._require("c")
            if self.mode not in ("extension", "spectrum", "verify"):
                raise ValueError(f"field 'interaction': delta interaction does not support mode '{self.mode}'")
        return self

    def _require(self, *names: str):
        for name in names:
            if getattr(self, name) is None:
                raise ValueError(f"field '{name}': required for {self.interaction} mode '{self.mode}'")
