# mcsense/models/models.py - Pydantic models and schemas

from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

HardRule = Literal["paper", "derived"]
# "half" names the lambda/(2 alpha) level by what it does
HARD_RULE_ALIASES = {"half": "paper"}
QuasiRandomGenerator = Literal["halton", "sobol"]

# default p for the non-convex algorithm
NONCONVEX_P = 0.8


def _canonical_rule(value: Any) -> Any:
    return HARD_RULE_ALIASES.get(value, value)


def _frozen_array(value: Any, dtype=np.float64) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    array.setflags(write=False)
    return array


class ArrayModel(BaseModel):
    """Base for immutable models that hold numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SamplingScheme(str, Enum):
    RANDOM = "random"
    QUASI_RANDOM = "quasi-random"
    QUASI_CRYSTAL = "quasi-crystal"
    FARTHEST_POINT = "farthest-point"


class CorrelationLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CUSTOM = "custom"


# ---------------------------------------------------------------- grid field

class GridField(ArrayModel):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    values: np.ndarray
    seed: int = 0
    correlation_level: CorrelationLevel = CorrelationLevel.CUSTOM
    length_scale: Optional[float] = Field(default=None, gt=0)

    @field_validator("values", mode="before")
    @classmethod
    def _freeze_values(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_values(self) -> "GridField":
        if self.values.shape != (self.rows, self.cols):
            raise ValueError(f"values shape {self.values.shape} does not match ({self.rows}, {self.cols})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        return self

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, **kwargs: Any) -> "GridField":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(rows=matrix.shape[0], cols=matrix.shape[1], values=matrix, **kwargs)


class SvdDiagnostics(ArrayModel):
    singular_values: np.ndarray
    max_abs_left: float
    max_abs_right: float
    coherence_mu: float
    numeric_rank: int = Field(ge=0)
    rank_tol: float = 1e-8

    @field_validator("singular_values", mode="before")
    @classmethod
    def _freeze_singular_values(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)


# ---------------------------------------------------------------- sampling

class SamplingMask(ArrayModel):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    indices: np.ndarray
    scheme: SamplingScheme
    target_ratio: float = Field(gt=0, le=1)
    seed: int = 0
    generator: QuasiRandomGenerator = "halton"

    @field_validator("indices", mode="before")
    @classmethod
    def _sort_indices(cls, value: Any) -> np.ndarray:
        pairs = np.array(value, dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return _frozen_array(pairs[order], dtype=np.int64)

    @model_validator(mode="after")
    def _check_indices(self) -> "SamplingMask":
        idx = self.indices
        if idx.shape[0] == 0:
            raise ValueError("a mask needs at least one sampled cell")
        if idx.min() < 0 or np.any(idx[:, 0] >= self.rows) or np.any(idx[:, 1] >= self.cols):
            raise ValueError("mask indices out of bounds")
        if np.unique(self.flat_indices).size != idx.shape[0]:
            raise ValueError("mask indices must be unique")
        return self

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])

    @property
    def flat_indices(self) -> np.ndarray:
        return self.indices[:, 0] * self.cols + self.indices[:, 1]

    def same_support(self, other: "SamplingMask") -> bool:
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.indices, other.indices)
        )

    def header(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme.value,
            "rows": self.rows,
            "cols": self.cols,
            "ratio": self.target_ratio,
            "seed": self.seed,
            "generator": self.generator,
        }


class Observations(ArrayModel):
    mask: SamplingMask
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _freeze_values(cls, value: Any) -> np.ndarray:
        return _frozen_array(value).reshape(-1)

    @model_validator(mode="after")
    def _check_length(self) -> "Observations":
        if self.values.size != self.mask.size:
            raise ValueError(f"{self.values.size} values for a mask of {self.mask.size} cells")
        return self


class CoverageReport(BaseModel):
    empty_rows: int
    empty_cols: int
    min_pairwise_distance: float


# ---------------------------------------------------------------- solvers

class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float = Field(default=1.0, ge=0, le=1)
    alpha: float = Field(default=1.0, gt=0)
    sigma: float = Field(default=0.0, ge=0)
    dec_fac: float = Field(default=0.9, gt=0, lt=1)
    inner_tol: float = Field(default=1e-6, gt=0)
    lambda_init: Union[float, Literal["auto"]] = "auto"
    max_outer: int = Field(default=200, ge=1)
    max_inner: int = Field(default=200, ge=1)
    # iterations at the final lambda once the residual target is met; 0 disables
    max_polish: int = Field(default=1000, ge=0)
    polish_tol: float = Field(default=1e-9, gt=0)
    hard_rule: HardRule = "paper"
    weight_floor: float = Field(default=1e-12, gt=0)
    monotone: bool = True
    record_trace: bool = False

    @field_validator("hard_rule", mode="before")
    @classmethod
    def _rule_alias(cls, value: Any) -> Any:
        return _canonical_rule(value)

    @field_validator("lambda_init")
    @classmethod
    def _positive_lambda(cls, value: Union[float, str]) -> Union[float, str]:
        if value != "auto" and float(value) <= 0:
            raise ValueError("lambda_init must be positive or 'auto'")
        return value

    @property
    def mode(self) -> str:
        if self.p == 1:
            return "shrinkage"
        if self.p == 0:
            return "hard-thresholding"
        return "nonconvex"


class SolverState(ArrayModel):
    iterate: np.ndarray
    lam: float
    objective: float
    residual: float = Field(ge=0)
    inner_count: int = 0
    outer_count: int = 0
    singular_values: np.ndarray
    weights: Optional[np.ndarray] = None
    objectives: List[float] = Field(default_factory=list)
    residuals: List[float] = Field(default_factory=list)

    @field_validator("iterate", "singular_values", mode="before")
    @classmethod
    def _freeze(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)


class TraceRow(BaseModel):
    outer: int
    inner: int
    lam: float
    objective: float
    residual: float


class SolveResult(ArrayModel):
    estimate: np.ndarray
    converged: bool
    state: SolverState
    lambdas: List[float] = Field(default_factory=list)
    trace: Optional[List[TraceRow]] = None

    @field_validator("estimate", mode="before")
    @classmethod
    def _freeze_estimate(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)


# ---------------------------------------------------------------- benchmark

class AlgorithmSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    p: float = Field(ge=0, le=1)
    hard_rule: HardRule = "paper"

    @field_validator("hard_rule", mode="before")
    @classmethod
    def _rule_alias(cls, value: Any) -> Any:
        return _canonical_rule(value)


SHRINKAGE = AlgorithmSpec(name="shrinkage", p=1.0)
HARD_THRESHOLDING = AlgorithmSpec(name="hard-thresholding", p=0.0)
NONCONVEX = AlgorithmSpec(name="nonconvex", p=NONCONVEX_P)


class ExperimentPlan(BaseModel):
    n: int = Field(default=64, ge=2)
    correlation_levels: List[CorrelationLevel] = Field(
        default_factory=lambda: [CorrelationLevel.LOW, CorrelationLevel.MEDIUM, CorrelationLevel.HIGH],
        min_length=1,
    )
    schemes: List[SamplingScheme] = Field(default_factory=lambda: list(SamplingScheme), min_length=1)
    ratios: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5], min_length=1)
    noise_levels: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.10], min_length=1)
    algorithms: List[AlgorithmSpec] = Field(default_factory=lambda: [SHRINKAGE], min_length=1)
    trials: int = Field(default=100, ge=1)
    base_seed: int = Field(default=0, ge=0)
    fixed_field: bool = False
    solver: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("ratios")
    @classmethod
    def _check_ratios(cls, value: List[float]) -> List[float]:
        for ratio in value:
            if not 0 < ratio <= 1:
                raise ValueError(f"sampling ratio {ratio} outside (0, 1]")
        return value

    @field_validator("noise_levels")
    @classmethod
    def _check_noise(cls, value: List[float]) -> List[float]:
        if any(level < 0 for level in value):
            raise ValueError("noise levels must be non-negative")
        return value

    @field_validator("correlation_levels")
    @classmethod
    def _no_custom(cls, value: List[CorrelationLevel]) -> List[CorrelationLevel]:
        if CorrelationLevel.CUSTOM in value:
            raise ValueError("plans use the calibrated presets low/medium/high")
        return value

    def cells(self) -> List["PlanCell"]:
        return [
            PlanCell(correlation=level, scheme=scheme, ratio=ratio, noise=noise, algorithm=algorithm)
            for level in self.correlation_levels
            for noise in self.noise_levels
            for algorithm in self.algorithms
            for scheme in self.schemes
            for ratio in self.ratios
        ]


class PlanCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    correlation: CorrelationLevel
    scheme: SamplingScheme
    ratio: float
    noise: float
    algorithm: AlgorithmSpec


RECORD_COLUMNS = [
    "correlation", "scheme", "ratio", "noise", "algorithm", "p", "hard_rule",
    "trial", "seed", "nmse", "converged", "outer_iters", "inner_iters", "wall_time_s",
]


class ExperimentRecord(BaseModel):
    correlation: str
    scheme: str
    ratio: float
    noise: float
    algorithm: str
    p: float
    hard_rule: str
    trial: int
    seed: int
    nmse: float = Field(ge=0)
    converged: bool
    outer_iters: int
    inner_iters: int
    wall_time_s: float
    error: Optional[str] = None

    def row(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in RECORD_COLUMNS}


class TrendCheck(BaseModel):
    name: str
    description: str
    passed: Optional[bool] = None
    worst_margin: Optional[float] = None
    comparisons: int = 0
    violations: List[str] = Field(default_factory=list)


class TrendReport(BaseModel):
    checks: List[TrendCheck]

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks if check.passed is not None)

    def check(self, name: str) -> TrendCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)


# ---------------------------------------------------------------- cli

class CliConfig(BaseModel):
    subcommand: Literal["gen-field", "gen-mask", "solve", "bench", "diagnose"]
    options: Dict[str, Any] = Field(default_factory=dict)
    config_file: Optional[str] = None
    version: str = ""
    correlation_lengths: Dict[str, float] = Field(default_factory=dict)
    resolved: Dict[str, Any] = Field(default_factory=dict)

    def header(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
