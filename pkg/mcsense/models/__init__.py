# mcsense/models/__init__.py - Pydantic models and schemas

from .models import (
    HARD_THRESHOLDING,
    NONCONVEX,
    NONCONVEX_P,
    RECORD_COLUMNS,
    SHRINKAGE,
    AlgorithmSpec,
    CliConfig,
    CorrelationLevel,
    CoverageReport,
    ExperimentPlan,
    ExperimentRecord,
    GridField,
    HardRule,
    Observations,
    PlanCell,
    SamplingMask,
    SamplingScheme,
    SolveResult,
    SolverConfig,
    SolverState,
    SvdDiagnostics,
    TraceRow,
    TrendCheck,
    TrendReport,
)

__all__ = [
    "HARD_THRESHOLDING",
    "NONCONVEX",
    "NONCONVEX_P",
    "RECORD_COLUMNS",
    "SHRINKAGE",
    "AlgorithmSpec",
    "CliConfig",
    "CorrelationLevel",
    "CoverageReport",
    "ExperimentPlan",
    "ExperimentRecord",
    "GridField",
    "HardRule",
    "Observations",
    "PlanCell",
    "SamplingMask",
    "SamplingScheme",
    "SolveResult",
    "SolverConfig",
    "SolverState",
    "SvdDiagnostics",
    "TraceRow",
    "TrendCheck",
    "TrendReport",
]
