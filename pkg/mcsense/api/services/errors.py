# mcsense/api/services/errors.py - Domain exceptions shared by services and commands

from typing import Any, Dict, Optional


class McSenseError(Exception):
    """Base error carrying the process exit code the CLI should return."""

    exit_code: int = 2

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(detail)
        self.detail = detail
        self.context = context or {}


class InvalidArgumentError(McSenseError, ValueError):
    """Bad user input: shapes, ranges, unknown names."""

    exit_code = 1


class NumericalFailureError(McSenseError, ArithmeticError):
    """SVD/Cholesky breakdown or non-finite iterates."""

    exit_code = 2
