"""
Custom exceptions for the permutation-equivariant allocation toolkit.

These exceptions provide structured error handling for the numerical
primitives, the reference solvers, the re-expressed iterations and the
experiment runner.
"""

from typing import Any, Dict, Optional


class PEAllocError(Exception):
    """Base exception for toolkit errors."""

    pass


class ContractViolationError(PEAllocError):
    """Precondition of an operation was violated (shapes, sizes, layouts)."""

    pass


class GradientTapeError(ContractViolationError):
    """Gradient tape misuse (non-scalar loss, replayed backward pass)."""

    pass


class DomainError(PEAllocError):
    """Numerical domain violation (log of non-positive, division by zero, NaN)."""

    pass


class InfeasibleProblemError(PEAllocError):
    """Problem instance admits no feasible allocation."""

    pass


class ConfigurationError(PEAllocError):
    """Configuration error."""

    pass


class SchemaError(PEAllocError):
    """Serialized payload does not match its documented schema."""

    pass


class TrainingDivergenceError(PEAllocError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, snapshot: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.snapshot: Dict[str, Any] = dict(snapshot or {})
