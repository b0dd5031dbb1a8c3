"""
Core primitives: configuration, exceptions, feature flags, the tensor and
autodiff layer, permutations, one-set PE templates and serialization.
"""

from __future__ import annotations

from .exceptions import (
    ConfigurationError,
    ContractViolationError,
    DomainError,
    GradientTapeError,
    InfeasibleProblemError,
    PEAllocError,
    SchemaError,
    TrainingDivergenceError,
)
from .feature_flags import (
    get_pb_update_form,
    get_pm_channel_form,
    resolved_flags,
    set_pb_update_form,
    set_pm_channel_form,
)
from .tensor import GradientTape, Tensor

__all__ = [
    "ConfigurationError",
    "ContractViolationError",
    "DomainError",
    "GradientTape",
    "GradientTapeError",
    "InfeasibleProblemError",
    "PEAllocError",
    "SchemaError",
    "Tensor",
    "TrainingDivergenceError",
    "get_pb_update_form",
    "get_pm_channel_form",
    "resolved_flags",
    "set_pb_update_form",
    "set_pm_channel_form",
]
