"""
Exception hierarchy shared by every package in the toolkit.

Each error carries a ``category`` that the command line maps to an exit code:
config -> 2, data -> 3, runtime -> 4.
"""

from enum import Enum
from typing import Optional


class ErrorCategory(Enum):
    CONFIG = "config"
    DATA = "data"
    RUNTIME = "runtime"


EXIT_CODES = {
    ErrorCategory.CONFIG: 2,
    ErrorCategory.DATA: 3,
    ErrorCategory.RUNTIME: 4,
}


class CranialError(Exception):
    """Base class for all toolkit errors."""
    category = ErrorCategory.RUNTIME

    def __init__(self, message: str, case_id: Optional[str] = None):
        self.case_id = case_id
        if case_id is not None:
            message = f"{message} (case={case_id})"
        super().__init__(message)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.category]


class DataError(CranialError):
    category = ErrorCategory.DATA


class EmptyVolume(DataError):
    pass


class GeometryMismatch(DataError):
    pass


class UnsupportedNrrdFeature(DataError):
    pass


class CorruptFile(DataError):
    pass


class MissingFile(DataError):
    pass


class EmptyDataset(DataError):
    pass


class DegenerateConfig(DataError):
    pass


class CaseInvariantViolation(DataError):
    pass


class NonFiniteCost(CranialError):
    pass


class NonFiniteLoss(CranialError):
    pass


class ShapeMismatch(CranialError):
    pass


class GenerationDegenerate(CranialError):
    pass


class DegenerateDirection(CranialError):
    pass


class StageCancelled(CranialError):
    """Raised inside a stage that kept running after its timeout."""


class ConfigValidationError(CranialError):
    category = ErrorCategory.CONFIG
