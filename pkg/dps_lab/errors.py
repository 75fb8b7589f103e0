"""
Error types for dps_lab
Every failure carries a stable error code plus structured details for logging
"""

from typing import Any, Dict, Optional


class DPSLabError(Exception):
    """Base exception for all dps_lab errors"""

    error_code_default = "DPS_LAB_ERROR"

    def __init__(self, message: str, error_code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.error_code_default
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} ({self.error_code}: {self.details})"
        return f"{self.message} ({self.error_code})"


class ConfigurationError(DPSLabError):
    """Invalid parameters or a violated precondition"""

    error_code_default = "CONFIGURATION_ERROR"


class StorageError(DPSLabError):
    """I/O failure or a malformed artifact file"""

    error_code_default = "STORAGE_ERROR"


class InvariantViolation(DPSLabError):
    """An internal invariant does not hold"""

    error_code_default = "INVARIANT_VIOLATION"


class DivergenceError(DPSLabError):
    """Non-finite iterate, loss or gradient"""

    error_code_default = "DIVERGENCE"

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        partial: Any = None,
    ):
        super().__init__(message, error_code, details)
        # last good RunArtifacts when raised from the training loop
        self.partial = partial


def require(condition: bool, message: str, error_code: Optional[str] = None, **details: Any) -> None:
    """Raise ConfigurationError unless condition holds"""
    if not condition:
        raise ConfigurationError(message, error_code, details)


__all__ = [
    "DPSLabError",
    "ConfigurationError",
    "StorageError",
    "InvariantViolation",
    "DivergenceError",
    "require",
]
