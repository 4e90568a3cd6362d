"""
Error Hierarchy

Every failure the engine can report derives from EngineError. Each class
carries the process exit code main.py uses when the error reaches the CLI:
1 usage/configuration, 2 data, 3 numerical failure.
"""

from typing import Optional


class EngineError(Exception):
    """Base class for all engine errors."""
    exit_code: int = 2


class ConfigurationError(EngineError, ValueError):
    """Invalid configuration, mismatched dimensions or bad CLI usage."""
    exit_code = 1


class DataError(EngineError, ValueError):
    """Input data cannot be used as given."""
    exit_code = 2


class ParseError(DataError):
    """Malformed file. Carries the byte offset or line number when known."""

    def __init__(self, message: str, byte_offset: Optional[int] = None, line_number: Optional[int] = None):
        location = []
        if byte_offset is not None:
            location.append(f"byte offset {byte_offset}")
        if line_number is not None:
            location.append(f"line {line_number}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.byte_offset = byte_offset
        self.line_number = line_number


class DomainError(DataError):
    """Argument outside the domain of a mathematical operation."""


class NoOverlapError(DataError):
    """No pixel of the reference view projects validly into the source view."""


class FullyMaskedError(DataError):
    """Every valid pixel was removed by the masks."""


class DegenerateGeometryError(DataError):
    """Point configuration does not determine the requested transform."""


class EvaluationError(DataError):
    """An evaluation protocol has nothing to evaluate."""


class NumericalFailure(EngineError, RuntimeError):
    """Iterative procedure failed numerically."""
    exit_code = 3


class DivergenceError(NumericalFailure):
    """Loss became non-finite during optimization."""

    def __init__(self, step: int, message: str = "loss became non-finite"):
        super().__init__(f"Divergence at step {step}: {message}")
        self.step = step


class TrackingLostError(NumericalFailure):
    """Frame-to-frame tracking could not produce a pose."""

    def __init__(self, diagnostic: str, frame_index: Optional[int] = None):
        where = f" at frame {frame_index}" if frame_index is not None else ""
        super().__init__(f"Tracking lost{where}: {diagnostic}")
        self.diagnostic = diagnostic
        self.frame_index = frame_index
