from __future__ import annotations
from typing import Dict, Optional


class MomentError(ValueError):
    """Base class for every error raised by the moment_bounds library."""


class DimensionError(MomentError):
    pass


class ZeroMeasureError(MomentError):
    pass


class NotAnAtomError(MomentError):
    pass


class NullAtomError(MomentError):
    pass


class NotInMomentSetError(MomentError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NoPerturbationError(MomentError):
    pass


class EnumerationCapError(MomentError):
    pass


class SolverStalledError(MomentError):
    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SeedInfeasibleError(MomentError):
    pass


class ExprSyntaxError(MomentError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvaluationFault(MomentError):
    def __init__(self, message: str, x: float):
        super().__init__(f"evaluation fault at point {x!r}: {message}")
        self.x = x


class SchemaError(MomentError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
