"""
Error types
Every failure raised by the toolkit derives from FinslerError
"""

from typing import Any, Dict, Optional, Sequence

import numpy as np


def _as_list(value: Optional[Sequence[float]]) -> Optional[list]:
    if value is None:
        return None
    return np.asarray(value, dtype=float).tolist()


class FinslerError(Exception):
    """Base class for all toolkit errors"""

    def to_dict(self) -> Dict[str, Any]:
        return {'type': type(self).__name__, 'message': str(self)}


class MetricSyntaxError(FinslerError):
    """Malformed metric expression"""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({'line': self.line, 'column': self.column})
        return data


class UnknownSymbol(FinslerError):
    """Variable index out of range or unknown function name"""

    def __init__(self, symbol: str, line: int, column: int, reason: str = ''):
        detail = f": {reason}" if reason else ''
        super().__init__(f"Unknown symbol '{symbol}' at line {line}, column {column}{detail}")
        self.symbol = symbol
        self.line = line
        self.column = column

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({'symbol': self.symbol, 'line': self.line, 'column': self.column})
        return data


class PointError(FinslerError):
    """An error tied to a point of the slit tangent bundle"""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None,
                 direction: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.point = _as_list(point)
        self.direction = _as_list(direction)

    def locate(self, point: Sequence[float], direction: Optional[Sequence[float]] = None) -> 'PointError':
        """Attach the (x, y) at which the failure happened if not yet known"""
        if self.point is None:
            self.point = _as_list(point)
        if self.direction is None and direction is not None:
            self.direction = _as_list(direction)
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({'x': self.point, 'y': self.direction})
        return data


class NonSmoothPoint(PointError):
    """Evaluation hit sqrt(0), log of a non-positive number or a division by zero"""


class StrongConvexityViolation(PointError):
    """The fundamental tensor is not positive definite"""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None,
                 direction: Optional[Sequence[float]] = None, eigenvalue: float = float('nan')):
        super().__init__(message, point, direction)
        self.eigenvalue = float(eigenvalue)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['eigenvalue'] = self.eigenvalue
        return data


class NotHomogeneous(FinslerError):
    """F fails positive 1-homogeneity in the fiber"""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = float(residual)


class LeftChart(PointError):
    """A curve or ODE solution left the declared chart box"""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None, t: float = float('nan')):
        super().__init__(message, point)
        self.t = float(t)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['t'] = self.t
        return data


class StepFailure(PointError):
    """The ODE solver could not reach the requested tolerance"""


class DegenerateDirection(PointError):
    """A transported fiber direction collapsed to zero"""


class DimensionMismatch(FinslerError):
    """Objects of different dimension were combined"""


class UnsupportedDimension(FinslerError):
    """The operation is not available in this dimension"""


class BadWeights(FinslerError):
    """Convex-combination weights are negative or do not sum to one"""


class InsufficientSamples(FinslerError):
    """Too few samples for a statistically meaningful answer"""


class ConfigError(FinslerError):
    """Invalid run configuration"""

    def __init__(self, message: str, location: str = ''):
        prefix = f"{location}: " if location else ''
        super().__init__(f"{prefix}{message}")
        self.location = location

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['location'] = self.location
        return data
