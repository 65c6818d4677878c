"""
Verdicts
Graded yes / no / inconclusive answers backed by the residuals they came from
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable

NO_FACTOR = 10.0


class Verdict(Enum):
    """Outcome of a numerical criterion"""
    YES = 'yes'
    NO = 'no'
    INCONCLUSIVE = 'inconclusive'


def scaled_tolerance(tol: float, magnitude: float = 0.0) -> float:
    """Absolute tolerance for quantities of the given size"""
    return tol * max(1.0, float(magnitude))


def grade(value: float, tolerance: float) -> Verdict:
    if value <= tolerance:
        return Verdict.YES
    if value >= NO_FACTOR * tolerance:
        return Verdict.NO
    return Verdict.INCONCLUSIVE


def combine(verdicts: Iterable[Verdict]) -> Verdict:
    """NO if any part says no, YES if every part says yes"""
    verdicts = list(verdicts)
    if not verdicts:
        return Verdict.INCONCLUSIVE
    if any(v is Verdict.NO for v in verdicts):
        return Verdict.NO
    if all(v is Verdict.YES for v in verdicts):
        return Verdict.YES
    return Verdict.INCONCLUSIVE


@dataclass
class Residual:
    value: float
    tolerance: float
    samples: int
    seed: int

    @property
    def verdict(self) -> Verdict:
        return grade(self.value, self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'value': float(self.value),
            'tolerance': float(self.tolerance),
            'samples': int(self.samples),
            'seed': int(self.seed),
        }


@dataclass
class CriterionResult:
    """One criterion: its verdict, the residuals it was graded on, and details"""
    name: str
    verdict: Verdict
    residuals: Dict[str, Residual]
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict.value,
            'residuals': {key: self.residuals[key].to_dict() for key in sorted(self.residuals)},
            'details': self.details,
        }
