"""
Finsler Structures
Evaluable, differentiable F(x, y) together with the chart it lives on
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, FinslerError, NonSmoothPoint
from .expression import MetricExpression, check_homogeneity, parse_metric
from .jets import Jet, jet_basis


@dataclass
class Chart:
    """Axis-aligned coordinate box"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise DimensionMismatch("Chart bounds must be vectors of equal length")
        if np.any(self.upper <= self.lower):
            raise ConfigError("Chart box is empty", 'chart')

    @classmethod
    def cube(cls, n: int, half_width: float = 1.0, center: Optional[Sequence[float]] = None) -> 'Chart':
        center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        return cls(center - half_width, center + half_width)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: Sequence[float], slack: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))

    def sample_points(self, rng: np.random.Generator, count: int, margin: float = 0.0) -> np.ndarray:
        """Uniform points keeping `margin` (a fraction of the width) from the faces"""
        inset = margin * self.width
        return rng.uniform(self.lower + inset, self.upper - inset, size=(count, self.dimension))

    def to_dict(self) -> Dict[str, List[float]]:
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist()}


class FinslerStructure:
    """A dimension plus F(x, y), positively 1-homogeneous in y

    Subclasses implement `evaluate`, which must work on floats, arrays and
    jets alike, or override `value` and `jet` directly.
    """

    def __init__(self, dimension: int, name: str = 'custom', family: str = 'custom',
                 params: Optional[Dict[str, Any]] = None, chart: Optional[Chart] = None):
        self.dimension = dimension
        self.name = name
        self.family = family
        self.params = params or {}
        self.chart = chart or Chart.cube(dimension)
        self.logger = logging.getLogger(__name__)

    def evaluate(self, xs: Sequence, ys: Sequence):
        raise NotImplementedError

    def _check_shapes(self, x: np.ndarray, y: np.ndarray):
        if x.shape != (self.dimension,) or y.shape[-1:] != (self.dimension,):
            raise DimensionMismatch(
                f"Expected x of shape ({self.dimension},) and y of shape (..., {self.dimension}), "
                f"got {x.shape} and {y.shape}")

    def value(self, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
        """F at one base point for one or many fiber vectors"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check_shapes(x, y)
        try:
            result = self.evaluate([x[i] for i in range(self.dimension)],
                                   [y[..., i] for i in range(self.dimension)])
        except NonSmoothPoint as e:
            raise e.locate(x, y)
        return np.broadcast_to(np.asarray(result, dtype=float), y.shape[:-1]).copy()

    def jet(self, x: Sequence[float], y: Sequence[float], order: int) -> Jet:
        """Taylor jet of F in the 2n variables (x1..xn, y1..yn) at (x, y)"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check_shapes(x, y)
        n = self.dimension
        basis = jet_basis(2 * n, order)
        xs = [Jet.variable(basis, i, x[i]) for i in range(n)]
        ys = [Jet.variable(basis, n + i, y[..., i]) for i in range(n)]
        try:
            result = self.evaluate(xs, ys)
        except NonSmoothPoint as e:
            raise e.locate(x, y)
        if not isinstance(result, Jet):
            result = Jet.constant(basis, result)
        coeffs = np.broadcast_to(result.coeffs, y.shape[:-1] + (basis.size,))
        return Jet(basis, coeffs, result.order)

    def describe(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'family': self.family,
            'dimension': self.dimension,
            'params': self.params,
            'chart': self.chart.to_dict(),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, dimension={self.dimension})"


class ExpressionStructure(FinslerStructure):
    """Finsler structure given by a parsed metric expression"""

    def __init__(self, expression: MetricExpression, **kwargs):
        super().__init__(expression.dimension, **kwargs)
        self.expression = expression

    def evaluate(self, xs, ys):
        return self.expression.evaluate(xs, ys)

    def check_homogeneity(self, samples: int = 32, tol: float = 1e-9, seed: int = 42):
        return check_homogeneity(self.expression, samples, tol, seed,
                                 lower=self.chart.lower, upper=self.chart.upper)

    def describe(self) -> Dict[str, Any]:
        data = super().describe()
        data['expression'] = self.expression.source_text
        return data


class LinearlyChangedStructure(FinslerStructure):
    """F expressed in coordinates x' = P x, y' = P y"""

    def __init__(self, base: FinslerStructure, matrix: Sequence[Sequence[float]]):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (base.dimension, base.dimension):
            raise DimensionMismatch("Change of coordinates must be a square matrix of the structure's dimension")
        corners = np.array(np.meshgrid(*zip(base.chart.lower, base.chart.upper))).reshape(base.dimension, -1).T
        mapped = corners @ matrix.T
        super().__init__(base.dimension, name=f"{base.name}_linear", family=base.family,
                         params=dict(base.params, change_of_coordinates=matrix.tolist()),
                         chart=Chart(mapped.min(axis=0), mapped.max(axis=0)))
        self.base = base
        self.matrix = matrix
        self.inverse = np.linalg.inv(matrix)

    def _pull(self, values):
        n = self.dimension
        return [sum(self.inverse[i, j] * values[j] for j in range(n)) for i in range(n)]

    def evaluate(self, xs, ys):
        return self.base.evaluate(self._pull(xs), self._pull(ys))


def linear_change(fs: FinslerStructure, matrix: Sequence[Sequence[float]]) -> LinearlyChangedStructure:
    return LinearlyChangedStructure(fs, matrix)


# Built-in families

def _quadratic_form(alpha: Sequence[Sequence[str]], n: int) -> str:
    terms = []
    for i in range(n):
        for j in range(n):
            entry = str(alpha[i][j]).strip()
            if entry in ('0', '0.0'):
                continue
            terms.append(f"({entry})*y{i + 1}*y{j + 1}")
    if not terms:
        raise ConfigError("Quadratic form has no non-zero entries", 'metric.params.alpha')
    return ' + '.join(terms)


def _identity_strings(n: int) -> List[List[str]]:
    return [['1' if i == j else '0' for j in range(n)] for i in range(n)]


def euclidean_source(n: int) -> str:
    return f"sqrt({' + '.join(f'y{i + 1}^2' for i in range(n))})"


def riemannian_source(n: int, matrix: Sequence[Sequence[str]]) -> str:
    return f"sqrt({_quadratic_form(matrix, n)})"


def randers_source(n: int, alpha: Optional[Sequence[Sequence[str]]], beta: Sequence[str]) -> str:
    alpha = alpha or _identity_strings(n)
    linear = [f"({str(b).strip()})*y{i + 1}" for i, b in enumerate(beta) if str(b).strip() not in ('0', '0.0')]
    source = f"sqrt({_quadratic_form(alpha, n)})"
    return source + (' + ' + ' + '.join(linear) if linear else '')


def _require_square(matrix, n: int, location: str):
    if matrix is None or len(matrix) != n or any(len(row) != n for row in matrix):
        raise ConfigError(f"Expected a {n}x{n} matrix of expressions", location)


def build_structure(family: str, dimension: int, params: Optional[Dict[str, Any]] = None,
                    name: Optional[str] = None, chart: Optional[Chart] = None) -> ExpressionStructure:
    """Build a structure from a family tag and its parameters"""
    params = dict(params or {})
    n = int(dimension)
    if n < 2:
        raise ConfigError(f"Dimension must be at least 2, got {n}", 'metric.dimension')

    if family == 'euclidean':
        source = euclidean_source(n)
    elif family == 'riemannian':
        _require_square(params.get('matrix'), n, 'metric.params.matrix')
        source = riemannian_source(n, params['matrix'])
    elif family == 'randers':
        alpha = params.get('alpha')
        if alpha is not None:
            _require_square(alpha, n, 'metric.params.alpha')
        beta = params.get('beta')
        if beta is None or len(beta) != n:
            raise ConfigError(f"Expected {n} covector expressions", 'metric.params.beta')
        source = randers_source(n, alpha, beta)
    elif family == 'custom':
        source = params.get('expression')
        if not source:
            raise ConfigError("Custom family needs an expression", 'metric.expression')
    else:
        raise ConfigError(f"Unknown metric family '{family}'", 'metric.family')

    try:
        expression = parse_metric(source, n)
    except FinslerError as e:
        location = 'metric.expression' if family == 'custom' else 'metric.params'
        raise ConfigError(str(e), location) from e
    return ExpressionStructure(expression, name=name or family, family=family, params=params, chart=chart)
