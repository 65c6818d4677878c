"""
Indicatrix Averaging
Quadrature on the indicatrix with its induced volume, averaged connections and
metrics, and Riemannian metric fields
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .connections import ConnectionCoefficients, ConnectionField, FiberGeometry, LeviCivitaField
from .errors import BadWeights, DimensionMismatch, UnsupportedDimension
from .expression import parse_metric
from .jets import Jet, jet_basis
from .structures import FinslerStructure
from .tensors import check_convexity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureScheme:
    """trapezoid_2d(N) on the circle or latlong_3d(N_theta, N_phi) on the sphere"""
    kind: str
    nodes: Tuple[int, ...]

    @classmethod
    def trapezoid_2d(cls, count: int = 64) -> 'QuadratureScheme':
        return cls('trapezoid_2d', (int(count),))

    @classmethod
    def latlong_3d(cls, n_theta: int = 16, n_phi: int = 32) -> 'QuadratureScheme':
        return cls('latlong_3d', (int(n_theta), int(n_phi)))

    @classmethod
    def default(cls, dimension: int, count: int = 64) -> 'QuadratureScheme':
        if dimension == 2:
            return cls.trapezoid_2d(count)
        if dimension == 3:
            return cls.latlong_3d(max(count // 2, 4), count)
        raise UnsupportedDimension(f"Indicatrix quadrature is available for n in {{2, 3}}, got {dimension}")

    @property
    def dimension(self) -> int:
        return 2 if self.kind == 'trapezoid_2d' else 3

    def refined(self) -> 'QuadratureScheme':
        return QuadratureScheme(self.kind, tuple(2 * k for k in self.nodes))

    def parameter_nodes(self) -> Tuple[np.ndarray, List[np.ndarray], np.ndarray]:
        """Unit vectors u, their parameter tangents and the parameter weights"""
        if self.kind == 'trapezoid_2d':
            count = self.nodes[0]
            theta = 2.0 * np.pi * np.arange(count) / count
            u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
            u_theta = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
            return u, [u_theta], np.full(count, 2.0 * np.pi / count)

        n_theta, n_phi = self.nodes
        xi, w = np.polynomial.legendre.leggauss(n_theta)
        theta = 0.5 * np.pi * (xi + 1.0)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        T, P = np.meshgrid(theta, phi, indexing='ij')
        T, P = T.ravel(), P.ravel()
        u = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=1)
        u_theta = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)], axis=1)
        u_phi = np.stack([-np.sin(T) * np.sin(P), np.sin(T) * np.cos(P), np.zeros_like(T)], axis=1)
        weights = np.outer(0.5 * np.pi * w, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
        return u, [u_theta, u_phi], weights

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'nodes': list(self.nodes)}


@dataclass
class IndicatrixSampling:
    x: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    total_volume: float
    scheme: QuadratureScheme
    rays: np.ndarray = None


def _check_scheme(fs: FinslerStructure, scheme: QuadratureScheme):
    if fs.dimension not in (2, 3):
        raise UnsupportedDimension(f"Indicatrix quadrature is available for n in {{2, 3}}, got {fs.dimension}")
    if scheme.dimension != fs.dimension:
        raise DimensionMismatch(f"Scheme {scheme.kind} does not fit dimension {fs.dimension}")


def _gram_volume(gram: List[List]):
    if len(gram) == 1:
        return gram[0][0]
    return gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]


def sample_indicatrix(fs: FinslerStructure, x: Sequence[float], scheme: Optional[QuadratureScheme] = None) -> IndicatrixSampling:
    """Nodes y(u) = u / F(x, u) with the volume element induced by g(x, y(u))"""
    scheme = scheme or QuadratureScheme.default(fs.dimension)
    _check_scheme(fs, scheme)
    x = np.asarray(x, dtype=float)
    u, tangents, base_weights = scheme.parameter_nodes()

    geometry = FiberGeometry(fs, x, u, 2)
    g = geometry.g
    F = geometry.F
    F_y = geometry.bundle.dF("y")

    # d/dtheta of u / F(x, u)
    vectors = [t / F[:, None] - u * (np.sum(F_y * t, axis=1) / F ** 2)[:, None] for t in tangents]
    gram = [[np.einsum('ki,kij,kj->k', a, g, b) for b in vectors] for a in vectors]
    weights = np.sqrt(_gram_volume(gram)) * base_weights
    return IndicatrixSampling(x, u / F[:, None], weights, float(weights.sum()), scheme, u)


@dataclass
class AveragedConnection:
    x: np.ndarray
    coefficients: ConnectionCoefficients
    source_kind: str
    scheme: QuadratureScheme
    quadrature_error: float

    @property
    def gamma(self) -> np.ndarray:
        return self.coefficients.gamma


def _source_coefficients(fs: FinslerStructure, x: np.ndarray, rays: np.ndarray, source_kind: str) -> np.ndarray:
    if source_kind == 'chern':
        return FiberGeometry(fs, x, rays, 3).chern
    if source_kind == 'berwald':
        return FiberGeometry(fs, x, rays, 4).berwald
    raise ValueError(f"Averaging supports chern and berwald sources, got '{source_kind}'")


def _average_coefficients(fs, x, source_kind, scheme) -> np.ndarray:
    sampling = sample_indicatrix(fs, x, scheme)
    # Connection coefficients are 0-homogeneous in y
    gamma = _source_coefficients(fs, sampling.x, sampling.rays, source_kind)
    return np.einsum('k,kijl->ijl', sampling.weights, gamma) / sampling.total_volume


def averaged_connection(fs: FinslerStructure, x: Sequence[float], source_kind: str = 'chern',
                        scheme: Optional[QuadratureScheme] = None) -> AveragedConnection:
    """Volume-weighted mean of the source connection over the indicatrix at x"""
    scheme = scheme or QuadratureScheme.default(fs.dimension)
    x = np.asarray(x, dtype=float)
    coarse = _average_coefficients(fs, x, source_kind, scheme)
    fine = _average_coefficients(fs, x, source_kind, scheme.refined())
    error = float(np.max(np.abs(coarse - fine)))
    torsion = float(np.max(np.abs(coarse - np.swapaxes(coarse, -1, -2))))
    coefficients = ConnectionCoefficients('averaged_affine', coarse, 'x_only', x, None,
                                          {'torsion': torsion, 'quadrature_error': error})
    return AveragedConnection(x, coefficients, source_kind, scheme, error)


def averaged_metric(fs: FinslerStructure, x: Sequence[float], scheme: Optional[QuadratureScheme] = None) -> np.ndarray:
    """h_ij(x): volume-weighted mean of g_ij(x, y) over the indicatrix"""
    scheme = scheme or QuadratureScheme.default(fs.dimension)
    sampling = sample_indicatrix(fs, x, scheme)
    g = FiberGeometry(fs, sampling.x, sampling.rays, 2).g
    h = np.einsum('k,kij->ij', sampling.weights, g) / sampling.total_volume
    check_convexity(h, sampling.x, np.ones(fs.dimension))
    return 0.5 * (h + h.T)


def convexity_of_average(connections: Sequence, weights: Sequence[float],
                         x: Optional[Sequence[float]] = None) -> ConnectionCoefficients:
    """Convex combination of connection coefficient arrays at one point"""
    weights = np.asarray(weights, dtype=float)
    if len(connections) != len(weights) or len(weights) == 0:
        raise BadWeights("Need one weight per connection")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise BadWeights(f"Weights must be non-negative and sum to 1 (sum {weights.sum():.15g})")

    arrays = [c.gamma if isinstance(c, ConnectionCoefficients) else np.asarray(c, dtype=float) for c in connections]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DimensionMismatch(f"Connections of different shapes {sorted(shapes)}")
    gamma = np.einsum('k,k...->...', weights, np.stack(arrays))

    torsions = [float(np.max(np.abs(a - np.swapaxes(a, -1, -2)))) for a in arrays]
    torsion = float(np.max(np.abs(gamma - np.swapaxes(gamma, -1, -2))))
    diagnostics = {'torsion': torsion, 'inputs_torsion_free': max(torsions) <= 1e-10,
                   'torsion_free': torsion <= 1e-10}
    if x is None and connections and isinstance(connections[0], ConnectionCoefficients):
        x = connections[0].x
    return ConnectionCoefficients('averaged_affine', gamma, 'x_only',
                                  None if x is None else np.asarray(x, dtype=float), None, diagnostics)


def averaged_metric_jet(fs: FinslerStructure, x: Sequence[float], scheme: QuadratureScheme,
                        order: int) -> List[List[Jet]]:
    """Taylor jets in x of the averaged metric h_ij, in the (2n, order) basis"""
    _check_scheme(fs, scheme)
    n = fs.dimension
    x = np.asarray(x, dtype=float)
    u, tangents, base_weights = scheme.parameter_nodes()
    xvars = tuple(range(n))

    F_full = fs.jet(x, u, order + 2)
    phi = F_full * F_full
    F = F_full.restrict(xvars)
    F_y = [F_full.derivative(n + i).restrict(xvars) for i in range(n)]
    g = [[(phi.derivative(n + i).derivative(n + j) * 0.5).restrict(xvars) for j in range(n)] for i in range(n)]

    vectors = []
    for t in tangents:
        slope = sum(F_y[i] * t[:, i] for i in range(n))
        shift = slope / (F * F)
        vectors.append([(1.0 / F) * t[:, i] - shift * u[:, i] for i in range(n)])

    def pair(a, b):
        return sum(g[i][j] * a[i] * b[j] for i in range(n) for j in range(n))

    gram = [[pair(a, b) for b in vectors] for a in vectors]
    weights = _gram_volume(gram).sqrt() * base_weights
    volume = weights.sum(axis=0)
    return [[((weights * g[i][j]).sum(axis=0) / volume).truncate(order) for j in range(n)] for i in range(n)]


# Metric fields

class MetricField:
    """A Riemannian metric h(x) on the chart"""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.logger = logging.getLogger(__name__)

    def jet(self, x: Sequence[float], order: int) -> List[List[Jet]]:
        raise NotImplementedError

    def value(self, x: Sequence[float]) -> np.ndarray:
        return self.value_and_gradient(x)[0]

    def value_and_gradient(self, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """h_ab and dh_ab/dx^k stored as [a, b, k]"""
        n = self.dimension
        jets = self.jet(x, 1)
        xvars = tuple(range(n))
        h = np.array([[float(jets[a][b].value) for b in range(n)] for a in range(n)])
        dh = np.array([[jets[a][b].gradient(xvars) for b in range(n)] for a in range(n)])
        return h, dh

    def norm(self, x: Sequence[float], y: np.ndarray) -> np.ndarray:
        h = self.value(x)
        return np.sqrt(np.einsum('...i,ij,...j->...', y, h, y))

    def levi_civita(self) -> LeviCivitaField:
        return LeviCivitaField(self)


class AveragedMetricField(MetricField):
    """The averaged metric of F with a small cache keyed by base point"""

    def __init__(self, fs: FinslerStructure, scheme: Optional[QuadratureScheme] = None, max_cache_size: int = 256):
        super().__init__(fs.dimension)
        self.fs = fs
        self.scheme = scheme or QuadratureScheme.default(fs.dimension)
        self.cache: OrderedDict = OrderedDict()
        self.max_cache_size = max_cache_size

    def _update_cache(self, key, value):
        """Add to cache, evicting the oldest entry when full"""
        if len(self.cache) >= self.max_cache_size:
            self.cache.popitem(last=False)
        self.cache[key] = value

    def jet(self, x, order):
        key = (tuple(np.asarray(x, dtype=float).tolist()), order)
        if key in self.cache:
            self.logger.debug(f"Averaged metric cache hit at {key[0]}")
            return self.cache[key]
        value = averaged_metric_jet(self.fs, x, self.scheme, order)
        self._update_cache(key, value)
        return value

    def value(self, x):
        return averaged_metric(self.fs, x, self.scheme)


class StructureMetricField(MetricField):
    """g(x, y) of a Riemannian F, read at a fixed direction"""

    def __init__(self, fs: FinslerStructure, direction: Optional[Sequence[float]] = None):
        super().__init__(fs.dimension)
        self.fs = fs
        self.direction = np.eye(fs.dimension)[0] if direction is None else np.asarray(direction, dtype=float)

    def jet(self, x, order):
        n = self.dimension
        xvars = tuple(range(n))
        F = self.fs.jet(x, self.direction, order + 2)
        phi = F * F
        return [[(phi.derivative(n + i).derivative(n + j) * 0.5).restrict(xvars).truncate(order)
                 for j in range(n)] for i in range(n)]


class ExpressionMetricField(MetricField):
    """h_ij(x) given as a matrix of expressions in x1..xn"""

    def __init__(self, dimension: int, matrix: Sequence[Sequence[str]]):
        super().__init__(dimension)
        if len(matrix) != dimension or any(len(row) != dimension for row in matrix):
            raise DimensionMismatch(f"Expected a {dimension}x{dimension} matrix of expressions")
        self.matrix = [[str(entry) for entry in row] for row in matrix]
        self.entries = [[parse_metric(entry, dimension) for entry in row] for row in self.matrix]

    def jet(self, x, order):
        n = self.dimension
        x = np.asarray(x, dtype=float)
        basis = jet_basis(2 * n, order)
        xs = [Jet.variable(basis, i, x[i]) for i in range(n)]
        ys = [Jet.constant(basis, 0.0) for _ in range(n)]
        jets = []
        for row in self.entries:
            values = []
            for entry in row:
                result = entry.evaluate(xs, ys)
                values.append(result if isinstance(result, Jet) else Jet.constant(basis, result))
            jets.append(values)
        return jets


class AveragedConnectionField(ConnectionField):
    """x -> <Gamma>(x), cached by base point"""

    kind = 'averaged_affine'

    def __init__(self, fs: FinslerStructure, source_kind: str = 'chern',
                 scheme: Optional[QuadratureScheme] = None, max_cache_size: int = 4096):
        super().__init__(fs.dimension)
        self.fs = fs
        self.source_kind = source_kind
        self.scheme = scheme or QuadratureScheme.default(fs.dimension)
        self.cache: OrderedDict = OrderedDict()
        self.max_cache_size = max_cache_size

    def _update_cache(self, key, value):
        if len(self.cache) >= self.max_cache_size:
            self.cache.popitem(last=False)
        self.cache[key] = value

    def coefficients(self, x, y=None):
        key = tuple(np.asarray(x, dtype=float).tolist())
        if key not in self.cache:
            self._update_cache(key, _average_coefficients(self.fs, np.asarray(x, dtype=float),
                                                          self.source_kind, self.scheme))
        gamma = self.cache[key]
        if y is None:
            return gamma
        return np.broadcast_to(gamma, np.shape(y)[:-1] + gamma.shape)
