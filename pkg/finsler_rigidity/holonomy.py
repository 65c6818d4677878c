"""
Holonomy
Transport matrices of a base connection around rectangle loops and a
sample-based classification of the group they generate
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import logm

from .averaging import AveragedConnectionField, QuadratureScheme
from .connections import ConnectionField
from .errors import InsufficientSamples, UnsupportedDimension
from .ode import OdeIntegrator, OdeStats, merge_stats
from .structures import FinslerStructure
from .transport import CurveSpec, frame_transport
from .verdicts import Residual

logger = logging.getLogger(__name__)

TRIVIAL = 'trivial'
METRIC_PRESERVING = 'metric_preserving'
SPECIAL_LINEAR = 'special_linear'
GENERAL_LINEAR = 'general_linear'

QUADRANTS = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
ASPECTS = [1.0, 0.5, 0.75]
MIN_MATRICES = 6


@dataclass
class HolonomySample:
    x: np.ndarray
    loops: List[CurveSpec]
    matrices: np.ndarray
    determinants: np.ndarray
    logs: np.ndarray
    areas: np.ndarray
    sizes: np.ndarray
    inverse_residual: float
    ode_stats: Optional[OdeStats] = None

    @property
    def log_per_area(self) -> np.ndarray:
        return self.logs / self.areas[:, None, None]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': self.x.tolist(),
            'loops': [loop.describe() for loop in self.loops],
            'matrices': self.matrices.tolist(),
            'determinants': self.determinants.tolist(),
            'logs': self.logs.tolist(),
            'areas': self.areas.tolist(),
            'inverse_residual': self.inverse_residual,
            'area_scaling': area_scaling(self),
            'ode_stats': None if self.ode_stats is None else self.ode_stats.to_dict(),
        }


@dataclass
class HolonomyClassification:
    holonomy_class: str
    residuals: Dict[str, Residual]
    invariant_form: Optional[np.ndarray]
    statement: str
    matrices: int
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holonomy_class': self.holonomy_class,
            'residuals': {key: self.residuals[key].to_dict() for key in sorted(self.residuals)},
            'invariant_form': None if self.invariant_form is None else self.invariant_form.tolist(),
            'statement': self.statement,
            'matrices': self.matrices,
            'details': self.details,
        }


def real_log(matrix: np.ndarray) -> np.ndarray:
    """Principal matrix logarithm, real part"""
    return np.real(logm(matrix))


def holonomy_loops(x: Sequence[float], loop_sizes: Sequence[float], loop_count: int) -> List[CurveSpec]:
    """Rectangles based at x: every size, cycling through quadrants and aspect ratios"""
    loops = []
    for size in loop_sizes:
        for k in range(loop_count):
            sx, sy = QUADRANTS[k % len(QUADRANTS)]
            aspect = ASPECTS[(k // len(QUADRANTS)) % len(ASPECTS)]
            loop = CurveSpec.rectangle(x, sx * size * aspect, sy * size)
            loop.meta['size'] = float(size)
            loops.append(loop)
    return loops


def _holonomy_matrix(connection: ConnectionField, loop: CurveSpec, integrator, chart) -> tuple:
    result = frame_transport(connection, loop, integrator, chart)
    return result.vectors, result.ode_stats


def holonomy_sample(fs: FinslerStructure, x: Optional[Sequence[float]] = None,
                    loop_sizes: Sequence[float] = (0.2, 0.4), loop_count: int = 8,
                    connection: Optional[ConnectionField] = None, integrator: Optional[OdeIntegrator] = None,
                    scheme: Optional[QuadratureScheme] = None) -> HolonomySample:
    """Transport the coordinate frame around rectangles based at x

    The connection defaults to the averaged Chern connection. The inverse-loop
    residual is measured on the first loop of every size.
    """
    if fs.dimension != 2:
        raise UnsupportedDimension(f"Holonomy sampling is available for surfaces only, got n={fs.dimension}")
    if loop_count < 1 or not len(loop_sizes):
        raise InsufficientSamples("Holonomy sampling needs at least one loop size and one loop")
    x = fs.chart.center if x is None else np.asarray(x, dtype=float)
    connection = connection or AveragedConnectionField(fs, 'chern', scheme)
    integrator = integrator or OdeIntegrator()
    chart = fs.chart

    loops = holonomy_loops(x, loop_sizes, loop_count)
    matrices, stats = [], []
    inverse_residual = 0.0
    for index, loop in enumerate(loops):
        H, loop_stats = _holonomy_matrix(connection, loop, integrator, chart)
        matrices.append(H)
        stats.append(loop_stats)
        if index % loop_count == 0:
            H_back, back_stats = _holonomy_matrix(connection, loop.reversed(), integrator, chart)
            stats.append(back_stats)
            inverse_residual = max(inverse_residual, float(np.max(np.abs(H_back @ H - np.eye(2)))))

    matrices = np.asarray(matrices)
    sample = HolonomySample(
        x=x,
        loops=loops,
        matrices=matrices,
        determinants=np.linalg.det(matrices),
        logs=np.asarray([real_log(H) for H in matrices]),
        areas=np.asarray([loop.signed_area for loop in loops]),
        sizes=np.asarray([loop.meta['size'] for loop in loops]),
        inverse_residual=inverse_residual,
        ode_stats=merge_stats(stats),
    )
    logger.info(f"Holonomy sample at {x.tolist()}: {len(loops)} loops, "
                f"inverse-loop residual {inverse_residual:.3e}")
    return sample


def loop_product(connection: ConnectionField, first: CurveSpec, second: CurveSpec,
                 integrator: Optional[OdeIntegrator] = None, chart=None) -> tuple:
    """Matrix of `first` followed by `second` and the product of their separate matrices"""
    joined = CurveSpec('loop_composite', first.pieces + second.pieces,
                       {'signed_area': first.signed_area + second.signed_area})
    H_joined, _ = _holonomy_matrix(connection, joined, integrator, chart)
    H_first, _ = _holonomy_matrix(connection, first, integrator, chart)
    H_second, _ = _holonomy_matrix(connection, second, integrator, chart)
    return H_joined, H_second @ H_first


def area_scaling(sample: HolonomySample) -> Dict[str, Any]:
    """Mean log-matrix per unit area for each loop size, and the relative change
    between the two smallest sizes"""
    sizes = sorted(set(sample.sizes.tolist()))
    means = {size: sample.log_per_area[sample.sizes == size].mean(axis=0) for size in sizes}
    scaling = {'sizes': sizes, 'log_per_area': [means[size].tolist() for size in sizes],
               'relative_change': None}
    if len(sizes) >= 2:
        small, next_small = means[sizes[0]], means[sizes[1]]
        scale = float(np.max(np.abs(small)))
        if scale > 1e-12:
            scaling['relative_change'] = float(np.max(np.abs(small - next_small)) / scale)
    return scaling


def rotation_angle(matrix: np.ndarray, form: np.ndarray) -> float:
    """Angle of a 2x2 map preserving `form`, read in a form-orthonormal frame"""
    L = np.linalg.cholesky(form)
    R = L.T @ matrix @ np.linalg.inv(L.T)
    return float(np.arctan2(R[1, 0], R[0, 0]))


def fit_invariant_form(matrices: np.ndarray) -> tuple:
    """Least-squares symmetric Q with H^T Q H = Q for every H

    Returns Q normalised to trace n (sign chosen so the trace is positive)
    and the worst entry of H^T Q H - Q for Q of unit Frobenius norm.
    """
    n = matrices.shape[-1]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    basis = []
    for i, j in pairs:
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        basis.append(E)

    rows = []
    for H in matrices:
        columns = [(H.T @ E @ H - E).ravel() for E in basis]
        rows.append(np.stack(columns, axis=1))
    system = np.concatenate(rows, axis=0)
    _, _, vt = np.linalg.svd(system)
    coeffs = vt[-1]
    Q = sum(c * E for c, E in zip(coeffs, basis))
    Q = Q / np.linalg.norm(Q)
    if np.trace(Q) < 0:
        Q = -Q
    residual = float(max(np.max(np.abs(H.T @ Q @ H - Q)) for H in matrices))
    if abs(np.trace(Q)) > 1e-12:
        Q = Q * n / np.trace(Q)
    return Q, residual


def holonomy_classify(sample, tol: float = 1e-6, seed: int = 42) -> HolonomyClassification:
    """Smallest of trivial, metric_preserving, special_linear, general_linear
    that contains every sampled matrix"""
    matrices = np.asarray(sample.matrices if isinstance(sample, HolonomySample) else sample, dtype=float)
    if matrices.ndim != 3 or len(matrices) < MIN_MATRICES:
        raise InsufficientSamples(f"Holonomy classification needs at least {MIN_MATRICES} matrices, "
                                  f"got {0 if matrices.ndim != 3 else len(matrices)}")
    count = len(matrices)
    n = matrices.shape[-1]

    identity_gap = float(np.max(np.abs(matrices - np.eye(n))))
    determinants = np.linalg.det(matrices)
    det_gap = float(np.max(np.abs(determinants - 1.0)))
    Q, fit_residual = fit_invariant_form(matrices)
    positive = bool(np.linalg.eigvalsh(Q)[0] > 0)

    residuals = {
        'identity': Residual(identity_gap, tol, count, seed),
        'invariant_form_fit': Residual(fit_residual, tol, count, seed),
        'determinant': Residual(det_gap, tol, count, seed),
    }

    invariant_form = None
    if identity_gap <= tol:
        holonomy_class = TRIVIAL
    elif positive and fit_residual <= tol:
        holonomy_class = METRIC_PRESERVING
        invariant_form = Q
    elif det_gap <= tol:
        holonomy_class = SPECIAL_LINEAR
    else:
        holonomy_class = GENERAL_LINEAR

    implication = ('compatible with a pure Landsberg surface'
                   if holonomy_class in (SPECIAL_LINEAR, GENERAL_LINEAR)
                   else 'excludes a pure Landsberg surface, which needs special_linear or general_linear holonomy')
    statement = (f"{count} sampled loop matrices generate a sub-semigroup of class {holonomy_class}; "
                 f"this is a sample-based classification, not a proof, and is {implication}")
    logger.info(f"Holonomy class {holonomy_class} (identity gap {identity_gap:.3e}, "
                f"form fit {fit_residual:.3e}, det gap {det_gap:.3e})")
    return HolonomyClassification(holonomy_class, residuals, invariant_form, statement, count,
                                  {'determinants': determinants.tolist(), 'positive_form': positive})
