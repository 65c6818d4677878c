"""
Transport
Curves in a chart, geodesics, horizontal parallel transport and indicatrix drift
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .connections import BerwaldField, ChernField, ConnectionField, FiberGeometry
from .errors import DegenerateDirection, LeftChart, PointError
from .ode import OdeIntegrator, OdeStats, merge_stats
from .structures import Chart, FinslerStructure

logger = logging.getLogger(__name__)

DEGENERATE_RATIO = 1e-12


@dataclass
class CurvePiece:
    """A smooth arc x(t), t in [t0, t1]"""
    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    t0: float = 0.0
    t1: float = 1.0

    def reversed(self) -> 'CurvePiece':
        total = self.t0 + self.t1
        position, velocity = self.position, self.velocity
        return CurvePiece(lambda t: position(total - t), lambda t: -velocity(total - t), self.t0, self.t1)


class CurveSpec:
    """Piecewise smooth base curve: geodesic, coordinate path or rectangle loop"""

    def __init__(self, kind: str, pieces: List[CurvePiece], meta: Optional[Dict] = None):
        self.kind = kind
        self.pieces = pieces
        self.meta = meta or {}

    @classmethod
    def path(cls, waypoints: Sequence[Sequence[float]], interpolation: str = 'linear') -> 'CurveSpec':
        points = np.asarray(waypoints, dtype=float)
        if len(points) < 2:
            raise ValueError("A coordinate path needs at least two waypoints")
        meta = {'waypoints': points.tolist(), 'interpolation': interpolation}

        if interpolation == 'linear':
            pieces = [cls._segment(p, q) for p, q in zip(points[:-1], points[1:])]
        elif interpolation == 'cubic':
            spline = CubicSpline(np.linspace(0.0, 1.0, len(points)), points, axis=0)
            slope = spline.derivative()
            pieces = [CurvePiece(lambda t: spline(t), lambda t: slope(t))]
        else:
            raise ValueError(f"Unknown interpolation '{interpolation}'")
        return cls('coordinate_path', pieces, meta)

    @staticmethod
    def _segment(p: np.ndarray, q: np.ndarray) -> CurvePiece:
        p, q = p.copy(), q.copy()
        return CurvePiece(lambda t: p + t * (q - p), lambda t: q - p)

    @classmethod
    def rectangle(cls, corner: Sequence[float], a: float, b: float, plane: Tuple[int, int] = (0, 1)) -> 'CurveSpec':
        """Loop corner -> +a e_p -> +b e_q -> back, with signed area a*b"""
        corner = np.asarray(corner, dtype=float)
        e_p = np.zeros_like(corner)
        e_q = np.zeros_like(corner)
        e_p[plane[0]] = a
        e_q[plane[1]] = b
        points = [corner, corner + e_p, corner + e_p + e_q, corner + e_q, corner]
        curve = cls.path(points)
        curve.kind = 'loop_rectangle'
        curve.meta.update({'corner': corner.tolist(), 'a': float(a), 'b': float(b),
                           'plane': list(plane), 'signed_area': float(a * b)})
        return curve

    @property
    def start(self) -> np.ndarray:
        first = self.pieces[0]
        return np.asarray(first.position(first.t0), dtype=float)

    @property
    def end(self) -> np.ndarray:
        last = self.pieces[-1]
        return np.asarray(last.position(last.t1), dtype=float)

    @property
    def signed_area(self) -> float:
        return self.meta.get('signed_area', 0.0)

    def reversed(self) -> 'CurveSpec':
        meta = dict(self.meta, reversed=not self.meta.get('reversed', False))
        if 'signed_area' in meta:
            meta['signed_area'] = -meta['signed_area']
        return CurveSpec(self.kind, [p.reversed() for p in reversed(self.pieces)], meta)

    def sample(self, per_piece: int = 16) -> np.ndarray:
        points = []
        for piece in self.pieces:
            for t in np.linspace(piece.t0, piece.t1, per_piece):
                points.append(piece.position(t))
        return np.asarray(points)

    def check_in_chart(self, chart: Chart):
        for point in self.sample():
            if not chart.contains(point):
                raise LeftChart("Curve leaves the chart box", point)

    def describe(self) -> Dict:
        return dict(self.meta, kind=self.kind, pieces=len(self.pieces))


@dataclass
class TransportResult:
    end_point: np.ndarray
    direction: Optional[np.ndarray]
    vectors: np.ndarray
    F_drift: float
    section_norm_drift: float
    ode_stats: OdeStats
    samples: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'end_point': self.end_point.tolist(),
            'direction': None if self.direction is None else self.direction.tolist(),
            'vectors': self.vectors.tolist(),
            'F_drift': self.F_drift,
            'section_norm_drift': self.section_norm_drift,
            'ode_stats': self.ode_stats.to_dict(),
        }


@dataclass
class Geodesic:
    curve: CurveSpec
    ts: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    result: TransportResult


def _default_integrator(integrator: Optional[OdeIntegrator], tol: Optional[float]) -> OdeIntegrator:
    if integrator is not None:
        return integrator
    if tol is not None:
        return OdeIntegrator(rtol=tol, atol=tol * 1e-2)
    return OdeIntegrator()


def _chart_guard(chart: Optional[Chart], position: Callable[[float], np.ndarray]):
    def guard(t, z):
        if chart is not None:
            x = position(t, z)
            if not chart.contains(x):
                raise LeftChart(f"Solution left the chart at t={t:.6g}", x, t)
    return guard


def integrate_geodesic(fs: FinslerStructure, x0: Sequence[float], y0: Sequence[float], length: float,
                       tol: Optional[float] = None, chart: Optional[Chart] = None,
                       integrator: Optional[OdeIntegrator] = None) -> Geodesic:
    """Unit-speed geodesic x'' + G(x, x') = 0 for arc length `length`"""
    n = fs.dimension
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    y0 = y0 / float(fs.value(x0, y0))
    integrator = _default_integrator(integrator, tol)
    chart = chart if chart is not None else fs.chart

    def rhs(s, z):
        x, v = z[:n], z[n:]
        try:
            spray = FiberGeometry(fs, x, v, 2).spray_from_energy
        except PointError as e:
            raise e.locate(x, v)
        return np.concatenate([v, -spray])

    trajectory = integrator.solve(rhs, (0.0, length), np.concatenate([x0, y0]),
                                  _chart_guard(chart, lambda t, z: z[:n]))
    dense = trajectory.dense
    piece = CurvePiece(lambda s: np.asarray(dense(s))[:n], lambda s: np.asarray(dense(s))[n:], 0.0, length)
    curve = CurveSpec('geodesic', [piece], {'x0': x0.tolist(), 'y0': y0.tolist(), 'length': float(length)})

    points, velocities = trajectory.states[:, :n], trajectory.states[:, n:]
    speeds = np.array([float(fs.value(x, v)) for x, v in zip(points, velocities)])
    result = TransportResult(points[-1], velocities[-1], velocities[-1][:, None],
                             float(np.max(np.abs(speeds - 1.0))), 0.0, trajectory.stats,
                             {'t': trajectory.ts, 'x': points, 'y': velocities})
    logger.debug(f"Geodesic from {x0.tolist()}: first-integral drift {result.F_drift:.3e}")
    return Geodesic(curve, trajectory.ts, points, velocities, result)


def connection_geodesic(connection: ConnectionField, x0: Sequence[float], v0: Sequence[float], length: float,
                        chart: Optional[Chart] = None, integrator: Optional[OdeIntegrator] = None) -> Geodesic:
    """Auto-parallel curve x'' + Gamma(x, x')(x', x') = 0 of any connection field"""
    n = connection.dimension
    integrator = _default_integrator(integrator, None)

    def rhs(s, z):
        x, v = z[:n], z[n:]
        gamma = connection.coefficients(x, v)
        return np.concatenate([v, -np.einsum('ijk,j,k->i', gamma, v, v)])

    z0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(v0, dtype=float)])
    trajectory = integrator.solve(rhs, (0.0, length), z0, _chart_guard(chart, lambda t, z: z[:n]))
    dense = trajectory.dense
    piece = CurvePiece(lambda s: np.asarray(dense(s))[:n], lambda s: np.asarray(dense(s))[n:], 0.0, length)
    points, velocities = trajectory.states[:, :n], trajectory.states[:, n:]
    result = TransportResult(points[-1], velocities[-1], velocities[-1][:, None], 0.0, 0.0, trajectory.stats)
    return Geodesic(CurveSpec('geodesic', [piece], {'length': float(length)}),
                    trajectory.ts, points, velocities, result)


@dataclass
class _PathSamples:
    ts: List[float] = field(default_factory=list)
    xs: List[np.ndarray] = field(default_factory=list)
    ys: List[Optional[np.ndarray]] = field(default_factory=list)
    frames: List[np.ndarray] = field(default_factory=list)


def _transport_pieces(connection: ConnectionField, curve: CurveSpec, y_start: Optional[np.ndarray],
                      sections: np.ndarray, integrator: OdeIntegrator,
                      chart: Optional[Chart]) -> Tuple[Optional[np.ndarray], np.ndarray, OdeStats, _PathSamples]:
    n = connection.dimension
    k = sections.shape[1]
    carries_direction = y_start is not None
    offset = n if carries_direction else 0
    y_norm0 = np.linalg.norm(y_start) if carries_direction else 1.0

    state = np.concatenate([y_start if carries_direction else np.zeros(0), sections.ravel()])
    samples = _PathSamples()
    stats = []

    for index, piece in enumerate(curve.pieces):
        def rhs(t, z, piece=piece):
            x, v = piece.position(t), piece.velocity(t)
            S = z[offset:].reshape(n, k)
            if carries_direction:
                y = z[:n]
                try:
                    N, gamma = connection.horizontal(x, y)
                except PointError as e:
                    raise e.locate(x, y)
                dy = -N @ v
            else:
                gamma = connection.coefficients(x)
                dy = np.zeros(0)
            dS = -np.einsum('ijk,jc,k->ic', gamma, S, v)
            return np.concatenate([dy, dS.ravel()])

        def guard(t, z, piece=piece):
            x = piece.position(t)
            if chart is not None and not chart.contains(x):
                raise LeftChart(f"Curve left the chart at t={t:.6g}", x, t)
            if carries_direction and np.linalg.norm(z[:n]) < DEGENERATE_RATIO * y_norm0:
                raise DegenerateDirection("Transported direction collapsed to zero", x, z[:n])

        trajectory = integrator.solve(rhs, (piece.t0, piece.t1), state, guard)
        stats.append(trajectory.stats)
        start = 0 if index == 0 else 1
        for t, z in zip(trajectory.ts[start:], trajectory.states[start:]):
            samples.ts.append(index + (t - piece.t0) / (piece.t1 - piece.t0))
            samples.xs.append(piece.position(t))
            samples.ys.append(z[:n].copy() if carries_direction else None)
            samples.frames.append(z[offset:].reshape(n, k).copy())
        state = trajectory.final

    y_end = state[:n] if carries_direction else None
    return y_end, state[offset:].reshape(n, k), merge_stats(stats), samples


def transport_along(connection: ConnectionField, curve: CurveSpec, y_start: Optional[Sequence[float]] = None,
                    sections: Optional[Sequence[Sequence[float]]] = None, fs: Optional[FinslerStructure] = None,
                    integrator: Optional[OdeIntegrator] = None, chart: Optional[Chart] = None) -> TransportResult:
    """Parallel transport of a direction and sections along a curve

    Sections are columns of `sections` (identity by default). The direction
    follows the horizontal lift dy/dt = -N(x, y) x'; sections follow
    dS/dt = -Gamma(x, y)(S, x') with y the lifted direction.
    """
    n = connection.dimension
    integrator = _default_integrator(integrator, None)
    if chart is not None:
        curve.check_in_chart(chart)
    if y_start is not None:
        y_start = np.asarray(y_start, dtype=float)
        if not np.any(y_start):
            raise DegenerateDirection("Starting direction must be non-zero", curve.start, y_start)
    elif connection.depends_on_direction:
        raise ValueError(f"{connection.kind} transport needs a starting direction")
    sections = np.eye(n) if sections is None else np.asarray(sections, dtype=float).reshape(n, -1)

    y_end, frame, stats, samples = _transport_pieces(connection, curve, y_start, sections, integrator, chart)

    F_drift = 0.0
    norm_drift = 0.0
    if fs is not None and y_start is not None:
        F0 = float(fs.value(curve.start, y_start))
        F_path = np.array([float(fs.value(x, y)) for x, y in zip(samples.xs, samples.ys)])
        F_drift = float(np.max(np.abs(F_path - F0)))
        norm_drift = _section_norm_drift(fs, curve, y_start, sections, y_end, frame)

    return TransportResult(curve.end, y_end, frame, F_drift, norm_drift, stats,
                           {'t': np.asarray(samples.ts), 'x': np.asarray(samples.xs)})


def _section_norm_drift(fs, curve, y_start, sections, y_end, frame) -> float:
    """Change of the g_(x,y) length of each section between the two ends"""
    start = FiberGeometry(fs, curve.start, y_start, 2).g
    end = FiberGeometry(fs, curve.end, y_end, 2).g
    before = np.sqrt(np.einsum('ic,ij,jc->c', sections, start, sections))
    after = np.sqrt(np.einsum('ic,ij,jc->c', frame, end, frame))
    return float(np.max(np.abs(after - before)))


def horizontal_transport(fs: FinslerStructure, connection_kind: str, curve: CurveSpec,
                         y_start: Sequence[float], tol: Optional[float] = None,
                         sections: Optional[Sequence[Sequence[float]]] = None,
                         chart: Optional[Chart] = None,
                         integrator: Optional[OdeIntegrator] = None) -> TransportResult:
    """Chern or Berwald transport along the horizontal lift of `curve`"""
    fields = {'chern': ChernField, 'berwald': BerwaldField}
    if connection_kind not in fields:
        raise ValueError(f"Horizontal transport supports {sorted(fields)}, got '{connection_kind}'")
    integrator = _default_integrator(integrator, tol)
    result = transport_along(fields[connection_kind](fs), curve, y_start, sections, fs, integrator,
                             chart if chart is not None else fs.chart)
    logger.debug(f"{connection_kind} transport along {curve.kind}: F drift {result.F_drift:.3e}")
    return result


def frame_transport(connection: ConnectionField, curve: CurveSpec, integrator: Optional[OdeIntegrator] = None,
                    chart: Optional[Chart] = None) -> TransportResult:
    """Transport matrix of a y-independent connection along a curve"""
    return transport_along(connection, curve, None, None, None, integrator, chart)


def indicatrix_points(fs: FinslerStructure, x: Sequence[float], count: int, seed: int = 42) -> np.ndarray:
    """Points of the indicatrix at x along evenly spread rays"""
    n = fs.dimension
    if n == 2:
        angles = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        rays = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        rays = np.random.default_rng(seed).normal(size=(count, n))
        rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    return rays / fs.value(x, rays)[:, None]


@dataclass
class IndicatrixDrift:
    max_drift: float
    mean_drift: float
    end_max_drift: float
    end_mean_drift: float
    samples: int
    ode_stats: OdeStats
    curve: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'max_drift': self.max_drift,
            'mean_drift': self.mean_drift,
            'end_max_drift': self.end_max_drift,
            'end_mean_drift': self.end_mean_drift,
            'samples': self.samples,
            'ode_stats': self.ode_stats.to_dict(),
            'curve': self.curve,
        }


def transport_indicatrix_sample(fs: FinslerStructure, connection: ConnectionField, curve: CurveSpec,
                                sample_count: int, integrator: Optional[OdeIntegrator] = None,
                                chart: Optional[Chart] = None, seed: int = 42) -> IndicatrixDrift:
    """Drift |F(x(t), S(t)) - 1| of indicatrix points moved by an affine connection

    The drift is tracked along the whole path (accepted step points) and
    separately at the end point.
    """
    if connection.depends_on_direction:
        raise ValueError("Indicatrix sampling transport needs a y-independent connection")
    if sample_count < 8:
        raise ValueError("At least 8 indicatrix samples are required")
    integrator = _default_integrator(integrator, None)
    chart = chart if chart is not None else fs.chart
    curve.check_in_chart(chart)

    points = indicatrix_points(fs, curve.start, sample_count, seed)
    _, _, stats, samples = _transport_pieces(connection, curve, None, np.eye(fs.dimension), integrator, chart)

    path_drift = np.array([np.abs(fs.value(x, points @ P.T) - 1.0) for x, P in zip(samples.xs, samples.frames)])
    end_drift = path_drift[-1]
    result = IndicatrixDrift(float(path_drift.max()), float(path_drift.mean()),
                             float(end_drift.max()), float(end_drift.mean()), sample_count, stats, curve.describe())
    logger.debug(f"Indicatrix drift along {curve.kind}: max {result.max_drift:.3e}, end {result.end_max_drift:.3e}")
    return result
