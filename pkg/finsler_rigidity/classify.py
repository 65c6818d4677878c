"""
Classification
Berwald, Landsberg, indicatrix-rigidity and interpolation criteria, and the
classifier that runs them and assembles a report
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .averaging import AveragedMetricField, MetricField, QuadratureScheme, averaged_connection
from .connections import ConnectionField, FiberGeometry
from .errors import InsufficientSamples, StrongConvexityViolation
from .holonomy import GENERAL_LINEAR, SPECIAL_LINEAR, holonomy_classify, holonomy_sample
from .jets import Jet, jet_basis
from .ode import OdeIntegrator
from .structures import Chart, FinslerStructure
from .tensors import check_convexity, convexity_scan, sphere_directions
from .transport import CurveSpec, transport_indicatrix_sample
from .verdicts import CriterionResult, Residual, Verdict, combine, scaled_tolerance

logger = logging.getLogger(__name__)

MIN_POINTS = 3
MIN_DIRECTIONS = 8
DEFAULT_T_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


# Sampling

def _resolve_points(fs: FinslerStructure, sample_points, rng: np.random.Generator) -> np.ndarray:
    if np.isscalar(sample_points):
        count = int(sample_points)
        if count < MIN_POINTS:
            raise InsufficientSamples(f"Need at least {MIN_POINTS} sample points, got {count}")
        return fs.chart.sample_points(rng, count, margin=0.05)
    points = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if len(points) < MIN_POINTS:
        raise InsufficientSamples(f"Need at least {MIN_POINTS} sample points, got {len(points)}")
    return points


def _resolve_directions(n: int, sample_dirs: int, rng: np.random.Generator) -> np.ndarray:
    if sample_dirs < MIN_DIRECTIONS:
        raise InsufficientSamples(f"Need at least {MIN_DIRECTIONS} directions per point, got {sample_dirs}")
    return sphere_directions(rng, n, sample_dirs)


def sample_loops(chart: Chart, rng: np.random.Generator, count: int, side: float,
                 plane: Sequence[int] = (0, 1)) -> List[CurveSpec]:
    """Square loops of the given side with corners drawn inside the chart"""
    p, q = plane
    side = min(float(side), 0.8 * float(min(chart.width[p], chart.width[q])))
    inset = 0.05 * chart.width
    lower = chart.lower + inset
    upper = chart.upper - inset
    upper[[p, q]] -= side
    corners = rng.uniform(lower, upper, size=(count, chart.dimension))
    return [CurveSpec.rectangle(corner, side, side, (p, q)) for corner in corners]


# Criteria

def berwald_test(fs: FinslerStructure, sample_points=5, sample_dirs: int = 16, tol: float = 1e-6,
                 seed: int = 42, scheme: Optional[QuadratureScheme] = None) -> CriterionResult:
    """Are the Chern coefficients independent of the direction?

    Two sub-tests: the spread of Gamma(x, y) over directions, and the gap
    between Gamma(x, y) and the averaged connection at x (surfaces and
    3-manifolds only). The averaged tolerance adds the quadrature error.
    """
    rng = np.random.default_rng(seed)
    points = _resolve_points(fs, sample_points, rng)
    directions = _resolve_directions(fs.dimension, sample_dirs, rng)
    averaging = fs.dimension in (2, 3)

    direct = averaged = magnitude = quadrature = 0.0
    per_point = []
    for x in points:
        chern = FiberGeometry(fs, x, directions, 3).chern
        spread = float(np.max(chern.max(axis=0) - chern.min(axis=0)))
        magnitude = max(magnitude, float(np.max(np.abs(chern))))
        entry = {'x': x.tolist(), 'direct': spread}
        direct = max(direct, spread)
        if averaging:
            mean = averaged_connection(fs, x, 'chern', scheme)
            gap = float(np.max(np.abs(chern - mean.gamma)))
            entry.update(averaged=gap, quadrature_error=mean.quadrature_error,
                         averaged_torsion=mean.coefficients.diagnostics['torsion'])
            averaged = max(averaged, gap)
            quadrature = max(quadrature, mean.quadrature_error)
        per_point.append(entry)

    samples = len(points) * len(directions)
    tolerance = scaled_tolerance(tol, magnitude)
    residuals = {'direct': Residual(direct, tolerance, samples, seed)}
    if averaging:
        residuals['averaged'] = Residual(averaged, tolerance + quadrature, samples, seed)
    verdict = combine(r.verdict for r in residuals.values())
    logger.info(f"Berwald test on {fs.name}: {verdict.value} (direct {direct:.3e}, averaged {averaged:.3e})")
    return CriterionResult('berwald', verdict, residuals,
                           {'points': per_point, 'averaged_subtest': averaging, 'max_coefficient': magnitude})


def landsberg_test(fs: FinslerStructure, sample_points=5, sample_dirs: int = 16, tol: float = 1e-6,
                   seed: int = 42) -> CriterionResult:
    """Does the horizontal derivative of the Cartan tensor along y/F vanish?"""
    rng = np.random.default_rng(seed)
    points = _resolve_points(fs, sample_points, rng)
    directions = _resolve_directions(fs.dimension, sample_dirs, rng)

    worst = magnitude = 0.0
    per_point = []
    for x in points:
        geometry = FiberGeometry(fs, x, directions, 4)
        value = float(np.max(np.abs(geometry.landsberg)))
        magnitude = max(magnitude, float(np.max(np.abs(geometry.cartan))))
        worst = max(worst, value)
        per_point.append({'x': x.tolist(), 'landsberg': value})

    residual = Residual(worst, scaled_tolerance(tol, magnitude), len(points) * len(directions), seed)
    logger.info(f"Landsberg test on {fs.name}: {residual.verdict.value} (max |A-dot| {worst:.3e})")
    return CriterionResult('landsberg', residual.verdict, {'landsberg_tensor': residual},
                           {'points': per_point, 'max_cartan': magnitude})


def _check_positive(metric_field: MetricField, x: np.ndarray):
    h = metric_field.value(x)
    check_convexity(h, x, np.ones(len(h)))


def _default_curves(fs: FinslerStructure, curves, seed: int, loop_count: int, loop_side: float) -> List[CurveSpec]:
    if curves is None:
        curves = sample_loops(fs.chart, np.random.default_rng(seed), loop_count, loop_side)
    if not curves:
        raise InsufficientSamples("Need at least one curve")
    return list(curves)


def rigidity_test(fs: FinslerStructure, metric_field: Optional[MetricField] = None,
                  curves: Optional[Sequence[CurveSpec]] = None, tol: float = 1e-6, seed: int = 42,
                  loop_count: int = 3, loop_side: float = 0.5, sample_count: int = 16,
                  integrator: Optional[OdeIntegrator] = None,
                  scheme: Optional[QuadratureScheme] = None) -> CriterionResult:
    """Is the indicatrix carried to itself by the Levi-Civita connection of h?

    h defaults to the averaged metric of F. A Berwald structure with an h that
    its Berwald connection preserves passes; a pass in turn points to Berwald.
    """
    metric_field = metric_field or AveragedMetricField(fs, scheme)
    connection = metric_field.levi_civita()
    curves = _default_curves(fs, curves, seed, loop_count, loop_side)

    drifts = []
    for curve in curves:
        _check_positive(metric_field, curve.start)
        drifts.append(transport_indicatrix_sample(fs, connection, curve, sample_count, integrator, fs.chart, seed))

    worst = max(d.max_drift for d in drifts)
    residual = Residual(worst, tol, len(curves) * sample_count, seed)
    logger.info(f"Rigidity test on {fs.name}: {residual.verdict.value} (max drift {worst:.3e})")
    return CriterionResult('rigidity', residual.verdict, {'indicatrix_drift': residual},
                           {'metric': type(metric_field).__name__,
                            'curves': [d.to_dict() for d in drifts]})


class InterpolatedStructure(FinslerStructure):
    """F_t = (1 - t) F + t |y|_h, between F (t = 0) and the Riemannian norm of h (t = 1)"""

    def __init__(self, fs: FinslerStructure, metric_field: MetricField, t: float):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"Interpolation parameter must lie in [0, 1], got {t}")
        super().__init__(fs.dimension, name=f"{fs.name}@t={t:g}", family='interpolated',
                         params={'t': float(t), 'base': fs.name}, chart=fs.chart)
        self.base = fs
        self.metric_field = metric_field
        self.t = float(t)

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check_shapes(x, y)
        if self.t == 0.0:
            return self.base.value(x, y)
        riemannian = self.metric_field.norm(x, y)
        if self.t == 1.0:
            return riemannian
        return (1.0 - self.t) * self.base.value(x, y) + self.t * riemannian

    def jet(self, x, y, order: int) -> Jet:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check_shapes(x, y)
        if self.t == 0.0:
            return self.base.jet(x, y, order)
        n = self.dimension
        basis = jet_basis(2 * n, order)
        h = self.metric_field.jet(x, order)
        ys = [Jet.variable(basis, n + i, y[..., i]) for i in range(n)]
        riemannian = sum(h[i][j] * ys[i] * ys[j] for i in range(n) for j in range(n)).sqrt()
        if self.t == 1.0:
            return riemannian
        return self.base.jet(x, y, order) * (1.0 - self.t) + riemannian * self.t

    def describe(self) -> Dict[str, Any]:
        return dict(super().describe(), t=self.t)


@dataclass
class NestingCheck:
    """How the indicatrices of F and h sit relative to each other on sampled rays"""
    rays: int
    monotone: bool
    contact_rays: int
    nested: bool
    min_gap: float

    @property
    def non_intersecting(self) -> bool:
        return self.nested and self.contact_rays == 0


def indicatrix_nesting(fs: FinslerStructure, metric_field: MetricField, points: np.ndarray,
                       t_grid: Sequence[float], rays: int = 32, tol: float = 1e-6, seed: int = 42) -> NestingCheck:
    """F_t along each ray is affine in t; two indicatrices of the family meet only
    on rays where F and |.|_h agree"""
    rng = np.random.default_rng(seed)
    t = np.asarray(sorted(t_grid), dtype=float)
    monotone, contacts, signs, gaps = True, 0, set(), []
    for x in points:
        u = sphere_directions(rng, fs.dimension, rays)
        F = fs.value(x, u)
        R = metric_field.norm(x, u)
        table = (1.0 - t)[:, None] * F + t[:, None] * R
        steps = np.diff(table, axis=0)
        slack = 1e-12 * np.maximum(F, R)
        monotone &= bool(np.all(np.all(steps >= -slack, axis=0) | np.all(steps <= slack, axis=0)))
        gap = (R - F) / np.maximum(F, R)
        contact = np.abs(gap) <= tol
        contacts += int(np.sum(contact))
        signs.update(np.sign(gap[~contact]).tolist())
        gaps.append(float(np.min(np.abs(gap))))
    return NestingCheck(len(points) * rays, monotone, contacts, len(signs) <= 1, min(gaps))


def interpolated_indicatrix_test(fs: FinslerStructure, metric_field: Optional[MetricField] = None,
                                 t_grid: Sequence[float] = DEFAULT_T_GRID,
                                 curves: Optional[Sequence[CurveSpec]] = None, tol: float = 1e-6,
                                 seed: int = 42, connection: Optional[ConnectionField] = None,
                                 loop_count: int = 3, loop_side: float = 0.5, sample_count: int = 16,
                                 integrator: Optional[OdeIntegrator] = None,
                                 scheme: Optional[QuadratureScheme] = None) -> CriterionResult:
    """Drift of the indicatrix of each F_t under the Levi-Civita connection of h

    A t where F_t is not strongly convex is reported and skipped.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t < 0.0 or t > 1.0 for t in t_grid):
        raise ValueError(f"Interpolation grid must be a non-empty subset of [0, 1], got {t_grid}")
    metric_field = metric_field or AveragedMetricField(fs, scheme)
    connection = connection or metric_field.levi_civita()
    curves = _default_curves(fs, curves, seed, loop_count, loop_side)

    table, residuals, verdicts = [], {}, []
    for t in t_grid:
        structure = InterpolatedStructure(fs, metric_field, t)
        row: Dict[str, Any] = {'t': t}
        try:
            eigenvalue = min(convexity_scan(structure, c.start, 16, seed).min_eigenvalue for c in curves)
            drifts = [transport_indicatrix_sample(structure, connection, c, sample_count, integrator,
                                                  fs.chart, seed) for c in curves]
        except StrongConvexityViolation as e:
            logger.warning(f"F_t is not strongly convex at t={t:g}: {e}")
            row.update(verdict=Verdict.INCONCLUSIVE.value, error=e.to_dict())
            verdicts.append(Verdict.INCONCLUSIVE)
            table.append(row)
            continue

        drift = max(d.max_drift for d in drifts)
        residual = Residual(drift, tol, len(curves) * sample_count, seed)
        residuals[f"drift_t={t:g}"] = residual
        verdicts.append(residual.verdict)
        row.update(max_drift=drift, min_eigenvalue=eigenvalue, verdict=residual.verdict.value,
                   curve_drifts=[d.max_drift for d in drifts])
        table.append(row)

    points = np.asarray([c.start for c in curves])
    nesting = indicatrix_nesting(fs, metric_field, points, t_grid, tol=tol, seed=seed)
    verdict = combine(verdicts)
    logger.info(f"Interpolation test on {fs.name}: {verdict.value} over t={t_grid}")
    return CriterionResult('interpolation', verdict, residuals,
                           {'table': table, 'connection': connection.kind,
                            'nesting': dict(asdict(nesting), non_intersecting=nesting.non_intersecting)})


def christoffel_magnitude(fs: FinslerStructure, points: np.ndarray, directions: np.ndarray) -> float:
    """Largest formal Christoffel symbol over the sample"""
    return max(float(np.max(np.abs(FiberGeometry(fs, x, directions, 3).gamma))) for x in points)


# Report

@dataclass
class ClassificationReport:
    metric: Dict[str, Any]
    verdicts: Dict[str, str]
    residuals: Dict[str, Dict[str, Residual]]
    sampling: Dict[str, Any]
    criteria: Dict[str, Any] = field(default_factory=dict)
    consistency: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    flags: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'metric': self.metric,
            'verdicts': dict(sorted(self.verdicts.items())),
            'residuals': {name: {key: r.to_dict() for key, r in sorted(group.items())}
                          for name, group in sorted(self.residuals.items())},
            'sampling': self.sampling,
            'criteria': {name: self.criteria[name] for name in sorted(self.criteria)},
            'consistency': dict(sorted(self.consistency.items())),
            'flags': self.flags,
        }


def _implication(premise: Optional[bool], conclusion: Optional[bool], statement: str) -> Dict[str, Any]:
    if premise is None or conclusion is None or not premise:
        status = 'not_applicable'
    else:
        status = 'consistent' if conclusion else 'violated'
    return {'statement': statement, 'status': status}


def _is(verdicts: Dict[str, str], key: str, value: str) -> Optional[bool]:
    if key not in verdicts or verdicts[key] == Verdict.INCONCLUSIVE.value:
        return None
    return verdicts[key] == value


class StructureClassifier:
    """Runs the classification criteria on one Finsler structure"""

    CRITERIA = ('berwald', 'holonomy', 'interpolation', 'landsberg', 'rigidity')

    def __init__(self, fs: FinslerStructure, metric_field: Optional[MetricField] = None,
                 integrator: Optional[OdeIntegrator] = None):
        self.logger = logging.getLogger(__name__)
        self.fs = fs
        self.integrator = integrator or OdeIntegrator()

        self.default_params = {
            'tolerance': 1e-6,
            'seed': 42,
            'sample_points': 5,
            'sample_directions': 16,
            'quadrature_nodes': 64,
            'rigidity_loops': 3,
            'loop_side': 0.5,
            'indicatrix_samples': 16,
            't_grid': list(DEFAULT_T_GRID),
            'holonomy_sizes': [0.2, 0.4],
            'holonomy_loops': 8,
            'holonomy_base': None,
            'criteria': list(self.CRITERIA),
        }
        self.scheme = QuadratureScheme.default(fs.dimension) if fs.dimension in (2, 3) else None
        self.metric_field = metric_field
        self.logger.info(f"StructureClassifier initialized for {fs.name}")

    def classify(self, **kwargs) -> ClassificationReport:
        unknown = set(kwargs) - set(self.default_params)
        if unknown:
            raise ValueError(f"Unknown classification parameters: {sorted(unknown)}")
        params = self.default_params.copy()
        params.update(kwargs)
        unsupported = set(params['criteria']) - set(self.CRITERIA)
        if unsupported:
            raise ValueError(f"Unknown criteria: {sorted(unsupported)}")

        fs = self.fs
        tol, seed = params['tolerance'], params['seed']
        if fs.dimension in (2, 3):
            self.scheme = QuadratureScheme.default(fs.dimension, params['quadrature_nodes'])
        if self.metric_field is None and self.scheme is not None:
            self.metric_field = AveragedMetricField(fs, self.scheme)

        rng = np.random.default_rng(seed)
        points = _resolve_points(fs, params['sample_points'], rng)
        curves = sample_loops(fs.chart, rng, params['rigidity_loops'], params['loop_side'])
        requested = sorted(params['criteria'])
        results: Dict[str, Any] = {}

        for name in requested:
            self.logger.info(f"Running {name} criterion on {fs.name}")
            if name in ('rigidity', 'interpolation') and self.metric_field is None:
                self.logger.warning(f"{name} criterion skipped: no Riemannian metric for n={fs.dimension}")
                continue
            if name == 'berwald':
                results[name] = berwald_test(fs, points, params['sample_directions'], tol, seed, self.scheme)
            elif name == 'landsberg':
                results[name] = landsberg_test(fs, points, params['sample_directions'], tol, seed)
            elif name == 'rigidity':
                results[name] = rigidity_test(fs, self.metric_field, curves, tol, seed,
                                              sample_count=params['indicatrix_samples'],
                                              integrator=self.integrator, scheme=self.scheme)
            elif name == 'interpolation':
                results[name] = interpolated_indicatrix_test(fs, self.metric_field, params['t_grid'], curves, tol,
                                                             seed, sample_count=params['indicatrix_samples'],
                                                             integrator=self.integrator, scheme=self.scheme)
            elif name == 'holonomy':
                if fs.dimension != 2:
                    self.logger.warning(f"Holonomy classification skipped for n={fs.dimension}")
                    continue
                sample = holonomy_sample(fs, params['holonomy_base'], params['holonomy_sizes'],
                                         params['holonomy_loops'], integrator=self.integrator, scheme=self.scheme)
                results[name] = (sample, holonomy_classify(sample, tol, seed))

        report = self._assemble(results, points, curves, params)
        self.logger.info(f"Classification of {fs.name}: {report.verdicts}")
        return report

    def _assemble(self, results: Dict[str, Any], points: np.ndarray, curves: List[CurveSpec],
                  params: Dict[str, Any]) -> ClassificationReport:
        names = {'berwald': 'is_berwald', 'landsberg': 'is_landsberg', 'rigidity': 'rigidity_holds',
                 'interpolation': 'interpolation_invariant'}
        verdicts, residuals, criteria = {}, {}, {}
        for name in sorted(results):
            if name == 'holonomy':
                sample, classification = results[name]
                verdicts['holonomy_class'] = classification.holonomy_class
                residuals['holonomy_class'] = dict(classification.residuals)
                residuals['holonomy_class']['inverse_loop'] = Residual(
                    sample.inverse_residual, 1e-7, len(sample.loops), params['seed'])
                criteria[name] = dict(classification.to_dict(), sample=sample.to_dict())
                continue
            outcome = results[name]
            verdicts[names[name]] = outcome.verdict.value
            residuals[names[name]] = outcome.residuals
            criteria[name] = outcome.to_dict()

        consistency = {
            'berwald_implies_landsberg': _implication(
                _is(verdicts, 'is_berwald', 'yes'), _is(verdicts, 'is_landsberg', 'yes'),
                "A Berwald structure is Landsberg"),
            'berwald_implies_rigidity': _implication(
                _is(verdicts, 'is_berwald', 'yes'), _is(verdicts, 'rigidity_holds', 'yes'),
                "A Berwald structure keeps its indicatrix under the averaged metric's connection"),
            'rigidity_failure_implies_not_berwald': _implication(
                _is(verdicts, 'rigidity_holds', 'no'), _is(verdicts, 'is_berwald', 'no'),
                "An indicatrix that drifts rules out Berwald"),
            'interpolation_drift_implies_not_berwald': _implication(
                _is(verdicts, 'interpolation_invariant', 'no'), _is(verdicts, 'is_berwald', 'no'),
                "A drifting interpolated indicatrix rules out Berwald"),
        }
        return ClassificationReport(
            metric=self.fs.describe(),
            verdicts=verdicts,
            residuals=residuals,
            sampling={'points': points.tolist(), 'curves': [c.describe() for c in curves],
                      'seed': params['seed'], 'sample_directions': params['sample_directions'],
                      'quadrature': None if self.scheme is None else self.scheme.to_dict()},
            criteria=criteria,
            consistency=consistency,
            flags=self._flags(verdicts, points, params),
        )

    def _flags(self, verdicts: Dict[str, str], points: np.ndarray, params: Dict[str, Any]) -> Dict[str, Any]:
        flags: Dict[str, Any] = {}
        if verdicts.get('is_berwald') == Verdict.YES.value:
            directions = sphere_directions(np.random.default_rng(params['seed']), self.fs.dimension,
                                           params['sample_directions'])
            magnitude = christoffel_magnitude(self.fs, points, directions)
            flags['locally_minkowski_in_chart'] = magnitude <= params['tolerance']
            flags['locally_minkowski_note'] = ("Detected from vanishing Christoffel symbols in the given "
                                               "chart; other charts may hide a locally Minkowski structure")
        flags['pure_landsberg_candidate'] = (
            verdicts.get('is_landsberg') == Verdict.YES.value
            and verdicts.get('is_berwald') == Verdict.NO.value
            and verdicts.get('holonomy_class') in (SPECIAL_LINEAR, GENERAL_LINEAR)
            and not flags.get('locally_minkowski_in_chart', False))
        return flags
