"""
Analysis Runner
Runs the analyses of a run configuration in dependency order and assembles
the report
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .averaging import QuadratureScheme, averaged_connection, averaged_metric, sample_indicatrix
from .classify import StructureClassifier, sample_loops
from .config import RunConfig, load_run_config
from .connections import FiberGeometry
from .errors import ConfigError, FinslerError, NotHomogeneous
from .holonomy import holonomy_classify, holonomy_sample
from .registry import MetricRegistry
from .report import build_report, tensor_header, tensor_rows, write_csv, write_report
from .structures import ExpressionStructure, FinslerStructure
from .tensors import convexity_scan, sphere_directions
from .transport import horizontal_transport, indicatrix_points, integrate_geodesic
from .verdicts import Residual, Verdict

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERTION = 2

ASSERTION_VERDICTS = {'berwald': 'is_berwald', 'landsberg': 'is_landsberg', 'rigidity': 'rigidity_holds'}
HOMOGENEITY_TOL = 1e-9


@dataclass
class RunOutcome:
    report: Dict[str, Any]
    exit_code: int
    structure: Optional[FinslerStructure] = None


class FinslerAnalysisRunner:
    """Executes run configurations against the metric registry"""

    def __init__(self, registry: Optional[MetricRegistry] = None):
        self.logger = logging.getLogger(__name__)
        self.registry = registry or MetricRegistry()
        self.analyses: Dict[str, Callable] = {
            'tensors': self._analyze_tensors,
            'connections': self._analyze_connections,
            'geodesic': self._analyze_geodesic,
            'transport': self._analyze_transport,
            'average': self._analyze_average,
            'classify': self._analyze_classify,
            'holonomy': self._analyze_holonomy,
        }
        self.logger.info("FinslerAnalysisRunner initialized")

    def run_file(self, path: str, seed: Optional[int] = None, out: Optional[str] = None,
                 assertion: Optional[str] = None, analyses: Optional[List[str]] = None,
                 write: bool = True) -> RunOutcome:
        """Load, run and write one config; config errors become an error report"""
        try:
            config = load_run_config(path, seed, out, assertion)
        except ConfigError as e:
            self.logger.error(f"Invalid configuration {path}: {e}")
            return RunOutcome(build_report({'source': str(path)}, {}, {}, {}, {}, [e.to_dict()]), EXIT_ERROR)
        if analyses is not None:
            config.analyses = [name for name in self.analyses if name in analyses]
        return self.run(config, write)

    def run(self, config: RunConfig, write: bool = True) -> RunOutcome:
        numeric = config.numeric
        analyses = list(config.analyses)
        if config.assertion and 'classify' not in analyses:
            analyses.append('classify')
        analyses = [name for name in self.analyses if name in analyses]
        config = replace(config, analyses=analyses)

        try:
            fs = self.registry.build(config.metric, config.chart)
            self._check_structure(fs, numeric['seed'])
        except FinslerError as e:
            self.logger.error(f"Could not build metric: {e}")
            report = build_report(config.to_dict(), {}, {}, {}, {}, [dict(e.to_dict(), analysis='metric')])
            return self._finish(report, config, EXIT_ERROR, None, write)

        verdicts: Dict[str, Any] = {}
        residuals: Dict[str, Any] = {}
        samples: Dict[str, Any] = {}
        timings: Dict[str, float] = {}
        errors: List[Dict[str, Any]] = []

        for name in analyses:
            self.logger.info(f"Running analysis '{name}' on {fs.name}")
            started = time.perf_counter()
            try:
                result_verdicts, result_residuals, result_samples = self.analyses[name](fs, config)
            except FinslerError as e:
                self.logger.error(f"Analysis '{name}' failed: {e}")
                errors.append(dict(e.to_dict(), analysis=name))
                continue
            except ValueError as e:
                self.logger.error(f"Analysis '{name}' failed: {e}")
                errors.append({'type': type(e).__name__, 'message': str(e), 'analysis': name})
                continue
            finally:
                if numeric['record_timings']:
                    timings[name] = time.perf_counter() - started
            verdicts.update(result_verdicts)
            residuals.update(result_residuals)
            samples[name] = result_samples

        report = build_report(config.to_dict(), verdicts, residuals, samples, timings, errors)
        exit_code = EXIT_ERROR if errors else EXIT_OK
        if not errors and config.assertion:
            verdict = verdicts.get(ASSERTION_VERDICTS[config.assertion])
            if verdict == Verdict.NO.value:
                self.logger.warning(f"Assertion '{config.assertion}' failed: verdict {verdict}")
                exit_code = EXIT_ASSERTION
        return self._finish(report, config, exit_code, fs, write)

    def _finish(self, report, config: RunConfig, exit_code: int, fs, write: bool) -> RunOutcome:
        if write:
            path = write_report(report, config.output['report'])
            self.logger.info(f"Report written to {path}")
            if fs is not None and config.output.get('csv'):
                self._write_tensor_csv(fs, config)
        return RunOutcome(report, exit_code, fs)

    def _check_structure(self, fs: FinslerStructure, seed: int):
        if isinstance(fs, ExpressionStructure):
            check = fs.check_homogeneity(32, HOMOGENEITY_TOL, seed)
            if not check.passed:
                raise NotHomogeneous(f"Metric is not positively 1-homogeneous in y "
                                     f"(worst residual {check.max_residual:.3e})", check.max_residual)

    # sampling shared by the pointwise analyses

    @staticmethod
    def _samples(fs: FinslerStructure, numeric: Dict[str, Any]) -> Tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(numeric['seed'])
        points = fs.chart.sample_points(rng, numeric['sample_points'], margin=0.05)
        directions = sphere_directions(rng, fs.dimension, numeric['sample_directions'])
        return points, directions

    def _write_tensor_csv(self, fs: FinslerStructure, config: RunConfig):
        points, directions = self._samples(fs, config.numeric)
        try:
            rows = tensor_rows(fs, points, directions)
        except FinslerError as e:
            self.logger.error(f"Could not tabulate tensors: {e}")
            return
        path = write_csv(config.output['csv'], tensor_header(fs.dimension), rows,
                         {'metric': fs.name, 'seed': config.numeric['seed']})
        self.logger.info(f"Tensor table written to {path}")

    # analyses: each returns (verdicts, residuals, samples)

    def _analyze_tensors(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        seed, tol = numeric['seed'], numeric['tolerance']
        points, directions = self._samples(fs, numeric)
        count = len(points) * len(directions)

        inverse = euler = cartan_symmetry = cartan_contraction = 0.0
        scans = []
        for x in points:
            geometry = FiberGeometry(fs, x, directions, 3)
            g, g_inv, A, F = geometry.g, geometry.g_inv, geometry.cartan, geometry.F
            inverse = max(inverse, float(np.max(np.abs(g @ g_inv - np.eye(fs.dimension)))))
            euler = max(euler, float(np.max(np.abs(np.einsum('kij,ki,kj->k', g, directions, directions) - F ** 2))))
            cartan_symmetry = max(cartan_symmetry,
                                  float(np.max(np.abs(A - np.swapaxes(A, -1, -2)))),
                                  float(np.max(np.abs(A - np.swapaxes(A, -3, -2)))))
            cartan_contraction = max(cartan_contraction,
                                     float(np.max(np.abs(np.einsum('kijl,kl->kij', A, directions)))))
            scan = convexity_scan(fs, x, numeric['sample_directions'], seed)
            scans.append({'x': x.tolist(), 'min_eigenvalue': scan.min_eigenvalue,
                          'worst_direction': scan.worst_direction.tolist()})

        residuals = {'tensors': {
            'inverse': Residual(inverse, 1e-10, count, seed),
            'euler_identity': Residual(euler, 1e-9, count, seed),
            'cartan_symmetry': Residual(cartan_symmetry, 1e-10, count, seed),
            'cartan_contraction': Residual(cartan_contraction, 1e-9, count, seed),
        }}
        if isinstance(fs, ExpressionStructure):
            check = fs.check_homogeneity(32, HOMOGENEITY_TOL, seed)
            residuals['tensors']['homogeneity'] = Residual(check.max_residual, HOMOGENEITY_TOL, check.samples, seed)
        return {}, residuals, {'points': points.tolist(), 'convexity': scans, 'tolerance': tol}

    def _analyze_connections(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        seed = numeric['seed']
        points, directions = self._samples(fs, numeric)
        count = len(points) * len(directions)

        worst = {'torsion': 0.0, 'horizontal_compatibility': 0.0, 'vertical_compatibility': 0.0,
                 'nonlinear_variants': 0.0, 'berwald_torsion': 0.0}
        per_point = []
        for x in points:
            geometry = FiberGeometry(fs, x, directions, 4)
            structure = geometry.structure_residuals
            for key in ('torsion', 'horizontal_compatibility', 'vertical_compatibility'):
                worst[key] = max(worst[key], structure[key])
            worst['nonlinear_variants'] = max(worst['nonlinear_variants'], float(np.max(np.abs(
                geometry.nonlinear - geometry.nonlinear_from_spray))))
            worst['berwald_torsion'] = max(worst['berwald_torsion'], float(np.max(np.abs(
                geometry.berwald - np.swapaxes(geometry.berwald, -1, -2)))))
            per_point.append({'x': x.tolist(),
                              'max_abs_chern': float(np.max(np.abs(geometry.chern))),
                              'max_abs_berwald': float(np.max(np.abs(geometry.berwald))),
                              'berwald_defect': float(np.max(np.abs(geometry.berwald_compatibility_defect))),
                              'landsberg': float(np.max(np.abs(geometry.landsberg)))})

        tolerances = {'torsion': 1e-10, 'horizontal_compatibility': 1e-6, 'vertical_compatibility': 1e-6,
                      'nonlinear_variants': 1e-7, 'berwald_torsion': 1e-10}
        residuals = {'connections': {key: Residual(worst[key], tolerances[key], count, seed) for key in worst}}
        return {}, residuals, {'points': per_point}

    def _analyze_geodesic(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        x0 = fs.chart.center
        y0 = np.eye(fs.dimension)[0]
        geodesic = integrate_geodesic(fs, x0, y0, numeric['geodesic_length'], chart=fs.chart,
                                      integrator=config.integrator())
        result = geodesic.result
        residuals = {'geodesic': {'first_integral': Residual(result.F_drift, 10 * numeric['ode_rtol'],
                                                             len(geodesic.ts), numeric['seed'])}}
        return {}, residuals, {'x0': x0.tolist(), 'y0': y0.tolist(), 'end_point': result.end_point.tolist(),
                               'end_velocity': result.direction.tolist(), 'ode_stats': result.ode_stats.to_dict()}

    def _analyze_transport(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        seed = numeric['seed']
        rng = np.random.default_rng(seed)
        loops = sample_loops(fs.chart, rng, numeric['rigidity_loops'], numeric['loop_side'])
        integrator = config.integrator()
        worst_F = worst_norm = 0.0
        results = []
        for loop in loops:
            y_start = indicatrix_points(fs, loop.start, 8, seed)[0]
            result = horizontal_transport(fs, 'chern', loop, y_start, integrator=integrator)
            worst_F = max(worst_F, result.F_drift)
            worst_norm = max(worst_norm, result.section_norm_drift)
            results.append(dict(result.to_dict(), curve=loop.describe()))
        tolerance = 10 * numeric['ode_rtol']
        residuals = {'transport': {
            'chern_F_drift': Residual(worst_F, max(tolerance, numeric['tolerance']), len(loops), seed),
        }}
        return {}, residuals, {'loops': results, 'section_norm_drift': worst_norm}

    def _analyze_average(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        seed = numeric['seed']
        scheme = QuadratureScheme.default(fs.dimension, numeric['quadrature_nodes'])
        points, _ = self._samples(fs, numeric)
        torsion = quadrature = 0.0
        per_point = []
        for x in points:
            mean = averaged_connection(fs, x, 'chern', scheme)
            h = averaged_metric(fs, x, scheme)
            sampling = sample_indicatrix(fs, x, scheme)
            torsion = max(torsion, mean.coefficients.diagnostics['torsion'])
            quadrature = max(quadrature, mean.quadrature_error)
            per_point.append({'x': x.tolist(), 'averaged_connection': mean.gamma.tolist(),
                              'averaged_metric': h.tolist(), 'indicatrix_volume': sampling.total_volume,
                              'quadrature_error': mean.quadrature_error})
        residuals = {'average': {
            'torsion': Residual(torsion, 1e-10, len(points), seed),
            'quadrature_error': Residual(quadrature, numeric['tolerance'], len(points), seed),
        }}
        return {}, residuals, {'scheme': scheme.to_dict(), 'points': per_point}

    def _analyze_classify(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        classifier = StructureClassifier(fs, integrator=config.integrator())
        criteria = ['berwald', 'landsberg', 'rigidity', 'interpolation']
        if 'holonomy' in config.analyses and fs.dimension == 2:
            criteria.append('holonomy')
        report = classifier.classify(
            tolerance=numeric['tolerance'], seed=numeric['seed'], sample_points=numeric['sample_points'],
            sample_directions=numeric['sample_directions'], quadrature_nodes=numeric['quadrature_nodes'],
            rigidity_loops=numeric['rigidity_loops'], loop_side=numeric['loop_side'],
            indicatrix_samples=numeric['indicatrix_samples'], t_grid=numeric['t_grid'],
            holonomy_sizes=numeric['holonomy_sizes'], holonomy_loops=numeric['holonomy_loops'],
            holonomy_base=numeric['holonomy_base'], criteria=criteria)
        data = report.to_dict()
        return report.verdicts, data['residuals'], {key: data[key] for key in
                                                    ('sampling', 'criteria', 'consistency', 'flags')}

    def _analyze_holonomy(self, fs: FinslerStructure, config: RunConfig):
        numeric = config.numeric
        if 'classify' in config.analyses and fs.dimension == 2:
            return {}, {}, {'note': 'holonomy reported with the classification'}
        scheme = QuadratureScheme.default(fs.dimension, numeric['quadrature_nodes']) \
            if fs.dimension in (2, 3) else None
        sample = holonomy_sample(fs, numeric['holonomy_base'], numeric['holonomy_sizes'], numeric['holonomy_loops'],
                                 integrator=config.integrator(), scheme=scheme)
        classification = holonomy_classify(sample, numeric['tolerance'], numeric['seed'])
        residuals = {'holonomy_class': dict(classification.residuals,
                                            inverse_loop=Residual(sample.inverse_residual, 1e-7,
                                                                  len(sample.loops), numeric['seed']))}
        return ({'holonomy_class': classification.holonomy_class}, residuals,
                dict(classification.to_dict(), sample=sample.to_dict()))
