"""
Run Configuration
Strict loading of run files (JSON or TOML) with defaults and environment overrides
"""

import copy
import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .errors import ConfigError
from .ode import OdeIntegrator

logger = logging.getLogger(__name__)

ANALYSES = ('tensors', 'connections', 'geodesic', 'transport', 'average', 'classify', 'holonomy')
ASSERTIONS = ('berwald', 'landsberg', 'rigidity')
ODE_METHODS = ('DOP853', 'RK45', 'RK4')

TOP_LEVEL_KEYS = {'metric', 'chart', 'analyses', 'numeric', 'output', 'assert'}
METRIC_KEYS = {'preset', 'family', 'dimension', 'params', 'expression', 'name'}
CHART_KEYS = {'lower', 'upper'}
OUTPUT_KEYS = {'report', 'csv'}
FAMILY_PARAMS = {
    'euclidean': set(),
    'riemannian': {'matrix'},
    'randers': {'alpha', 'beta'},
    'custom': {'expression'},
}

DEFAULT_NUMERIC = {
    'tolerance': 1e-6,
    'quadrature_nodes': 64,
    'ode_rtol': 1e-9,
    'ode_atol': 1e-11,
    'ode_method': 'DOP853',
    'seed': 42,
    'sample_points': 5,
    'sample_directions': 16,
    'rigidity_loops': 3,
    'loop_side': 0.5,
    'geodesic_length': 1.0,
    'holonomy_sizes': [0.2, 0.4],
    'holonomy_loops': 8,
    'holonomy_base': None,
    't_grid': [0.0, 0.25, 0.5, 0.75, 1.0],
    'indicatrix_samples': 16,
    'record_timings': False,
}

DEFAULT_OUTPUT = {'report': 'report.json', 'csv': None}


@dataclass
class RunConfig:
    metric: Dict[str, Any]
    chart: Optional[Dict[str, Any]]
    analyses: List[str]
    numeric: Dict[str, Any]
    output: Dict[str, Any]
    assertion: Optional[str] = None
    source: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Fully resolved configuration, as embedded in reports"""
        return {
            'metric': copy.deepcopy(self.metric),
            'chart': copy.deepcopy(self.chart),
            'analyses': list(self.analyses),
            'numeric': copy.deepcopy(self.numeric),
            'output': dict(self.output),
            'assert': self.assertion,
        }

    def integrator(self) -> OdeIntegrator:
        return OdeIntegrator(self.numeric['ode_method'], self.numeric['ode_rtol'], self.numeric['ode_atol'])


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a JSON or TOML run file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} does not exist", str(path))
    try:
        if path.suffix == '.toml':
            with open(path, 'rb') as f:
                return tomllib.load(f)
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Could not parse {path}: {e}", str(path)) from e


def _reject_unknown(section: Dict[str, Any], allowed, location: str):
    if not isinstance(section, dict):
        raise ConfigError(f"Expected a table, got {type(section).__name__}", location)
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        key = unknown[0]
        raise ConfigError(f"Unknown key '{key}'", f"{location}.{key}" if location else key)


def _check_metric(metric: Dict[str, Any]):
    _reject_unknown(metric, METRIC_KEYS, 'metric')
    if 'preset' in metric:
        extra = set(metric) - {'preset', 'name'}
        if extra:
            raise ConfigError(f"A preset metric takes no other keys than name, got {sorted(extra)}",
                              f"metric.{sorted(extra)[0]}")
        return
    if 'family' not in metric:
        raise ConfigError("Metric needs either a preset or a family", 'metric')
    if 'dimension' not in metric:
        raise ConfigError("Metric family needs a dimension", 'metric.dimension')
    if not isinstance(metric['dimension'], int) or metric['dimension'] < 2:
        raise ConfigError(f"Dimension must be an integer of at least 2, got {metric['dimension']!r}",
                          'metric.dimension')
    allowed = FAMILY_PARAMS.get(metric['family'])
    if allowed is not None and 'params' in metric:
        _reject_unknown(metric['params'], allowed, 'metric.params')


def _check_numeric(numeric: Dict[str, Any]):
    def require(key, condition, message):
        if not condition:
            raise ConfigError(f"{message}, got {numeric[key]!r}", f"numeric.{key}")

    for key in ('tolerance', 'ode_rtol', 'ode_atol', 'loop_side', 'geodesic_length'):
        require(key, isinstance(numeric[key], (int, float)) and numeric[key] > 0, "Must be positive")
    require('quadrature_nodes', isinstance(numeric['quadrature_nodes'], int) and numeric['quadrature_nodes'] >= 8,
            "Must be an integer of at least 8")
    require('ode_method', numeric['ode_method'] in ODE_METHODS, f"Must be one of {list(ODE_METHODS)}")
    require('sample_points', isinstance(numeric['sample_points'], int) and numeric['sample_points'] >= 3,
            "Must be an integer of at least 3")
    require('sample_directions', isinstance(numeric['sample_directions'], int)
            and numeric['sample_directions'] >= 8, "Must be an integer of at least 8")
    require('indicatrix_samples', isinstance(numeric['indicatrix_samples'], int)
            and numeric['indicatrix_samples'] >= 8, "Must be an integer of at least 8")
    for key in ('rigidity_loops', 'holonomy_loops'):
        require(key, isinstance(numeric[key], int) and numeric[key] >= 1, "Must be a positive integer")
    require('seed', isinstance(numeric['seed'], int), "Must be an integer")
    require('t_grid', isinstance(numeric['t_grid'], list) and numeric['t_grid']
            and all(0.0 <= t <= 1.0 for t in numeric['t_grid']), "Must be a non-empty list in [0, 1]")
    require('holonomy_sizes', isinstance(numeric['holonomy_sizes'], list) and numeric['holonomy_sizes']
            and all(s > 0 for s in numeric['holonomy_sizes']), "Must be a non-empty list of positive sizes")
    require('record_timings', isinstance(numeric['record_timings'], bool), "Must be true or false")


def _output_path(path: Optional[str], output_dir: Optional[str]) -> Optional[str]:
    if path is None or output_dir is None or Path(path).is_absolute():
        return path
    return str(Path(output_dir) / path)


def load_run_config(source: Union[str, Path, Dict[str, Any]], seed: Optional[int] = None,
                    out: Optional[str] = None, assertion: Optional[str] = None) -> RunConfig:
    """Resolve a run configuration

    Precedence, lowest first: built-in defaults, FINSLER_SEED and
    FINSLER_OUTPUT_DIR from the environment, the file, explicit arguments.
    """
    if isinstance(source, dict):
        raw, origin = copy.deepcopy(source), None
    else:
        raw, origin = read_config_file(source), str(source)

    _reject_unknown(raw, TOP_LEVEL_KEYS, '')
    if 'metric' not in raw:
        raise ConfigError("Config needs a metric section", 'metric')
    metric = raw['metric']
    _check_metric(metric)

    chart = raw.get('chart')
    if chart is not None:
        _reject_unknown(chart, CHART_KEYS, 'chart')
        if 'lower' not in chart or 'upper' not in chart:
            raise ConfigError("Chart needs lower and upper bounds", 'chart')
        if any(u <= l for l, u in zip(chart['lower'], chart['upper'])):
            raise ConfigError("Chart box is empty", 'chart')

    analyses = raw.get('analyses', ['classify'])
    if not isinstance(analyses, list):
        raise ConfigError("Analyses must be a list", 'analyses')
    for name in analyses:
        if name not in ANALYSES:
            raise ConfigError(f"Unknown analysis '{name}' (known: {', '.join(ANALYSES)})", 'analyses')
    analyses = [name for name in ANALYSES if name in analyses]

    numeric = dict(DEFAULT_NUMERIC)
    if os.environ.get('FINSLER_SEED'):
        try:
            numeric['seed'] = int(os.environ['FINSLER_SEED'])
        except ValueError:
            raise ConfigError(f"FINSLER_SEED must be an integer, got {os.environ['FINSLER_SEED']!r}",
                              'env.FINSLER_SEED')
    user_numeric = raw.get('numeric', {})
    _reject_unknown(user_numeric, DEFAULT_NUMERIC, 'numeric')
    numeric.update(user_numeric)
    if seed is not None:
        numeric['seed'] = int(seed)
    _check_numeric(numeric)

    output = dict(DEFAULT_OUTPUT)
    user_output = raw.get('output', {})
    _reject_unknown(user_output, OUTPUT_KEYS, 'output')
    output.update(user_output)
    if out is not None:
        output['report'] = out
    output_dir = os.environ.get('FINSLER_OUTPUT_DIR')
    output = {key: _output_path(value, output_dir) for key, value in output.items()}

    assertion = assertion if assertion is not None else raw.get('assert')
    if assertion is not None and assertion not in ASSERTIONS:
        raise ConfigError(f"Unknown assertion '{assertion}' (known: {', '.join(ASSERTIONS)})", 'assert')

    logger.debug(f"Resolved run config from {origin or 'mapping'}: analyses {analyses}")
    return RunConfig(metric, chart, analyses, numeric, output, assertion, origin)
