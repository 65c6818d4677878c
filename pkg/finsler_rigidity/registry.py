"""
Metric Registry
Built-in metric families, named presets and presets stored as JSON files
"""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .errors import ConfigError
from .structures import Chart, FinslerStructure, build_structure

PACKAGE_METRICS_DIR = Path(__file__).resolve().parent.parent / 'metrics'


class MetricRegistry:
    """Families of Finsler structures and presets built from them"""

    def __init__(self, metrics_dir: Optional[str] = None):
        self.metrics_dir = Path(metrics_dir) if metrics_dir else PACKAGE_METRICS_DIR
        self.logger = logging.getLogger(__name__)

        # Parameter documentation per family
        self.family_docs = {
            'euclidean': {
                'description': 'F = sqrt(y1^2 + ... + yn^2)',
                'params': {},
            },
            'riemannian': {
                'description': 'F = sqrt(a_ij(x) y^i y^j)',
                'params': {'matrix': 'n x n symmetric matrix of expressions in x1..xn'},
            },
            'randers': {
                'description': 'F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i',
                'params': {'alpha': 'optional n x n matrix of expressions (identity by default)',
                           'beta': 'n covector component expressions; |b|_a < 1 for strong convexity'},
            },
            'custom': {
                'description': 'Any expression in x1..xn, y1..yn, positively 1-homogeneous in y',
                'params': {'expression': 'metric expression, e.g. sqrt(y1^2+y2^2)+0.5*y1'},
            },
        }
        self.family_builders: Dict[str, Callable[[int, Dict[str, Any], str, Chart], FinslerStructure]] = {}

        # Built-in presets
        self.presets = {
            'euclidean_2d': {
                'description': 'Flat plane',
                'metric': {'family': 'euclidean', 'dimension': 2, 'params': {}},
                'chart': {'lower': [-1.0, -1.0], 'upper': [1.0, 1.0]},
            },
            'euclidean_3d': {
                'description': 'Flat space',
                'metric': {'family': 'euclidean', 'dimension': 3, 'params': {}},
                'chart': {'lower': [-1.0, -1.0, -1.0], 'upper': [1.0, 1.0, 1.0]},
            },
            'hyperbolic_half_plane': {
                'description': 'Poincare half-plane, curvature -1',
                'metric': {'family': 'riemannian', 'dimension': 2,
                           'params': {'matrix': [['1/x2^2', '0'], ['0', '1/x2^2']]}},
                'chart': {'lower': [-1.0, 0.2], 'upper': [1.0, 3.0]},
            },
            'sphere_patch': {
                'description': 'Unit sphere in polar coordinates away from the poles',
                'metric': {'family': 'riemannian', 'dimension': 2,
                           'params': {'matrix': [['1', '0'], ['0', 'sin(x1)^2']]}},
                'chart': {'lower': [0.5, -1.0], 'upper': [2.5, 1.0]},
            },
            'randers_berwald': {
                'description': 'Minkowski Randers norm with constant drift, Berwald',
                'metric': {'family': 'randers', 'dimension': 2, 'params': {'beta': ['0.5', '0']}},
                'chart': {'lower': [-1.0, -1.0], 'upper': [1.0, 1.0]},
            },
            'randers_non_berwald': {
                'description': 'Randers metric with drift 0.3*x2*dx1, not Berwald',
                'metric': {'family': 'randers', 'dimension': 2, 'params': {'beta': ['0.3*x2', '0']}},
                'chart': {'lower': [-1.0, 0.5], 'upper': [1.0, 1.5]},
            },
            'randers_near_degenerate': {
                'description': 'Randers norm with |b| = 0.999, barely strongly convex',
                'metric': {'family': 'randers', 'dimension': 2, 'params': {'beta': ['0.999', '0']}},
                'chart': {'lower': [-1.0, -1.0], 'upper': [1.0, 1.0]},
            },
        }
        self.builtin_presets = set(self.presets)
        self._load_stored_presets()

    def _load_stored_presets(self):
        """Pick up presets saved as preset_<name>.json in the metrics directory"""
        if not self.metrics_dir.exists():
            return
        for preset_file in sorted(self.metrics_dir.glob('preset_*.json')):
            name = preset_file.stem[len('preset_'):]
            if name in self.presets:
                continue
            try:
                with open(preset_file, 'r', encoding='utf-8') as f:
                    self.presets[name] = json.load(f)
                self.logger.debug(f"Loaded stored preset: {name}")
            except (OSError, json.JSONDecodeError) as e:
                self.logger.warning(f"Could not load preset file {preset_file}: {e}")

    def list_families(self) -> List[str]:
        return sorted(set(self.family_docs) | set(self.family_builders))

    def list_presets(self) -> List[str]:
        return sorted(self.presets)

    def get_preset(self, name: str) -> Dict[str, Any]:
        if name not in self.presets:
            raise ConfigError(f"Unknown metric preset '{name}' (known: {', '.join(self.list_presets())})",
                              'metric.preset')
        return self.presets[name]

    def register_family(self, name: str, description: str, params: Dict[str, str],
                        builder: Callable[[int, Dict[str, Any], str, Chart], FinslerStructure]):
        """Add a family; `builder(dimension, params, name, chart)` returns the structure"""
        self.family_docs[name] = {'description': description, 'params': dict(params)}
        self.family_builders[name] = builder
        self.logger.info(f"Registered metric family: {name}")

    def register_preset(self, name: str, preset: Dict[str, Any], save: bool = False) -> bool:
        """Add a preset, optionally writing it to the metrics directory"""
        if 'metric' not in preset:
            raise ConfigError(f"Preset '{name}' has no metric section", f"presets.{name}")
        self.presets[name] = preset
        if save:
            try:
                self.metrics_dir.mkdir(parents=True, exist_ok=True)
                with open(self.metrics_dir / f"preset_{name}.json", 'w', encoding='utf-8') as f:
                    json.dump(preset, f, indent=2)
            except OSError as e:
                self.logger.error(f"Error saving preset {name}: {e}")
                return False
        self.logger.info(f"Registered metric preset: {name}")
        return True

    def build(self, metric: Dict[str, Any], chart: Optional[Dict[str, Any]] = None) -> FinslerStructure:
        """Structure for a resolved metric section and optional chart section"""
        if 'preset' in metric:
            preset = self.get_preset(metric['preset'])
            name = metric.get('name') or metric['preset']
            return self.build(dict(preset['metric'], name=name), chart or preset.get('chart'))

        family = metric.get('family')
        if family is None:
            raise ConfigError("Metric needs a preset or a family", 'metric.family')
        if 'dimension' not in metric:
            raise ConfigError("Metric family needs a dimension", 'metric.dimension')
        dimension = int(metric['dimension'])
        params = dict(metric.get('params') or {})
        if 'expression' in metric:
            params['expression'] = metric['expression']
        chart_box = self._chart(chart, dimension)
        name = metric.get('name') or family

        if family in self.family_builders:
            return self.family_builders[family](dimension, params, name, chart_box)
        return build_structure(family, dimension, params, name, chart_box)

    @staticmethod
    def _chart(chart: Optional[Dict[str, Any]], dimension: int) -> Chart:
        if chart is None:
            return Chart.cube(dimension)
        lower, upper = chart.get('lower'), chart.get('upper')
        if lower is None or upper is None or len(lower) != dimension or len(upper) != dimension:
            raise ConfigError(f"Chart needs lower and upper bounds of length {dimension}", 'chart')
        return Chart(lower, upper)

    def describe(self) -> List[Dict[str, Any]]:
        """Families with parameter docs, then presets"""
        entries = [{'kind': 'family', 'name': name,
                    'description': self.family_docs[name]['description'],
                    'params': self.family_docs[name]['params']} for name in self.list_families()]
        entries.extend({'kind': 'preset', 'name': name,
                        'description': self.presets[name].get('description', ''),
                        'family': self.presets[name]['metric'].get('family', 'custom'),
                        'dimension': self.presets[name]['metric'].get('dimension')}
                       for name in self.list_presets())
        return entries

    def write_index(self) -> Path:
        """Write metric_index.json listing every preset"""
        self.metrics_dir.mkdir(parents=True, exist_ok=True)
        index = {
            'version': '1.0.0',
            'presets': {name: {'config': f"preset_{name}.json",
                               'description': self.presets[name].get('description', '')}
                        for name in self.list_presets()},
        }
        index_path = self.metrics_dir / 'metric_index.json'
        with open(index_path, 'w', encoding='utf-8') as f:
            json.dump(index, f, indent=2)
        return index_path
