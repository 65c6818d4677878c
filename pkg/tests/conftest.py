import json
import sys
from pathlib import Path

import numpy as np
from pytest import fixture

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from finsler_rigidity.registry import MetricRegistry  # noqa: E402
from finsler_rigidity.structures import build_structure  # noqa: E402


@fixture(scope='session')
def registry():
    return MetricRegistry()


@fixture(scope='session')
def euclidean(registry):
    return registry.build({'preset': 'euclidean_2d'})


@fixture(scope='session')
def euclidean_3d(registry):
    return registry.build({'preset': 'euclidean_3d'})


@fixture(scope='session')
def sphere(registry):
    return registry.build({'preset': 'sphere_patch'})


@fixture(scope='session')
def hyperbolic(registry):
    return registry.build({'preset': 'hyperbolic_half_plane'})


@fixture(scope='session')
def randers_berwald(registry):
    return registry.build({'preset': 'randers_berwald'})


@fixture(scope='session')
def randers_non_berwald(registry):
    return registry.build({'preset': 'randers_non_berwald'})


@fixture(scope='session')
def randers_near_degenerate(registry):
    return registry.build({'preset': 'randers_near_degenerate'})


@fixture(scope='session')
def randers_3d():
    return build_structure('randers', 3, {'beta': ['0.2', '0.1*x1', '0']}, 'randers_3d')


@fixture
def rng():
    return np.random.default_rng(20240601)


@fixture
def write_config(tmp_path):
    """Write a run configuration into tmp_path, with the report kept there too"""
    def write(config, name='run.json'):
        config = dict(config)
        output = dict(config.get('output', {}))
        output.setdefault('report', str(tmp_path / 'report.json'))
        config['output'] = output
        path = tmp_path / name
        path.write_text(json.dumps(config))
        return path
    return write


# Small numeric settings that keep classification runs quick
FAST_NUMERIC = {
    'sample_points': 3,
    'sample_directions': 8,
    'quadrature_nodes': 32,
    'rigidity_loops': 1,
    'loop_side': 0.3,
    'indicatrix_samples': 8,
    't_grid': [0.0, 1.0],
    'holonomy_loops': 4,
}


@fixture
def fast_numeric():
    return dict(FAST_NUMERIC)
